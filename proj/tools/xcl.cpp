// xcl: experiment runner.
//
//   xcl <experiment> [--config FILE] [--seed N] [--out DIR] [--json] [--set key=value]...
//
// Exit codes: 0 ok, 1 other failure, 2 bad config or arguments, 3 missing
// artifact, 4 non-finite loss.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xcl/errors.hpp"
#include "xcl/experiment_config.hpp"
#include "xcl/experiments.hpp"
#include "xcl/network.hpp"
#include "xcl/results.hpp"

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumeric = 4;

struct Options {
  std::string config;
  std::vector<std::uint64_t> seed;
  std::string out;
  bool json = false;
  std::vector<std::string> overrides;
};

std::size_t threads_from_env() {
  const char* env = std::getenv("XCL_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw xcl::ConfigError(std::string("XCL_THREADS must be a positive integer, got '") + env + "'");
  return static_cast<std::size_t>(v);
}

xcl::ExperimentConfig resolve_config(xcl::ExperimentKind kind, const Options& opt) {
  xcl::DataKind forced{};
  const bool fixed = xcl::required_data_kind(kind, forced);
  xcl::ExperimentConfig cfg = !opt.config.empty()
                                  ? xcl::load_config(opt.config, fixed ? &forced : nullptr)
                                  : xcl::ExperimentConfig::defaults(fixed ? forced : xcl::DataKind::kBlobs);
  for (const auto& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw xcl::ConfigError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    if (key == "data.kind") throw xcl::ConfigError("data.kind selects defaults; set it in the config file");
    cfg.set(key, kv.substr(eq + 1));
  }
  if (!opt.seed.empty()) cfg.run.seeds = opt.seed;
  if (!opt.out.empty()) cfg.run.output = opt.out;
  cfg.validate();
  return cfg;
}

int run(xcl::ExperimentKind kind, const Options& opt) {
  xcl::set_eval_threads(threads_from_env());
  const xcl::ExperimentConfig cfg = resolve_config(kind, opt);
  std::vector<xcl::ResultRow> rows;
  for (const auto seed : cfg.run.seeds) {
    auto part = xcl::run_experiment(kind, cfg, seed);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const auto path = std::filesystem::path(cfg.run.output) / (xcl::to_string(kind) + (opt.json ? ".json" : ".csv"));
  xcl::store_results(path.string(), rows, opt.json);
  std::cout << "wrote " << rows.size() << " rows to " << path.string() << " (config " << cfg.hash() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-distillation experiment runner"};
  app.require_subcommand(1);
  Options opt;

  const std::vector<std::pair<xcl::ExperimentKind, std::string>> commands{
      {xcl::ExperimentKind::kTrainTeacher, "Train the teacher on split A and save it"},
      {xcl::ExperimentKind::kDistill, "Distill a student from a saved teacher"},
      {xcl::ExperimentKind::kObservation1, "Students trained on high/low entropy halves of B"},
      {xcl::ExperimentKind::kObservation2, "Students trained on the samples the teacher gets wrong"},
      {xcl::ExperimentKind::kSweep, "Sweep temperature, smoothing, data size, imbalance or sampler"},
      {xcl::ExperimentKind::kCurveUncertainty, "Predicted sigma against the mixing coefficient"},
  };
  std::vector<std::pair<CLI::App*, xcl::ExperimentKind>> subs;
  for (const auto& [kind, help] : commands) {
    CLI::App* sub = app.add_subcommand(xcl::to_string(kind), help);
    sub->add_option("--config", opt.config, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "run this seed instead of run.seeds")->expected(1);
    sub->add_option("--out", opt.out, "output directory (overrides run.output)");
    sub->add_flag("--json", opt.json, "write results as a JSON array instead of CSV");
    sub->add_option("--set", opt.overrides, "override a config key, key=value (repeatable)");
    subs.emplace_back(sub, kind);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (const auto& [sub, kind] : subs) {
      if (sub->parsed()) return run(kind, opt);
    }
  } catch (const xcl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const xcl::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const xcl::MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return kExitMissing;
  } catch (const xcl::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
