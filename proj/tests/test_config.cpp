#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "xcl/errors.hpp"
#include "xcl/experiment_config.hpp"
#include "xcl/results.hpp"

using namespace xcl;

namespace {

ExperimentConfig parse(const std::string& text, const DataKind* forced = nullptr) {
  std::istringstream in(text);
  return parse_config(in, forced);
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("xcl-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<ResultRow> sample_rows(std::uint64_t seed, const std::string& hash) {
  return {{"xcl:distill", seed, "kd", "top1", 0.1 + 1.0 / 3.0, hash},
          {"xcl:distill", seed, "kd", "gap", -2.5e-17, hash}};
}

}  // namespace

TEST_SUITE("closed_form") {

TEST_CASE("sweep axes carry the paper's values") {
  const ExperimentConfig cfg = ExperimentConfig::defaults(DataKind::kBlobs);
  CHECK(cfg.sweep.temperatures == std::vector<double>{1.0, 1.5, 2.0, 5.0, 10.0});
  CHECK(cfg.sweep.smoothing == std::vector<double>{0.1, 0.18, 0.4, 0.8});
  CHECK(cfg.sweep.fractions == std::vector<double>{1.0, 0.25, 1.0 / 16.0, 1.0 / 64.0});
  CHECK(cfg.sweep.samplers == std::vector<SamplerKind>{SamplerKind::kGaussianImage, SamplerKind::kNoise,
                                                       SamplerKind::kMix, SamplerKind::kGeneratorNoMix,
                                                       SamplerKind::kGenerator});
}

TEST_CASE("default lambda grid is 0, 0.1, ..., 1") {
  const ExperimentConfig cfg = ExperimentConfig::defaults(DataKind::kRegression);
  CHECK(cfg.curve.lambda_steps == 11);
}

TEST_CASE("sampler kinds map to method names") {
  CHECK(method_name(SamplerKind::kEmpirical) == "kd");
  CHECK(method_name(SamplerKind::kMix) == "xcl-mix");
}

}  // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("keys override the defaults of the chosen data kind") {
  const ExperimentConfig cfg = parse(
      "# comment\n"
      "data.kind = regression\n"
      "student.hidden = 8,8\n"
      "  loss.kind=kl   # trailing\n"
      "run.seeds = 3, 4\n");
  CHECK(cfg.data == DataKind::kRegression);
  CHECK(cfg.student.hidden == std::vector<std::size_t>{8, 8});
  CHECK(cfg.loss.kind == LossKind::kGaussianKL);
  CHECK(cfg.run.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(cfg.teacher.hidden == ExperimentConfig::defaults(DataKind::kRegression).teacher.hidden);
}

TEST_CASE("entries round-trip through the parser") {
  ExperimentConfig cfg = ExperimentConfig::defaults(DataKind::kBlobs);
  cfg.set("loss.temperature", "2.5");
  cfg.set("sampler.kind", "cutmix");
  std::ostringstream text;
  for (const auto& [k, v] : cfg.entries()) text << k << " = " << v << '\n';
  const ExperimentConfig back = parse(text.str());
  CHECK(back.entries() == cfg.entries());
  CHECK(back.hash() == cfg.hash());
}

TEST_CASE("seeds and output do not enter the hash") {
  ExperimentConfig a = ExperimentConfig::defaults(DataKind::kBlobs);
  ExperimentConfig b = a;
  b.set("run.seeds", "1,2,3");
  b.set("run.output", "elsewhere");
  CHECK(a.hash() == b.hash());
  b.set("student.lr", "0.5");
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 16);
}

TEST_CASE("unknown key names the line") {
  try {
    parse("run.name = x\n\nstudent.layers = 3\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("malformed lines and values are rejected with the line") {
  CHECK_THROWS_WITH(parse("run.name\n"), doctest::Contains("line 1"));
  CHECK_THROWS_WITH(parse("run.name = a\nstudent.lr = fast\n"), doctest::Contains("line 2"));
  CHECK_THROWS_WITH(parse("student.lr = 1\nstudent.lr = 2\n"), doctest::Contains("line 2"));
}

TEST_CASE("loss kind must fit the data kind") {
  CHECK_THROWS_AS(parse("loss.kind = kl\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("data.kind = regression\nloss.kind = kd\n").validate(), ConfigError);
}

TEST_CASE("forced data kind conflicts are errors") {
  const DataKind need = DataKind::kRegression;
  CHECK_THROWS_AS(parse("data.kind = blobs\n", &need), ConfigError);
  CHECK(parse("student.epochs = 3\n", &need).data == DataKind::kRegression);
}

TEST_CASE("invalid values fail validation") {
  ExperimentConfig cfg = ExperimentConfig::defaults(DataKind::kBlobs);
  cfg.set("loss.temperature", "0");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("results") {

TEST_CASE("CSV round-trip keeps every double") {
  const auto rows = sample_rows(7, "00112233aabbccdd");
  std::stringstream ss;
  write_results_csv(ss, rows);
  CHECK(ss.str().rfind(std::string(kResultHeader) + "\n", 0) == 0);
  CHECK(read_results_csv(ss) == rows);
}

TEST_CASE("JSON round-trip keeps every double") {
  const auto rows = sample_rows(7, "00112233aabbccdd");
  std::stringstream ss;
  write_results_json(ss, rows);
  CHECK(read_results_json(ss) == rows);
}

TEST_CASE("non-finite values are refused") {
  auto rows = sample_rows(1, "h");
  rows[0].value = std::nan("");
  std::ostringstream out;
  CHECK_THROWS_AS(write_results_csv(out, rows), NumericError);
}

TEST_CASE("bad CSV header names line 1") {
  std::istringstream in("experiment,seed\n");
  CHECK_THROWS_WITH_AS(read_results_csv(in), doctest::Contains("line 1"), ParseError);
}

TEST_CASE("store merges seeds and refuses another config") {
  const auto dir = scratch_dir("store");
  const std::string path = (dir / "r.csv").string();
  store_results(path, sample_rows(2, "aaaa"), false);
  store_results(path, sample_rows(1, "aaaa"), false);
  store_results(path, sample_rows(2, "aaaa"), false);
  std::ifstream in(path);
  const auto rows = read_results_csv(in);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].seed == 1);
  CHECK(rows[3].seed == 2);
  CHECK_THROWS_AS(store_results(path, sample_rows(3, "bbbb"), false), ConfigError);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
