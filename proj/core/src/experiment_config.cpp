#include "xcl/experiment_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "xcl/errors.hpp"
#include "xcl/text_io.hpp"

namespace xcl {
namespace {

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ConfigError(key + ": invalid number '" + text + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError(key + ": invalid non-negative integer '" + text + "'");
  }
  return v;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(to_u64(key, text));
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> list_items(const std::string& text) {
  std::vector<std::string> items;
  for (auto item : text::split(text, ',')) {
    items.emplace_back(text::trim(item));
  }
  if (items.size() == 1 && items[0].empty()) items.clear();
  return items;
}

template <typename T, typename Fn>
std::vector<T> to_list(const std::string& text, Fn&& parse) {
  std::vector<T> out;
  for (const auto& item : list_items(text)) out.push_back(parse(item));
  return out;
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& values, Fn&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += fmt(values[i]);
  }
  return out;
}

std::string fmt_double(double v) { return text::format_double(v); }
std::string fmt_size(std::size_t v) { return std::to_string(v); }
std::string fmt_bool(bool v) { return v ? "true" : "false"; }

LossKind parse_loss_kind(const std::string& text) {
  if (text == "ce") return LossKind::kCrossEntropySoft;
  if (text == "kd") return LossKind::kKDCategorical;
  if (text == "nll") return LossKind::kGaussianNLL;
  if (text == "kl") return LossKind::kGaussianKL;
  throw ConfigError("unknown loss '" + text + "' (expected ce, kd, nll or kl)");
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

void add_model_fields(std::vector<Field>& f, const std::string& prefix, ModelConfig ExperimentConfig::*m) {
  f.push_back({prefix + ".hidden", [m](const ExperimentConfig& c) { return join((c.*m).hidden, fmt_size); },
               [m, prefix](ExperimentConfig& c, const std::string& v) {
                 (c.*m).hidden = to_list<std::size_t>(v, [&](const std::string& s) { return to_size(prefix + ".hidden", s); });
               }});
  f.push_back({prefix + ".activation", [m](const ExperimentConfig& c) { return to_string((c.*m).activation); },
               [m](ExperimentConfig& c, const std::string& v) {
                 try {
                   (c.*m).activation = parse_activation(v);
                 } catch (const std::exception& e) {
                   throw ConfigError(e.what());
                 }
               }});
  auto size_field = [&](const std::string& name, std::size_t ModelConfig::*field) {
    const std::string key = prefix + "." + name;
    f.push_back({key, [m, field](const ExperimentConfig& c) { return fmt_size((c.*m).*field); },
                 [m, field, key](ExperimentConfig& c, const std::string& v) { (c.*m).*field = to_size(key, v); }});
  };
  auto real_field = [&](const std::string& name, double ModelConfig::*field) {
    const std::string key = prefix + "." + name;
    f.push_back({key, [m, field](const ExperimentConfig& c) { return fmt_double((c.*m).*field); },
                 [m, field, key](ExperimentConfig& c, const std::string& v) { (c.*m).*field = to_double(key, v); }});
  };
  size_field("members", &ModelConfig::members);
  size_field("epochs", &ModelConfig::epochs);
  size_field("batch_size", &ModelConfig::batch_size);
  real_field("lr", &ModelConfig::lr);
  real_field("momentum", &ModelConfig::momentum);
  real_field("weight_decay", &ModelConfig::weight_decay);
  real_field("decay_at", &ModelConfig::decay_at);
  real_field("decay_factor", &ModelConfig::decay_factor);
}

#define XCL_SIZE(key, member) \
  f.push_back({key, [](const ExperimentConfig& c) { return fmt_size(c.member); }, \
               [](ExperimentConfig& c, const std::string& v) { c.member = to_size(key, v); }})
#define XCL_REAL(key, member) \
  f.push_back({key, [](const ExperimentConfig& c) { return fmt_double(c.member); }, \
               [](ExperimentConfig& c, const std::string& v) { c.member = to_double(key, v); }})
#define XCL_BOOL(key, member) \
  f.push_back({key, [](const ExperimentConfig& c) { return fmt_bool(c.member); }, \
               [](ExperimentConfig& c, const std::string& v) { c.member = to_bool(key, v); }})

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"data.kind", [](const ExperimentConfig& c) { return to_string(c.data); },
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "blobs") c.data = DataKind::kBlobs;
                   else if (v == "regression") c.data = DataKind::kRegression;
                   else throw ConfigError("data.kind: expected blobs or regression, got '" + v + "'");
                 }});
    f.push_back({"run.name", [](const ExperimentConfig& c) { return c.run.name; },
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v.empty() || v.find_first_of(",\"\n") != std::string::npos) {
                     throw ConfigError("run.name must be non-empty without commas or quotes");
                   }
                   c.run.name = v;
                 }});
    f.push_back({"run.seeds", [](const ExperimentConfig& c) { return join(c.run.seeds, [](std::uint64_t s) { return std::to_string(s); }); },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.run.seeds = to_list<std::uint64_t>(v, [](const std::string& s) { return to_u64("run.seeds", s); });
                 }});
    f.push_back({"run.output", [](const ExperimentConfig& c) { return c.run.output; },
                 [](ExperimentConfig& c, const std::string& v) { c.run.output = v; }});
    f.push_back({"run.teacher_path", [](const ExperimentConfig& c) { return c.run.teacher_path; },
                 [](ExperimentConfig& c, const std::string& v) { c.run.teacher_path = v; }});
    XCL_SIZE("run.topk", run.topk);
    XCL_BOOL("run.half_s", run.half_s);

    XCL_SIZE("blobs.classes", blobs.classes);
    XCL_SIZE("blobs.dim", blobs.dim);
    XCL_SIZE("blobs.per_class", blobs.per_class);
    XCL_SIZE("blobs.test_per_class", blobs.test_per_class);
    XCL_REAL("blobs.spread", blobs.spread);
    XCL_REAL("blobs.center_scale", blobs.center_scale);
    XCL_REAL("blobs.split_fraction", blobs.split_fraction);

    XCL_SIZE("regression.n", regression.n);
    XCL_SIZE("regression.test_n", regression.test_n);
    XCL_SIZE("regression.input_dim", regression.input_dim);
    f.push_back({"regression.noise", [](const ExperimentConfig& c) { return to_string(c.regression.noise); },
                 [](ExperimentConfig& c, const std::string& v) {
                   try {
                     c.regression.noise = parse_noise_profile(v);
                   } catch (const std::exception& e) {
                     throw ConfigError(e.what());
                   }
                 }});

    add_model_fields(f, "teacher", &ExperimentConfig::teacher);
    add_model_fields(f, "student", &ExperimentConfig::student);

    f.push_back({"loss.kind", [](const ExperimentConfig& c) { return to_string(c.loss.kind); },
                 [](ExperimentConfig& c, const std::string& v) { c.loss.kind = parse_loss_kind(v); }});
    XCL_REAL("loss.temperature", loss.temperature);
    XCL_REAL("loss.kd_gt_weight", loss.kd_gt_weight);
    XCL_BOOL("loss.kl_dim_scaled", loss.kl_dim_scaled);
    XCL_REAL("loss.label_smoothing", loss.label_smoothing);

    f.push_back({"sampler.kind", [](const ExperimentConfig& c) { return to_string(c.sampler.kind); },
                 [](ExperimentConfig& c, const std::string& v) { c.sampler.kind = parse_sampler_kind(v); }});
    XCL_REAL("sampler.noise_sigma", sampler.noise_sigma);
    XCL_SIZE("sampler.grid_height", sampler.grid_height);
    XCL_SIZE("sampler.grid_width", sampler.grid_width);
    XCL_REAL("sampler.empirical_share", sampler.empirical_share);
    XCL_SIZE("sampler.size", sampler.size);
    XCL_BOOL("sampler.importance", sampler.importance);

    f.push_back({"sweep.axis", [](const ExperimentConfig& c) { return to_string(c.sweep.axis); },
                 [](ExperimentConfig& c, const std::string& v) { c.sweep.axis = parse_sweep_axis(v); }});
    f.push_back({"sweep.temperatures", [](const ExperimentConfig& c) { return join(c.sweep.temperatures, fmt_double); },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.sweep.temperatures = to_list<double>(v, [](const std::string& s) { return to_double("sweep.temperatures", s); });
                 }});
    f.push_back({"sweep.smoothing", [](const ExperimentConfig& c) { return join(c.sweep.smoothing, fmt_double); },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.sweep.smoothing = to_list<double>(v, [](const std::string& s) { return to_double("sweep.smoothing", s); });
                 }});
    f.push_back({"sweep.fractions", [](const ExperimentConfig& c) { return join(c.sweep.fractions, fmt_double); },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.sweep.fractions = to_list<double>(v, [](const std::string& s) { return to_double("sweep.fractions", s); });
                 }});
    f.push_back({"sweep.samplers",
                 [](const ExperimentConfig& c) { return join(c.sweep.samplers, [](SamplerKind k) { return to_string(k); }); },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.sweep.samplers = to_list<SamplerKind>(v, [](const std::string& s) { return parse_sampler_kind(s); });
                 }});
    XCL_SIZE("sweep.imbalance_classes", sweep.imbalance_classes);
    XCL_REAL("sweep.imbalance_keep", sweep.imbalance_keep);

    XCL_SIZE("curve.lambda_steps", curve.lambda_steps);
    XCL_SIZE("curve.pairs", curve.pairs);
    return f;
  }();
  return table;
}

#undef XCL_SIZE
#undef XCL_REAL
#undef XCL_BOOL

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

void check_model(const std::string& role, const ModelConfig& m) {
  if (m.hidden.empty()) throw ConfigError(role + ".hidden: at least one hidden layer required");
  for (auto h : m.hidden) {
    if (h == 0) throw ConfigError(role + ".hidden: layer widths must be positive");
  }
  if (m.members == 0) throw ConfigError(role + ".members must be at least 1");
  if (m.batch_size == 0) throw ConfigError(role + ".batch_size must be positive");
  if (!(m.lr > 0.0)) throw ConfigError(role + ".lr must be positive");
  if (!(m.momentum >= 0.0 && m.momentum < 1.0)) throw ConfigError(role + ".momentum must be in [0, 1)");
  if (!(m.weight_decay >= 0.0)) throw ConfigError(role + ".weight_decay must be non-negative");
  if (!(m.decay_at >= 0.0 && m.decay_at <= 1.0)) throw ConfigError(role + ".decay_at must be in [0, 1]");
  if (!(m.decay_factor > 0.0)) throw ConfigError(role + ".decay_factor must be positive");
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(DataKind data) {
  ExperimentConfig c;
  c.data = data;
  if (data == DataKind::kRegression) {
    c.teacher.hidden = {64, 64};
    c.teacher.activation = Activation::kTanh;
    c.teacher.epochs = 100;
    c.teacher.lr = 0.01;
    c.student.hidden = {32, 32};
    c.student.activation = Activation::kTanh;
    c.student.epochs = 100;
    c.student.lr = 0.005;
    c.loss.kind = LossKind::kGaussianKL;
    c.run.topk = 1;
  } else {
    c.teacher.weight_decay = 5e-3;
  }
  return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError("unknown key '" + key + "'");
  f->set(*this, value);
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [key, value] : entries()) {
    if (key == "run.seeds" || key == "run.output") continue;
    out += key + "=" + value + "\n";
  }
  return out;
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  if (run.seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  if (run.output.empty()) throw ConfigError("run.output must not be empty");
  if (run.topk == 0) throw ConfigError("run.topk must be positive");
  if (blobs.classes < 2) throw ConfigError("blobs.classes must be at least 2");
  if (blobs.dim == 0) throw ConfigError("blobs.dim must be positive");
  if (blobs.per_class < 4) throw ConfigError("blobs.per_class must be at least 4");
  if (blobs.test_per_class == 0) throw ConfigError("blobs.test_per_class must be positive");
  if (!(blobs.spread >= 0.0)) throw ConfigError("blobs.spread must be non-negative");
  if (!(blobs.center_scale >= 0.0)) throw ConfigError("blobs.center_scale must be non-negative");
  if (!(blobs.split_fraction > 0.0 && blobs.split_fraction < 1.0)) {
    throw ConfigError("blobs.split_fraction must be in (0, 1)");
  }
  if (data == DataKind::kBlobs && run.topk > blobs.classes) throw ConfigError("run.topk exceeds blobs.classes");
  if (regression.n < 2 || regression.test_n == 0) throw ConfigError("regression.n and regression.test_n too small");
  if (regression.input_dim == 0) throw ConfigError("regression.input_dim must be positive");
  check_model("teacher", teacher);
  check_model("student", student);
  if (!(loss.temperature > 0.0)) throw ConfigError("loss.temperature must be positive");
  if (!(loss.kd_gt_weight >= 0.0 && loss.kd_gt_weight <= 1.0)) throw ConfigError("loss.kd_gt_weight must be in [0, 1]");
  if (!(loss.label_smoothing >= 0.0 && loss.label_smoothing < 1.0)) {
    throw ConfigError("loss.label_smoothing must be in [0, 1)");
  }
  const bool categorical = loss.kind == LossKind::kCrossEntropySoft || loss.kind == LossKind::kKDCategorical;
  if ((data == DataKind::kBlobs) != categorical) {
    throw ConfigError("loss.kind " + to_string(loss.kind) + " does not fit data.kind " + to_string(data));
  }
  if (!(sampler.noise_sigma >= 0.0)) throw ConfigError("sampler.noise_sigma must be non-negative");
  if (sampler.grid_height == 0 || sampler.grid_width == 0) throw ConfigError("sampler grid must be non-empty");
  if (!(sampler.empirical_share >= 0.0 && sampler.empirical_share < 1.0)) {
    throw ConfigError("sampler.empirical_share must be in [0, 1)");
  }
  if (sweep.temperatures.empty() || sweep.smoothing.empty() || sweep.fractions.empty() || sweep.samplers.empty()) {
    throw ConfigError("sweep value lists must not be empty");
  }
  for (double t : sweep.temperatures) {
    if (!(t > 0.0)) throw ConfigError("sweep.temperatures must be positive");
  }
  for (double e : sweep.smoothing) {
    if (!(e >= 0.0 && e < 1.0)) throw ConfigError("sweep.smoothing values must be in [0, 1)");
  }
  for (double fr : sweep.fractions) {
    if (!(fr > 0.0 && fr <= 1.0)) throw ConfigError("sweep.fractions values must be in (0, 1]");
  }
  if (sweep.axis == SweepAxis::kImbalance && sweep.imbalance_classes > blobs.classes) {
    throw ConfigError("sweep.imbalance_classes exceeds blobs.classes");
  }
  if (!(sweep.imbalance_keep > 0.0 && sweep.imbalance_keep <= 1.0)) {
    throw ConfigError("sweep.imbalance_keep must be in (0, 1]");
  }
  if (curve.lambda_steps < 2) throw ConfigError("curve.lambda_steps must be at least 2");
  if (curve.pairs == 0) throw ConfigError("curve.pairs must be positive");
}

ExperimentConfig parse_config(std::istream& in, const DataKind* forced) {
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line;
  };
  std::vector<Entry> items;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value, got '" + std::string(body) + "'", number);
    Entry e{std::string(text::trim(body.substr(0, eq))), std::string(text::trim(body.substr(eq + 1))), number};
    if (e.key.empty()) throw ParseError("missing key", number);
    for (const auto& prev : items) {
      if (prev.key == e.key) throw ParseError("duplicate key '" + e.key + "'", number);
    }
    items.push_back(std::move(e));
  }

  // data.kind picks the defaults every other key is applied on top of.
  ExperimentConfig probe;
  for (const auto& e : items) {
    if (e.key != "data.kind") continue;
    try {
      probe.set(e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
    }
    if (forced != nullptr && probe.data != *forced) {
      throw ConfigError("line " + std::to_string(e.line) + ": this experiment needs data.kind=" + to_string(*forced));
    }
  }
  const DataKind kind = forced != nullptr ? *forced : probe.data;
  ExperimentConfig cfg = ExperimentConfig::defaults(kind);
  for (const auto& e : items) {
    try {
      cfg.set(e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const DataKind* forced) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open config file '" + path + "'");
  try {
    return parse_config(in, forced);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

bool required_data_kind(ExperimentKind kind, DataKind& out) {
  switch (kind) {
    case ExperimentKind::kObservation1:
    case ExperimentKind::kObservation2:
    case ExperimentKind::kSweep:
      out = DataKind::kBlobs;
      return true;
    case ExperimentKind::kCurveUncertainty:
      out = DataKind::kRegression;
      return true;
    default:
      return false;
  }
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kTrainTeacher: return "train-teacher";
    case ExperimentKind::kDistill: return "distill";
    case ExperimentKind::kObservation1: return "observation1";
    case ExperimentKind::kObservation2: return "observation2";
    case ExperimentKind::kSweep: return "sweep";
    case ExperimentKind::kCurveUncertainty: return "curve-uncertainty";
  }
  return "?";
}

std::string to_string(DataKind kind) { return kind == DataKind::kBlobs ? "blobs" : "regression"; }

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kEmpirical: return "empirical";
    case SamplerKind::kMix: return "mix";
    case SamplerKind::kCutMix: return "cutmix";
    case SamplerKind::kNoise: return "noise";
    case SamplerKind::kGaussianImage: return "gaussian-image";
    case SamplerKind::kGeneratorNoMix: return "generator-nomix";
    case SamplerKind::kGenerator: return "generator";
  }
  return "?";
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kTemperature: return "temperature";
    case SweepAxis::kLabelSmoothing: return "label_smoothing";
    case SweepAxis::kDatasetSize: return "dataset_size";
    case SweepAxis::kImbalance: return "imbalance";
    case SweepAxis::kSampler: return "sampler";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  for (auto k : {ExperimentKind::kTrainTeacher, ExperimentKind::kDistill, ExperimentKind::kObservation1,
                 ExperimentKind::kObservation2, ExperimentKind::kSweep, ExperimentKind::kCurveUncertainty}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown experiment '" + text + "'");
}

SamplerKind parse_sampler_kind(const std::string& text) {
  for (auto k : {SamplerKind::kEmpirical, SamplerKind::kMix, SamplerKind::kCutMix, SamplerKind::kNoise,
                 SamplerKind::kGaussianImage, SamplerKind::kGeneratorNoMix, SamplerKind::kGenerator}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown sampler '" + text + "'");
}

SweepAxis parse_sweep_axis(const std::string& text) {
  for (auto a : {SweepAxis::kTemperature, SweepAxis::kLabelSmoothing, SweepAxis::kDatasetSize, SweepAxis::kImbalance,
                 SweepAxis::kSampler}) {
    if (to_string(a) == text) return a;
  }
  throw ConfigError("unknown sweep axis '" + text + "'");
}

std::string method_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kEmpirical: return "kd";
    case SamplerKind::kMix: return "xcl-mix";
    case SamplerKind::kCutMix: return "xcl-cutmix";
    case SamplerKind::kNoise: return "noise-aug";
    case SamplerKind::kGaussianImage: return "gaussian-image";
    case SamplerKind::kGeneratorNoMix: return "xcl-gen-nomix";
    case SamplerKind::kGenerator: return "xcl-gen";
  }
  return "?";
}

}  // namespace xcl
