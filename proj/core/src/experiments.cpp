#include "xcl/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "xcl/analysis.hpp"
#include "xcl/errors.hpp"
#include "xcl/losses.hpp"

namespace xcl {
namespace {

class RowSink {
 public:
  RowSink(const ExperimentConfig& cfg, ExperimentKind kind, std::uint64_t seed)
      : experiment_(cfg.run.name + ":" + to_string(kind)), seed_(seed), hash_(cfg.hash()) {}

  void add(const std::string& method, const std::string& metric, double value) {
    rows_.push_back({experiment_, seed_, method, metric, value, hash_});
  }

  void add_classification(const std::string& method, const MetricsReport& m) {
    add(method, "top1", m.top1);
    if (m.k > 1) add(method, "top" + std::to_string(m.k), m.topk);
    add(method, "avg_entropy", m.avg_entropy);
    add(method, "avg_truth_prob", m.avg_truth_prob);
  }

  std::vector<ResultRow> take() { return std::move(rows_); }

 private:
  std::string experiment_;
  std::uint64_t seed_;
  std::string hash_;
  std::vector<ResultRow> rows_;
};

std::string compact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string tagged(const std::string& method, const std::string& key, double v) {
  return method + "[" + key + "=" + compact(v) + "]";
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::size_t transfer_size(const ExperimentConfig& cfg, const Dataset& source) {
  return cfg.sampler.size > 0 ? cfg.sampler.size : source.size();
}

Matrix label_column(const Dataset& data) {
  Matrix col(data.size(), 1);
  for (std::size_t r = 0; r < data.size(); ++r) col(r, 0) = static_cast<double>(data.labels()[r]);
  return col;
}

TransferSet label_dataset(const Teacher& teacher, const Dataset& data) {
  TransferSet set;
  set.inputs = data.features();
  set.outputs = teacher_predict(teacher, data.features());
  if (data.is_classification()) {
    set.ground_truth = label_column(data);
    set.classes = data.num_classes();
  } else {
    set.ground_truth = data.targets();
  }
  set.provenance = "empirical";
  return set;
}

std::size_t student_outputs(const Teacher& teacher) { return teacher.head_size(); }

LossSpec teacher_loss(LossKind kind, const LossConfig& lc) {
  LossSpec spec = distill_loss(lc);
  spec.kind = kind;
  return spec;
}

}  // namespace

BlobSplits make_blob_splits(const ExperimentConfig& cfg, const Rng& root) {
  const BlobsConfig& b = cfg.blobs;
  Rng rng = root.substream("data");
  const std::size_t total = b.per_class + b.test_per_class;
  Dataset all = make_blobs({b.classes, b.dim, total, b.spread, b.center_scale}, rng);
  auto [pool, test] =
      split_disjoint(all, static_cast<double>(b.per_class) / static_cast<double>(total), true, rng);
  auto [a, held] = split_disjoint(pool, b.split_fraction, true, rng);
  return {std::move(a), std::move(held), std::move(test)};
}

RegressionSplits make_regression_splits(const ExperimentConfig& cfg, const Rng& root) {
  const RegressionConfig& r = cfg.regression;
  Rng rng = root.substream("data");
  const std::size_t total = r.n + r.test_n;
  Dataset all = make_heteroscedastic_regression({total, r.input_dim, r.noise}, rng);
  auto [train, test] = split_disjoint(all, static_cast<double>(r.n) / static_cast<double>(total), false, rng);
  return {std::move(train), std::move(test)};
}

NetworkSpec model_spec(const ModelConfig& model, std::size_t input_dim, std::size_t outputs, HeadKind head) {
  NetworkSpec spec;
  spec.layer_dims.push_back(input_dim);
  spec.layer_dims.insert(spec.layer_dims.end(), model.hidden.begin(), model.hidden.end());
  spec.layer_dims.push_back(outputs);
  spec.activation = model.activation;
  spec.head = head;
  spec.validate();
  return spec;
}

OptimizerState optimizer_for(const ModelConfig& model) {
  OptimizerState opt;
  opt.learning_rate = model.lr;
  opt.momentum = model.momentum;
  opt.weight_decay = model.weight_decay;
  const auto at = static_cast<std::size_t>(std::floor(model.decay_at * static_cast<double>(model.epochs)));
  if (at < model.epochs) opt.schedule.push_back({at, model.decay_factor});
  opt.validate();
  return opt;
}

Network fit_network(const NetworkSpec& spec, const ModelConfig& model, const EpochSource& source,
                    const LossSpec& loss, const Rng& rng) {
  Rng init = rng.substream("init");
  Network net = init_network(spec, init);
  OptimizerState opt = optimizer_for(model);
  Rng tr = rng.substream("train");
  return train(std::move(net), source, loss, opt, TrainOptions{model.epochs, model.batch_size}, tr).net;
}

Network fit_network(const NetworkSpec& spec, const ModelConfig& model, const TrainingData& data,
                    const LossSpec& loss, const Rng& rng) {
  Rng init = rng.substream("init");
  Network net = init_network(spec, init);
  OptimizerState opt = optimizer_for(model);
  Rng tr = rng.substream("train");
  return train(std::move(net), data, loss, opt, TrainOptions{model.epochs, model.batch_size}, tr).net;
}

Teacher fit_teacher(const ExperimentConfig& cfg, const Dataset& train, const Rng& rng) {
  std::vector<Network> members;
  for (std::size_t i = 0; i < cfg.teacher.members; ++i) {
    const Rng member = rng.substream(static_cast<std::uint64_t>(i));
    if (train.is_classification()) {
      const NetworkSpec spec = model_spec(cfg.teacher, train.dim(), train.num_classes(), HeadKind::kLogits);
      members.push_back(fit_network(spec, cfg.teacher, TrainingData{train.features(), train.one_hot(), {}, {}},
                                    LossSpec{LossKind::kCrossEntropySoft}, member));
    } else {
      const NetworkSpec spec = model_spec(cfg.teacher, train.dim(), train.target_dim(), HeadKind::kGaussian);
      members.push_back(fit_network(spec, cfg.teacher, TrainingData{train.features(), train.targets(), {}, {}},
                                    LossSpec{LossKind::kGaussianNLL}, member));
    }
  }
  if (members.size() == 1) return Teacher::single(std::move(members.front()));
  return Teacher::ensemble(std::move(members), /*allow_gaussian=*/true);
}

std::shared_ptr<const TransferSampler> make_sampler(const SamplerConfig& sc, const Dataset& data,
                                                    std::vector<double> weights) {
  switch (sc.kind) {
    case SamplerKind::kEmpirical:
      return std::make_shared<EmpiricalSampler>(data, false, std::move(weights));
    case SamplerKind::kMix:
      return std::make_shared<MixSampler>(data, std::move(weights));
    case SamplerKind::kCutMix:
      return std::make_shared<CutMixSampler>(data, GridShape{sc.grid_height, sc.grid_width});
    case SamplerKind::kNoise:
      return std::make_shared<NoiseSampler>(data, sc.noise_sigma);
    case SamplerKind::kGaussianImage:
      return std::make_shared<GaussianImageSampler>(data.dim());
    case SamplerKind::kGeneratorNoMix:
    case SamplerKind::kGenerator: {
      auto gen = std::make_shared<ToyGenerator>(fit_toy_generator(data));
      auto synth = std::make_shared<GeneratorSampler>(gen, sc.kind == SamplerKind::kGenerator);
      if (sc.empirical_share <= 0.0) return synth;
      std::vector<WeightedSampler> parts{
          {std::make_shared<EmpiricalSampler>(data, false, std::move(weights)), sc.empirical_share},
          {synth, 1.0 - sc.empirical_share}};
      return std::make_shared<UnionSampler>(std::move(parts));
    }
  }
  throw ConfigError("unknown sampler kind");
}

LossSpec distill_loss(const LossConfig& lc) {
  LossSpec spec;
  spec.kind = lc.kind;
  spec.source = TargetSource::kTeacher;
  spec.temperature = lc.temperature;
  spec.kd_gt_weight = lc.kd_gt_weight;
  spec.kl_dim_scaled = lc.kl_dim_scaled;
  spec.validate();
  return spec;
}

Network distill_student(const ExperimentConfig& cfg, const Teacher& teacher, const Dataset& source,
                        SamplerKind kind, const LossSpec& loss, bool importance, const Rng& rng) {
  const NetworkSpec spec = model_spec(cfg.student, source.dim(), student_outputs(teacher), teacher.head());
  std::vector<double> weights;
  if (importance && source.is_classification()) weights = importance_weights(source);
  if (kind == SamplerKind::kEmpirical && weights.empty() && cfg.sampler.size == 0) {
    // The transfer set is the dataset itself; the loop reshuffles it.
    return fit_network(spec, cfg.student, distillation_data(label_dataset(teacher, source), loss), loss, rng);
  }
  SamplerConfig sc = cfg.sampler;
  sc.kind = kind;
  auto sampler = make_sampler(sc, source, std::move(weights));
  const std::size_t n = transfer_size(cfg, source);
  EpochSource epochs = [&teacher, &source, sampler, loss, n](std::size_t, Rng& r) {
    return distillation_data(materialize_transfer_set(teacher, *sampler, n, r, &source), loss);
  };
  return fit_network(spec, cfg.student, epochs, loss, rng);
}

Network erm_student(const ExperimentConfig& cfg, const Dataset& data, double smoothing, bool importance,
                    const Rng& rng) {
  TrainingData td;
  td.inputs = data.features();
  if (!data.is_classification()) {
    td.targets = data.targets();
    const NetworkSpec spec = model_spec(cfg.student, data.dim(), data.target_dim(), HeadKind::kGaussian);
    return fit_network(spec, cfg.student, td, LossSpec{LossKind::kGaussianNLL}, rng);
  }
  const std::size_t c = data.num_classes();
  if (smoothing > 0.0) {
    td.targets = Matrix(data.size(), c);
    for (std::size_t r = 0; r < data.size(); ++r) {
      const auto dist = label_smooth(data.labels()[r], c, smoothing);
      std::copy(dist.probs().begin(), dist.probs().end(), td.targets.row(r).begin());
    }
  } else {
    td.targets = data.one_hot();
  }
  if (importance) td.sample_weights = importance_weights(data);
  const NetworkSpec spec = model_spec(cfg.student, data.dim(), c, HeadKind::kLogits);
  return fit_network(spec, cfg.student, td, LossSpec{LossKind::kCrossEntropySoft}, rng);
}

Network mixup_student(const ExperimentConfig& cfg, const Dataset& data, bool importance, const Rng& rng) {
  const std::size_t c = data.num_classes();
  std::vector<double> weights;
  if (importance) weights = importance_weights(data);
  const std::size_t n = transfer_size(cfg, data);
  EpochSource epochs = [&data, weights, n, c](std::size_t, Rng& r) {
    MixBatch mb = sample_mix_batch(data, n, r, weights);
    TrainingData td;
    td.targets = Matrix(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = mix_labels(CategoricalDist::one_hot(data.labels()[mb.first[i]], c),
                                CategoricalDist::one_hot(data.labels()[mb.second[i]], c), mb.lambda[i]);
      std::copy(y.probs().begin(), y.probs().end(), td.targets.row(i).begin());
    }
    td.inputs = std::move(mb.inputs);
    return td;
  };
  const NetworkSpec spec = model_spec(cfg.student, data.dim(), c, HeadKind::kLogits);
  return fit_network(spec, cfg.student, epochs, LossSpec{LossKind::kCrossEntropySoft}, rng);
}

double transfer_entropy(const Teacher& teacher, const TransferSampler& sampler, std::size_t n, Rng rng) {
  const SampledBatch batch = sampler.sample(n, rng);
  return mean(teacher_entropies(teacher, batch.inputs));
}

std::string teacher_model_path(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::string s = std::to_string(seed);
  if (!cfg.run.teacher_path.empty()) {
    std::string path = cfg.run.teacher_path;
    for (auto pos = path.find("{seed}"); pos != std::string::npos; pos = path.find("{seed}", pos + s.size())) {
      path.replace(pos, 6, s);
    }
    return path;
  }
  return (std::filesystem::path(cfg.run.output) / ("teacher-" + s + ".model")).string();
}

std::string student_model_path(const ExperimentConfig& cfg, std::uint64_t seed) {
  return (std::filesystem::path(cfg.run.output) / ("student-" + std::to_string(seed) + ".model")).string();
}

Teacher load_teacher(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("teacher model '" + path + "' not found; run train-teacher first");
  auto members = read_networks(in);
  if (members.size() == 1) return Teacher::single(std::move(members.front()));
  return Teacher::ensemble(std::move(members), /*allow_gaussian=*/true);
}

namespace {

void write_model_file(const std::string& path, std::span<const Network> nets) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    write_networks(out, nets);
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

void add_regression(RowSink& rows, const std::string& method, const MetricsReport& m) {
  rows.add(method, "mean_error", m.mean_error);
}

}  // namespace

std::vector<ResultRow> run_train_teacher(const ExperimentConfig& cfg, std::uint64_t seed) {
  RowSink rows(cfg, ExperimentKind::kTrainTeacher, seed);
  const Rng root(seed);
  Teacher teacher = [&] {
    if (cfg.data == DataKind::kBlobs) {
      const BlobSplits s = make_blob_splits(cfg, root);
      Teacher t = fit_teacher(cfg, s.a, root.substream("teacher"));
      rows.add_classification("teacher", evaluate(t, s.test, cfg.run.topk));
      rows.add("teacher", "train_top1", evaluate(t, s.a).top1);
      return t;
    }
    const RegressionSplits s = make_regression_splits(cfg, root);
    Teacher t = fit_teacher(cfg, s.train, root.substream("teacher"));
    add_regression(rows, "teacher", evaluate(t, s.test));
    return t;
  }();
  rows.add("teacher", "members", static_cast<double>(teacher.members().size()));
  write_model_file(teacher_model_path(cfg, seed), teacher.members());
  return rows.take();
}

std::vector<ResultRow> run_distill(const ExperimentConfig& cfg, std::uint64_t seed) {
  RowSink rows(cfg, ExperimentKind::kDistill, seed);
  const Teacher teacher = load_teacher(teacher_model_path(cfg, seed));
  const Rng root(seed);
  const std::string method = method_name(cfg.sampler.kind) + (cfg.sampler.importance ? "-is" : "");
  const LossSpec loss = distill_loss(cfg.loss);
  const Rng student_rng = root.substream("student");
  const auto run = [&](const Dataset& source) {
    Network student = distill_student(cfg, teacher, source, cfg.sampler.kind, loss, cfg.sampler.importance, student_rng);
    write_model_file(student_model_path(cfg, seed), std::span<const Network>(&student, 1));
    return student;
  };
  if (cfg.data == DataKind::kBlobs) {
    const BlobSplits s = make_blob_splits(cfg, root);
    const Network student = run(s.a);
    const MetricsReport sm = evaluate(student, s.test, cfg.run.topk);
    const MetricsReport tm = evaluate(teacher, s.test, cfg.run.topk);
    rows.add_classification(method, sm);
    rows.add(method, "teacher_top1", tm.top1);
    rows.add(method, "gap", tm.top1 - sm.top1);
    std::vector<double> weights;
    if (cfg.sampler.importance) weights = importance_weights(s.a);
    const auto sampler = make_sampler(cfg.sampler, s.a, weights);
    rows.add(method, "transfer_entropy",
             transfer_entropy(teacher, *sampler, transfer_size(cfg, s.a), root.substream("entropy")));
  } else {
    const RegressionSplits s = make_regression_splits(cfg, root);
    const Network student = run(s.train);
    const MetricsReport sm = evaluate(student, s.test);
    const MetricsReport tm = evaluate(teacher, s.test);
    add_regression(rows, method, sm);
    rows.add(method, "teacher_mean_error", tm.mean_error);
    rows.add(method, "gap", sm.mean_error - tm.mean_error);
  }
  return rows.take();
}

std::vector<ResultRow> run_observation1(const ExperimentConfig& cfg, std::uint64_t seed) {
  RowSink rows(cfg, ExperimentKind::kObservation1, seed);
  const Rng root(seed);
  const BlobSplits s = make_blob_splits(cfg, root);
  const Teacher teacher = fit_teacher(cfg, s.a, root.substream("teacher"));
  rows.add("teacher", "top1", evaluate(teacher, s.test).top1);

  const SplitResult split = split_by_entropy(teacher, s.b);
  struct Named {
    std::string name;
    Dataset data;
    double entropy;
  };
  std::vector<Named> sets{{"H", s.b.subset(split.high), split.avg_entropy_high},
                          {"L", s.b.subset(split.low), split.avg_entropy_low}};
  if (cfg.run.half_s) {
    Rng half_rng = root.substream("half");
    Dataset half = split_disjoint(s.a, 0.5, true, half_rng).first;
    const double h = mean(teacher_entropies(teacher, half.features()));
    sets.push_back({"half-S", std::move(half), h});
  }
  const LossSpec kd = distill_loss(cfg.loss);
  const Rng student_rng = root.substream("student");
  for (const auto& set : sets) {
    rows.add(set.name, "entropy", set.entropy);
    rows.add(set.name, "erm", evaluate(erm_student(cfg, set.data, 0.0, false, student_rng), s.test).top1);
    rows.add(set.name, "kd",
             evaluate(distill_student(cfg, teacher, set.data, SamplerKind::kEmpirical, kd, false, student_rng), s.test)
                 .top1);
  }
  return rows.take();
}

std::vector<ResultRow> run_observation2(const ExperimentConfig& cfg, std::uint64_t seed) {
  RowSink rows(cfg, ExperimentKind::kObservation2, seed);
  const Rng root(seed);
  const BlobSplits s = make_blob_splits(cfg, root);
  const Teacher teacher = fit_teacher(cfg, s.a, root.substream("teacher"));
  rows.add("teacher", "top1", evaluate(teacher, s.test).top1);

  const auto z_idx = zero_accuracy_subset(teacher, s.b);
  if (z_idx.empty()) throw DataError("teacher classifies every held-out sample correctly; Z is empty");
  const Dataset z = s.b.subset(z_idx);
  const MetricsReport on_z = evaluate(teacher, z);
  rows.add("Z", "size", static_cast<double>(z.size()));
  rows.add("Z", "fraction", static_cast<double>(z.size()) / static_cast<double>(s.a.size() + s.b.size()));
  rows.add("Z", "entropy", on_z.avg_entropy);
  rows.add("Z", "p", on_z.avg_truth_prob);
  rows.add("Z", "teacher_top1", on_z.top1);
  const Rng student_rng = root.substream("student");
  rows.add("Z", "erm", evaluate(erm_student(cfg, z, 0.0, false, student_rng), s.test).top1);
  rows.add("Z", "kd",
           evaluate(distill_student(cfg, teacher, z, SamplerKind::kEmpirical, distill_loss(cfg.loss), false, student_rng),
                    s.test)
               .top1);
  return rows.take();
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, std::uint64_t seed) {
  RowSink rows(cfg, ExperimentKind::kSweep, seed);
  const Rng root(seed);
  const BlobSplits s = make_blob_splits(cfg, root);
  const Teacher teacher = fit_teacher(cfg, s.a, root.substream("teacher"));
  rows.add("teacher", "top1", evaluate(teacher, s.test).top1);
  const Rng student_rng = root.substream("student");
  const LossSpec kd = distill_loss(cfg.loss);
  const auto acc = [&](const Network& net) { return evaluate(net, s.test).top1; };
  const auto distill_acc = [&](const Dataset& source, SamplerKind kind, const LossSpec& loss, bool importance) {
    return acc(distill_student(cfg, teacher, source, kind, loss, importance, student_rng));
  };

  switch (cfg.sweep.axis) {
    case SweepAxis::kTemperature:
      for (double t : cfg.sweep.temperatures) {
        LossSpec loss = kd;
        loss.temperature = t;
        rows.add(tagged("kd", "T", t), "top1", distill_acc(s.a, SamplerKind::kEmpirical, loss, false));
        rows.add(tagged("xcl-mix", "T", t), "top1", distill_acc(s.a, SamplerKind::kMix, loss, false));
      }
      break;
    case SweepAxis::kLabelSmoothing:
      rows.add("erm", "top1", acc(erm_student(cfg, s.a, 0.0, false, student_rng)));
      rows.add("kd", "top1", distill_acc(s.a, SamplerKind::kEmpirical, kd, false));
      for (double eps : cfg.sweep.smoothing) {
        rows.add(tagged("erm-ls", "eps", eps), "top1", acc(erm_student(cfg, s.a, eps, false, student_rng)));
      }
      break;
    case SweepAxis::kDatasetSize:
      for (double f : cfg.sweep.fractions) {
        Dataset part = s.a;
        if (f < 1.0) {
          Rng split_rng = root.substream("fraction").substream(static_cast<std::uint64_t>(std::llround(1.0 / f)));
          part = split_disjoint(s.a, f, true, split_rng).first;
        }
        rows.add(tagged("erm", "f", f), "top1", acc(erm_student(cfg, part, 0.0, false, student_rng)));
        rows.add(tagged("mixup", "f", f), "top1", acc(mixup_student(cfg, part, false, student_rng)));
        rows.add(tagged("kd", "f", f), "top1", distill_acc(part, SamplerKind::kEmpirical, kd, false));
        rows.add(tagged("xcl-mix", "f", f), "top1", distill_acc(part, SamplerKind::kMix, kd, false));
      }
      break;
    case SweepAxis::kImbalance: {
      Rng imb_rng = root.substream("imbalance");
      const Dataset part = subsample_imbalanced(s.a, cfg.sweep.imbalance_classes, cfg.sweep.imbalance_keep, imb_rng);
      rows.add("imbalanced", "size", static_cast<double>(part.size()));
      for (bool is : {false, true}) {
        const double flag = is ? 1.0 : 0.0;
        rows.add(tagged("erm", "is", flag), "top1", acc(erm_student(cfg, part, 0.0, is, student_rng)));
        rows.add(tagged("mixup", "is", flag), "top1", acc(mixup_student(cfg, part, is, student_rng)));
        rows.add(tagged("kd", "is", flag), "top1", distill_acc(part, SamplerKind::kEmpirical, kd, is));
        rows.add(tagged("xcl-mix", "is", flag), "top1", distill_acc(part, SamplerKind::kMix, kd, is));
      }
      break;
    }
    case SweepAxis::kSampler: {
      const std::size_t n = transfer_size(cfg, s.a);
      std::vector<SamplerKind> kinds{SamplerKind::kEmpirical};
      kinds.insert(kinds.end(), cfg.sweep.samplers.begin(), cfg.sweep.samplers.end());
      for (SamplerKind kind : kinds) {
        const std::string method = method_name(kind);
        rows.add(method, "top1", distill_acc(s.a, kind, kd, false));
        SamplerConfig sc = cfg.sampler;
        sc.kind = kind;
        rows.add(method, "transfer_entropy",
                 transfer_entropy(teacher, *make_sampler(sc, s.a), n, root.substream("entropy")));
      }
      break;
    }
  }
  return rows.take();
}

std::vector<double> lambda_grid(std::size_t steps) {
  if (steps < 2) throw ConfigError("lambda grid needs at least 2 points");
  std::vector<double> grid(steps);
  for (std::size_t i = 0; i < steps; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(steps - 1);
  return grid;
}

std::vector<ResultRow> run_curve_uncertainty(const ExperimentConfig& cfg, std::uint64_t seed) {
  RowSink rows(cfg, ExperimentKind::kCurveUncertainty, seed);
  const Rng root(seed);
  const RegressionSplits s = make_regression_splits(cfg, root);
  const Teacher teacher = fit_teacher(cfg, s.train, root.substream("teacher"));
  const Rng student_rng = root.substream("student");

  const Network erm = erm_student(cfg, s.train, 0.0, false, student_rng);
  const Network kd = distill_student(cfg, teacher, s.train, SamplerKind::kEmpirical,
                                     teacher_loss(LossKind::kGaussianNLL, cfg.loss), false, student_rng);
  const LossSpec kl = teacher_loss(LossKind::kGaussianKL, cfg.loss);
  const Network kd_u = distill_student(cfg, teacher, s.train, SamplerKind::kEmpirical, kl, false, student_rng);
  const Network xcl = distill_student(cfg, teacher, s.train, SamplerKind::kMix, kl, false, student_rng);

  add_regression(rows, "teacher", evaluate(teacher, s.test));
  add_regression(rows, "erm", evaluate(erm, s.test));
  add_regression(rows, "kd", evaluate(kd, s.test));
  add_regression(rows, "kd-uncertainty", evaluate(kd_u, s.test));
  add_regression(rows, "xcl-mix", evaluate(xcl, s.test));

  const auto grid = lambda_grid(cfg.curve.lambda_steps);
  const Rng curve_rng = root.substream("curve");
  const auto emit = [&](const std::string& method, const std::vector<CurvePoint>& curve) {
    for (const auto& p : curve) rows.add(method, "sigma[lambda=" + compact(p.lambda) + "]", p.mean_sigma);
  };
  {
    Rng r = curve_rng;
    emit("teacher", uncertainty_vs_lambda(teacher, s.test, grid, cfg.curve.pairs, r));
  }
  {
    Rng r = curve_rng;
    emit("kd-uncertainty", uncertainty_vs_lambda(kd_u, s.test, grid, cfg.curve.pairs, r));
  }
  {
    Rng r = curve_rng;
    emit("xcl-mix", uncertainty_vs_lambda(xcl, s.test, grid, cfg.curve.pairs, r));
  }
  return rows.take();
}

std::vector<ResultRow> run_experiment(ExperimentKind kind, const ExperimentConfig& cfg, std::uint64_t seed) {
  DataKind need{};
  if (required_data_kind(kind, need) && cfg.data != need) {
    throw ConfigError(to_string(kind) + " needs data.kind=" + to_string(need));
  }
  switch (kind) {
    case ExperimentKind::kTrainTeacher: return run_train_teacher(cfg, seed);
    case ExperimentKind::kDistill: return run_distill(cfg, seed);
    case ExperimentKind::kObservation1: return run_observation1(cfg, seed);
    case ExperimentKind::kObservation2: return run_observation2(cfg, seed);
    case ExperimentKind::kSweep: return run_sweep(cfg, seed);
    case ExperimentKind::kCurveUncertainty: return run_curve_uncertainty(cfg, seed);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace xcl
