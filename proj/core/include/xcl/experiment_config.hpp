#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "xcl/datasets.hpp"
#include "xcl/losses.hpp"
#include "xcl/network.hpp"

namespace xcl {

enum class ExperimentKind { kTrainTeacher, kDistill, kObservation1, kObservation2, kSweep, kCurveUncertainty };
enum class DataKind { kBlobs, kRegression };
enum class SamplerKind { kEmpirical, kMix, kCutMix, kNoise, kGaussianImage, kGeneratorNoMix, kGenerator };
enum class SweepAxis { kTemperature, kLabelSmoothing, kDatasetSize, kImbalance, kSampler };

struct RunConfig {
  std::string name = "xcl";
  std::vector<std::uint64_t> seeds{1};
  std::string output = "results";
  /// Teacher model file for distill; empty means <output>/teacher-<seed>.model.
  /// "{seed}" is replaced by the seed.
  std::string teacher_path;
  std::size_t topk = 5;
  /// observation1 also trains on half of the teacher's own training data.
  bool half_s = false;
};

struct BlobsConfig {
  std::size_t classes = 10;
  std::size_t dim = 16;
  std::size_t per_class = 200;
  std::size_t test_per_class = 100;
  double spread = 40.0;
  double center_scale = 50.0;
  /// Share of the pool that becomes the teacher's set A; the rest is B.
  double split_fraction = 0.5;
};

struct RegressionConfig {
  std::size_t n = 1000;
  std::size_t test_n = 2000;
  std::size_t input_dim = 2;
  NoiseProfile noise = NoiseProfile::kSinusoidal;
};

struct ModelConfig {
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::kReLU;
  std::size_t members = 1;
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double lr = 2e-4;
  double momentum = 0.9;
  double weight_decay = 0.0;
  /// Learning rate is multiplied by decay_factor from epoch floor(decay_at * epochs) on.
  double decay_at = 2.0 / 3.0;
  double decay_factor = 0.1;
};

struct LossConfig {
  LossKind kind = LossKind::kKDCategorical;
  double temperature = 1.0;
  double kd_gt_weight = 0.0;
  bool kl_dim_scaled = false;
  double label_smoothing = 0.0;
};

struct SamplerConfig {
  SamplerKind kind = SamplerKind::kEmpirical;
  double noise_sigma = 0.14142135623730951;  // variance 0.02
  std::size_t grid_height = 4;
  std::size_t grid_width = 4;
  /// Share of empirical rows in the generator union.
  double empirical_share = 0.5;
  /// Transfer rows drawn per epoch; 0 means the size of the source set.
  std::size_t size = 0;
  bool importance = false;
};

struct SweepConfig {
  SweepAxis axis = SweepAxis::kTemperature;
  std::vector<double> temperatures{1.0, 1.5, 2.0, 5.0, 10.0};
  std::vector<double> smoothing{0.1, 0.18, 0.4, 0.8};
  std::vector<double> fractions{1.0, 0.25, 0.0625, 0.015625};
  std::vector<SamplerKind> samplers{SamplerKind::kGaussianImage, SamplerKind::kNoise, SamplerKind::kMix,
                                    SamplerKind::kGeneratorNoMix, SamplerKind::kGenerator};
  std::size_t imbalance_classes = 8;
  double imbalance_keep = 0.1;
};

struct CurveConfig {
  std::size_t lambda_steps = 11;
  std::size_t pairs = 1000;
};

/// Everything a run depends on. Every field has a default; the defaults of the
/// model, optimiser and loss sections depend on the data kind.
struct ExperimentConfig {
  DataKind data = DataKind::kBlobs;
  RunConfig run;
  BlobsConfig blobs;
  RegressionConfig regression;
  ModelConfig teacher;
  ModelConfig student;
  LossConfig loss;
  SamplerConfig sampler;
  SweepConfig sweep;
  CurveConfig curve;

  static ExperimentConfig defaults(DataKind data);

  /// Sets one key; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// All keys with their current values, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  /// entries() without run.seeds and run.output, one "key=value" per line.
  std::string canonical() const;
  /// FNV-1a of canonical(), 16 hex digits. Seeds and output dir do not enter,
  /// so runs of the same setup with different seeds share a result file.
  std::string hash() const;
  void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. data.kind may appear
/// anywhere and selects the defaults the other keys are applied to.
/// `forced` (if given) is the data kind the experiment needs; a conflicting
/// data.kind is a ConfigError. Errors carry the line number.
ExperimentConfig parse_config(std::istream& in, const DataKind* forced = nullptr);
ExperimentConfig load_config(const std::string& path, const DataKind* forced = nullptr);

/// Data kind an experiment runs on, if it is fixed.
bool required_data_kind(ExperimentKind kind, DataKind& out);

std::string to_string(ExperimentKind kind);
std::string to_string(DataKind kind);
std::string to_string(SamplerKind kind);
std::string to_string(SweepAxis axis);
ExperimentKind parse_experiment_kind(const std::string& text);
SamplerKind parse_sampler_kind(const std::string& text);
SweepAxis parse_sweep_axis(const std::string& text);

/// Result-table method name of a distillation run with this sampler.
std::string method_name(SamplerKind kind);

}  // namespace xcl
