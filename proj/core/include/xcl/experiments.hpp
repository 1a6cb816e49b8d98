#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "xcl/datasets.hpp"
#include "xcl/experiment_config.hpp"
#include "xcl/network.hpp"
#include "xcl/results.hpp"
#include "xcl/samplers.hpp"
#include "xcl/teacher.hpp"
#include "xcl/training.hpp"

namespace xcl {

/// Blob data of one seed: the teacher's set A, the held-out set B and a test
/// set drawn from the same class centers.
struct BlobSplits {
  Dataset a;
  Dataset b;
  Dataset test;
};
BlobSplits make_blob_splits(const ExperimentConfig& cfg, const Rng& root);

struct RegressionSplits {
  Dataset train;
  Dataset test;
};
RegressionSplits make_regression_splits(const ExperimentConfig& cfg, const Rng& root);

/// Network shape for `model` on data with `input_dim` features and `outputs`
/// classes (logits head) or target dims (Gaussian head).
NetworkSpec model_spec(const ModelConfig& model, std::size_t input_dim, std::size_t outputs, HeadKind head);
OptimizerState optimizer_for(const ModelConfig& model);

/// Initialises from rng.substream("init") and trains with rng.substream("train").
Network fit_network(const NetworkSpec& spec, const ModelConfig& model, const EpochSource& source,
                    const LossSpec& loss, const Rng& rng);
Network fit_network(const NetworkSpec& spec, const ModelConfig& model, const TrainingData& data,
                    const LossSpec& loss, const Rng& rng);

/// Teacher trained on `train` with ground truth: cross-entropy for classes,
/// Gaussian NLL for regression. Member i uses rng.substream(i).
Teacher fit_teacher(const ExperimentConfig& cfg, const Dataset& train, const Rng& rng);

/// Transfer sampler over `data` as described by `sc`; `weights` are per-row
/// sampling weights (empty for uniform).
std::shared_ptr<const TransferSampler> make_sampler(const SamplerConfig& sc, const Dataset& data,
                                                    std::vector<double> weights = {});

/// Distillation loss from the config section, with teacher targets.
LossSpec distill_loss(const LossConfig& lc);

/// Student distilled from `teacher` over `sampler` (fresh draws each epoch).
/// Empirical sampling without replacement uses the dataset itself.
Network distill_student(const ExperimentConfig& cfg, const Teacher& teacher, const Dataset& source,
                        SamplerKind kind, const LossSpec& loss, bool importance, const Rng& rng);
/// Student trained on ground truth, optionally label-smoothed or importance-weighted.
Network erm_student(const ExperimentConfig& cfg, const Dataset& data, double smoothing, bool importance,
                    const Rng& rng);
/// MixUp baseline: mixed inputs with mixed one-hot labels.
Network mixup_student(const ExperimentConfig& cfg, const Dataset& data, bool importance, const Rng& rng);

/// Mean teacher normalised entropy over `n` inputs drawn from `sampler`.
double transfer_entropy(const Teacher& teacher, const TransferSampler& sampler, std::size_t n, Rng rng);

/// Model file locations inside the output directory.
std::string teacher_model_path(const ExperimentConfig& cfg, std::uint64_t seed);
std::string student_model_path(const ExperimentConfig& cfg, std::uint64_t seed);
Teacher load_teacher(const std::string& path);

std::vector<ResultRow> run_train_teacher(const ExperimentConfig& cfg, std::uint64_t seed);
std::vector<ResultRow> run_distill(const ExperimentConfig& cfg, std::uint64_t seed);
std::vector<ResultRow> run_observation1(const ExperimentConfig& cfg, std::uint64_t seed);
std::vector<ResultRow> run_observation2(const ExperimentConfig& cfg, std::uint64_t seed);
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, std::uint64_t seed);
std::vector<ResultRow> run_curve_uncertainty(const ExperimentConfig& cfg, std::uint64_t seed);

std::vector<ResultRow> run_experiment(ExperimentKind kind, const ExperimentConfig& cfg, std::uint64_t seed);

/// Lambda grid {0, 1/(steps-1), ..., 1}.
std::vector<double> lambda_grid(std::size_t steps);

}  // namespace xcl
