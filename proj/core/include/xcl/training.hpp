#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "xcl/losses.hpp"
#include "xcl/matrix.hpp"
#include "xcl/network.hpp"
#include "xcl/rng.hpp"

namespace xcl {

/// Inputs paired with per-row targets. The target layout depends on the loss:
///   kCrossEntropySoft  n x c   target probabilities (one-hot, smoothed, mixed)
///   kKDCategorical     n x c   teacher logits (softmax gives the teacher probs)
///   kGaussianNLL       n x d   regression targets (ground truth or teacher means)
///   kGaussianKL        n x d+1 teacher (mu..., s)
struct TrainingData {
  Matrix inputs;
  Matrix targets;
  /// Ground-truth probabilities (n x c); used only when kd_gt_weight > 0.
  Matrix ground_truth;
  /// Non-empty: every epoch draws n rows with replacement in proportion to
  /// these weights instead of a plain reshuffle.
  std::vector<double> sample_weights;
};

/// Produces the training data for a given epoch; lets the loop draw a fresh
/// transfer set from a sampler every epoch.
using EpochSource = std::function<TrainingData(std::size_t epoch, Rng& rng)>;

struct StepDecay {
  std::size_t epoch;  // takes effect from this (0-based) epoch on
  double multiplier;
};

/// SGD with momentum. Weight decay enters as an explicit L2 gradient term
/// (not decoupled) and applies to weights and biases alike:
///   v <- momentum * v - lr * (grad + weight_decay * param);  param <- param + v
struct OptimizerState {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::vector<StepDecay> schedule;
  LayerParams velocity;  // lazily zero-initialised on first use

  double rate_at(std::size_t epoch) const;
  void validate() const;
};

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
};

struct TrainResult {
  Network net;
  std::vector<double> epoch_losses;
};

/// Loss of one output row against its target row; gradient w.r.t. the output row.
LossGrad row_loss(const LossSpec& spec, std::span<const double> output, std::span<const double> target,
                  std::span<const double> ground_truth);

/// Mean loss over the batch and its exact parameter gradient.
struct BatchEvaluation {
  double loss = 0.0;
  LayerParams grads;
};
BatchEvaluation evaluate_batch(const Network& net, const Matrix& inputs, const Matrix& targets,
                               const LossSpec& spec, const Matrix& ground_truth = {});

/// Throws ConfigError if `spec` cannot drive `net`'s head, ShapeError if the
/// target width does not fit.
void check_compatible(const Network& net, const LossSpec& spec, const TrainingData& data);

/// Applies one SGD update in place with learning rate `lr`.
void sgd_step(Network& net, LayerParams& grads, OptimizerState& opt, double lr);

/// Mini-batch SGD. Batches come from a fresh permutation every epoch (shuffle
/// substream of `rng`); the last partial batch is kept. Throws NumericError on a
/// non-finite loss.
TrainResult train(Network net, const TrainingData& data, const LossSpec& spec, OptimizerState& opt,
                  const TrainOptions& options, Rng& rng);
TrainResult train(Network net, const EpochSource& source, const LossSpec& spec, OptimizerState& opt,
                  const TrainOptions& options, Rng& rng);

/// Row indices drawn with replacement proportional to `weights`.
std::vector<std::size_t> weighted_draw(std::span<const double> weights, std::size_t n, Rng& rng);
/// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace xcl
