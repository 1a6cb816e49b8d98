#include "xcl/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xcl/errors.hpp"

namespace xcl {

double OptimizerState::rate_at(std::size_t epoch) const {
  double rate = learning_rate;
  for (const auto& step : schedule) {
    if (epoch >= step.epoch) rate *= step.multiplier;
  }
  return rate;
}

void OptimizerState::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  for (const auto& step : schedule) {
    if (!(step.multiplier > 0.0)) throw ConfigError("schedule multipliers must be positive");
  }
}

LossGrad row_loss(const LossSpec& spec, std::span<const double> output, std::span<const double> target,
                  std::span<const double> ground_truth) {
  switch (spec.kind) {
    case LossKind::kCrossEntropySoft:
      return cross_entropy_soft(output, CategoricalDist(std::vector<double>(target.begin(), target.end())));
    case LossKind::kKDCategorical: {
      auto out = kd_categorical(CategoricalDist::from_logits(target), output, spec.temperature);
      if (spec.kd_gt_weight > 0.0) {
        const auto ce = cross_entropy_soft(
            output, CategoricalDist(std::vector<double>(ground_truth.begin(), ground_truth.end())));
        const double w = spec.kd_gt_weight;
        out.loss = (1.0 - w) * out.loss + w * ce.loss;
        for (std::size_t j = 0; j < out.grad.size(); ++j) {
          out.grad[j] = (1.0 - w) * out.grad[j] + w * ce.grad[j];
        }
      }
      return out;
    }
    case LossKind::kGaussianNLL:
      return gaussian_nll(GaussianPred::from_row(output), target);
    case LossKind::kGaussianKL:
      return gaussian_kl(GaussianPred::from_row(target), GaussianPred::from_row(output),
                         spec.kl_dim_scaled);
  }
  throw ConfigError("unknown loss kind");
}

namespace {

std::size_t expected_target_width(const Network& net, const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::kCrossEntropySoft:
    case LossKind::kKDCategorical:
      return net.spec().head_size();
    case LossKind::kGaussianNLL:
      return net.spec().head_size();
    case LossKind::kGaussianKL:
      return net.spec().head_size() + 1;
  }
  return 0;
}

bool wants_logits(LossKind kind) {
  return kind == LossKind::kCrossEntropySoft || kind == LossKind::kKDCategorical;
}

}  // namespace

void check_compatible(const Network& net, const LossSpec& spec, const TrainingData& data) {
  spec.validate();
  if (wants_logits(spec.kind) != (net.head() == HeadKind::kLogits)) {
    throw ConfigError("loss '" + to_string(spec.kind) + "' cannot train a " + to_string(net.head()) +
                      " head");
  }
  if (data.inputs.rows() != data.targets.rows()) throw ShapeError("inputs and targets row counts differ");
  if (data.inputs.rows() > 0 && data.inputs.cols() != net.input_dim()) {
    throw ShapeError("training inputs do not match network input dimension");
  }
  if (data.targets.rows() > 0 && data.targets.cols() != expected_target_width(net, spec)) {
    throw ShapeError("target width " + std::to_string(data.targets.cols()) + " does not fit loss '" +
                     to_string(spec.kind) + "'");
  }
  if (spec.kind == LossKind::kKDCategorical && spec.kd_gt_weight > 0.0 &&
      (data.ground_truth.rows() != data.inputs.rows() || data.ground_truth.cols() != net.spec().head_size())) {
    throw ConfigError("kd_gt_weight > 0 requires ground-truth probabilities for every row");
  }
  if (!data.sample_weights.empty() && data.sample_weights.size() != data.inputs.rows()) {
    throw ShapeError("sample weight count does not match row count");
  }
}

BatchEvaluation evaluate_batch(const Network& net, const Matrix& inputs, const Matrix& targets,
                               const LossSpec& spec, const Matrix& ground_truth) {
  const ForwardCache cache = forward_cached(net, inputs);
  const Matrix& outputs = cache.activations.back();
  for (double v : outputs.values()) {
    if (!std::isfinite(v)) throw NumericError("non-finite network output during training");
  }
  Matrix upstream(outputs.rows(), outputs.cols());
  const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(inputs.rows(), 1));
  BatchEvaluation eval;
  for (std::size_t r = 0; r < outputs.rows(); ++r) {
    const auto gt = ground_truth.rows() > r ? ground_truth.row(r) : std::span<const double>{};
    const auto lg = row_loss(spec, outputs.row(r), targets.row(r), gt);
    eval.loss += lg.loss * scale;
    auto up = upstream.row(r);
    for (std::size_t j = 0; j < up.size(); ++j) up[j] = lg.grad[j] * scale;
  }
  eval.grads = backward(net, cache, upstream);
  return eval;
}

void sgd_step(Network& net, LayerParams& grads, OptimizerState& opt, double lr) {
  if (opt.velocity.empty()) opt.velocity = zeros_like(net);
  if (opt.velocity.size() != net.layers().size()) throw ShapeError("optimizer state does not match network");
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    if (opt.velocity[l].weight.rows() != net.layers()[l].weight.rows() ||
        opt.velocity[l].weight.cols() != net.layers()[l].weight.cols()) {
      throw ShapeError("optimizer state does not match network");
    }
  }
  auto& params = net.mutable_layers();
  for_each_parameter_pair(opt.velocity, grads, [&](double& v, double& g) { v = opt.momentum * v - lr * g; });
  for_each_parameter_pair(opt.velocity, params, [&](double& v, double& p) {
    if (opt.weight_decay != 0.0) v -= lr * opt.weight_decay * p;
    p += v;
  });
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  return order;
}

std::vector<std::size_t> weighted_draw(std::span<const double> weights, std::size_t n, Rng& rng) {
  std::vector<double> cumulative(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw ConfigError("sampling weights must be non-negative");
    total += weights[i];
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw ConfigError("sampling weights sum to zero");
  std::vector<std::size_t> picks(n);
  for (auto& p : picks) {
    const double u = rng.uniform() * total;
    const auto it = std::ranges::upper_bound(cumulative, u);
    p = std::min(static_cast<std::size_t>(it - cumulative.begin()), weights.size() - 1);
  }
  return picks;
}

namespace {

double run_epoch(Network& net, const TrainingData& data, const LossSpec& spec, OptimizerState& opt,
                 std::size_t batch_size, double lr, Rng& shuffle) {
  const std::size_t n = data.inputs.rows();
  if (n == 0) return 0.0;
  const auto order = data.sample_weights.empty() ? permutation(n, shuffle)
                                                  : weighted_draw(data.sample_weights, n, shuffle);
  const bool with_gt = data.ground_truth.rows() == n;
  double total = 0.0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    const std::span<const std::size_t> idx(order.data() + start, stop - start);
    const Matrix x = data.inputs.gather_rows(idx);
    const Matrix t = data.targets.gather_rows(idx);
    const Matrix gt = with_gt ? data.ground_truth.gather_rows(idx) : Matrix{};
    auto eval = evaluate_batch(net, x, t, spec, gt);
    if (!std::isfinite(eval.loss)) throw NumericError("non-finite training loss");
    total += eval.loss * static_cast<double>(idx.size());
    sgd_step(net, eval.grads, opt, lr);
  }
  return total / static_cast<double>(n);
}

template <typename Source>
TrainResult train_loop(Network net, Source&& source, const LossSpec& spec, OptimizerState& opt,
                       const TrainOptions& options, Rng& rng) {
  spec.validate();
  opt.validate();
  if (options.batch_size == 0) throw ConfigError("batch size must be positive");
  if (wants_logits(spec.kind) != (net.head() == HeadKind::kLogits)) {
    throw ConfigError("loss '" + to_string(spec.kind) + "' cannot train a " + to_string(net.head()) +
                      " head");
  }
  Rng shuffle = rng.substream("shuffle");
  Rng sampling = rng.substream("sampling");
  TrainResult result{std::move(net), {}};
  result.epoch_losses.reserve(options.epochs);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const TrainingData& data = source(epoch, sampling);
    check_compatible(result.net, spec, data);
    result.epoch_losses.push_back(
        run_epoch(result.net, data, spec, opt, options.batch_size, opt.rate_at(epoch), shuffle));
  }
  return result;
}

}  // namespace

TrainResult train(Network net, const EpochSource& source, const LossSpec& spec, OptimizerState& opt,
                  const TrainOptions& options, Rng& rng) {
  TrainingData current;
  return train_loop(
      std::move(net),
      [&](std::size_t epoch, Rng& sampling) -> const TrainingData& {
        current = source(epoch, sampling);
        return current;
      },
      spec, opt, options, rng);
}

TrainResult train(Network net, const TrainingData& data, const LossSpec& spec, OptimizerState& opt,
                  const TrainOptions& options, Rng& rng) {
  check_compatible(net, spec, data);
  return train_loop(
      std::move(net), [&data](std::size_t, Rng&) -> const TrainingData& { return data; }, spec, opt,
      options, rng);
}

}  // namespace xcl
