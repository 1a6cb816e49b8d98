#include "xcl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "xcl/errors.hpp"
#include "xcl/losses.hpp"
#include "xcl/samplers.hpp"

namespace xcl {

SplitResult split_by_entropy(std::span<const double> entropies) {
  if (entropies.empty()) throw DataError("cannot split an empty set");
  std::vector<std::size_t> order(entropies.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return entropies[a] > entropies[b]; });
  const std::size_t high_count = (order.size() + 1) / 2;
  SplitResult split;
  split.high.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(high_count));
  split.low.assign(order.begin() + static_cast<std::ptrdiff_t>(high_count), order.end());
  auto mean_of = [&](const std::vector<std::size_t>& idx) {
    double sum = 0.0;
    for (auto i : idx) sum += entropies[i];
    return idx.empty() ? 0.0 : sum / static_cast<double>(idx.size());
  };
  // Averages are taken in sorted order, then the index lists are reported ascending.
  split.avg_entropy_high = mean_of(split.high);
  split.avg_entropy_low = mean_of(split.low);
  std::ranges::sort(split.high);
  std::ranges::sort(split.low);
  return split;
}

std::vector<double> teacher_entropies(const Teacher& teacher, const Matrix& inputs) {
  if (teacher.head() != HeadKind::kLogits) throw ConfigError("entropy is undefined for a regression teacher");
  const auto out = teacher_predict(teacher, inputs);
  std::vector<double> h(out.rows());
  for (std::size_t r = 0; r < out.rows(); ++r) h[r] = normalized_entropy(out.values.row(r));
  return h;
}

SplitResult split_by_entropy(const Teacher& teacher, const Dataset& heldout) {
  if (teacher.head() != HeadKind::kLogits) throw ConfigError("entropy split needs a classification teacher");
  return split_by_entropy(teacher_entropies(teacher, heldout.features()));
}

std::vector<std::size_t> zero_accuracy_subset(const Teacher& teacher, const Dataset& heldout) {
  if (teacher.head() != HeadKind::kLogits) throw ConfigError("zero-accuracy subset needs a classification teacher");
  if (!heldout.is_classification()) throw ConfigError("zero-accuracy subset needs class labels");
  const auto out = teacher_predict(teacher, heldout.features());
  std::vector<std::size_t> wrong;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const auto p = out.values.row(r);
    const auto pred = static_cast<std::size_t>(std::ranges::max_element(p) - p.begin());
    if (pred != heldout.labels()[r]) wrong.push_back(r);
  }
  return wrong;
}

double error_metric(std::span<const double> pred_mu, std::span<const double> target, ErrorKind kind) {
  if (pred_mu.size() != target.size()) throw ShapeError("error_metric: dimensions differ");
  if (kind == ErrorKind::kEuclidean) {
    double sq = 0.0;
    for (std::size_t k = 0; k < pred_mu.size(); ++k) sq += (pred_mu[k] - target[k]) * (pred_mu[k] - target[k]);
    return std::sqrt(sq);
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t k = 0; k < pred_mu.size(); ++k) {
    dot += pred_mu[k] * target[k];
    na += pred_mu[k] * pred_mu[k];
    nb += target[k] * target[k];
  }
  if (na == 0.0 || nb == 0.0) throw DataError("angular error of a zero vector is undefined");
  const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return std::acos(cosine) * 180.0 / std::numbers::pi;
}

MetricsReport evaluate_outputs(const TeacherOutputs& outputs, const Dataset& data, std::size_t k, ErrorKind error) {
  if (outputs.rows() != data.size()) throw ShapeError("prediction count does not match dataset");
  MetricsReport report;
  report.k = k;
  const double n = static_cast<double>(data.size());
  if (outputs.kind == HeadKind::kGaussian) {
    if (data.is_classification()) throw ConfigError("regression predictions need regression targets");
    const std::size_t d = outputs.values.cols() - 1;
    if (d != data.target_dim()) throw ShapeError("prediction and target dimensions differ");
    double total = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r) {
      total += error_metric(outputs.values.row(r).first(d), data.targets().row(r), error);
    }
    report.mean_error = total / n;
    return report;
  }
  if (!data.is_classification()) throw ConfigError("classification predictions need class labels");
  const std::size_t c = outputs.values.cols();
  if (k == 0 || k > c) throw ConfigError("top-k needs 1 <= k <= c");
  if (c != data.num_classes()) throw ShapeError("prediction width does not match class count");
  double top1 = 0.0;
  double topk = 0.0;
  double entropy = 0.0;
  double truth = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto p = outputs.values.row(r);
    const std::size_t y = data.labels()[r];
    // Rank of the true class; equal probabilities rank lower indices first.
    std::size_t rank = 0;
    for (std::size_t j = 0; j < c; ++j) {
      if (p[j] > p[y] || (p[j] == p[y] && j < y)) ++rank;
    }
    if (rank == 0) top1 += 1.0;
    if (rank < k) topk += 1.0;
    entropy += normalized_entropy(p);
    truth += p[y];
  }
  report.top1 = top1 / n;
  report.topk = topk / n;
  report.avg_entropy = entropy / n;
  report.avg_truth_prob = truth / n;
  return report;
}

MetricsReport evaluate(const Teacher& model, const Dataset& data, std::size_t k, ErrorKind error) {
  return evaluate_outputs(teacher_predict(model, data.features()), data, k, error);
}

MetricsReport evaluate(const Network& model, const Dataset& data, std::size_t k, ErrorKind error) {
  return evaluate(Teacher::single(model), data, k, error);
}

std::vector<CurvePoint> uncertainty_vs_lambda(const Teacher& model, const Dataset& data,
                                              std::span<const double> lambda_grid, std::size_t pairs, Rng& rng) {
  if (model.head() != HeadKind::kGaussian) throw ConfigError("uncertainty curve needs a Gaussian head");
  if (pairs == 0) throw ConfigError("uncertainty curve needs at least one pair per lambda");
  for (double l : lambda_grid) {
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambda grid values must lie in [0, 1]");
  }
  std::vector<std::pair<std::size_t, std::size_t>> chosen(pairs);
  for (auto& [i, j] : chosen) {
    i = rng.index(data.size());
    j = rng.index(data.size());
  }
  std::vector<CurvePoint> curve;
  curve.reserve(lambda_grid.size());
  Matrix inputs(pairs, data.dim());
  for (double lambda : lambda_grid) {
    for (std::size_t p = 0; p < pairs; ++p) {
      const auto x = mix_pair(data.features().row(chosen[p].first), data.features().row(chosen[p].second), lambda);
      std::ranges::copy(x, inputs.row(p).begin());
    }
    const auto out = teacher_predict(model, inputs);
    double total = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) total += out.gaussian(p).sigma();
    curve.push_back({lambda, total / static_cast<double>(pairs)});
  }
  return curve;
}

std::vector<CurvePoint> uncertainty_vs_lambda(const Network& model, const Dataset& data,
                                              std::span<const double> lambda_grid, std::size_t pairs, Rng& rng) {
  return uncertainty_vs_lambda(Teacher::single(model), data, lambda_grid, pairs, rng);
}

}  // namespace xcl
