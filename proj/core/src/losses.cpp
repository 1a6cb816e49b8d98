#include "xcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "xcl/errors.hpp"

namespace xcl {

namespace {

constexpr double kSimplexTolerance = 1e-9;

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be positive and finite, got " + std::to_string(temperature));
  }
}

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": sizes " + std::to_string(a) + " and " +
                     std::to_string(b) + " differ");
  }
}

}  // namespace

CategoricalDist::CategoricalDist(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw DataError("categorical distribution is empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0 + kSimplexTolerance) {
      throw DataError("categorical component " + std::to_string(p) + " outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw DataError("categorical distribution sums to " + std::to_string(sum));
  }
}

CategoricalDist::CategoricalDist(std::vector<double> probs, std::vector<double> logits)
    : CategoricalDist(std::move(probs)) {
  logits_ = std::move(logits);
}

CategoricalDist CategoricalDist::from_logits(std::span<const double> logits) {
  return CategoricalDist(softmax(logits, 1.0), std::vector<double>(logits.begin(), logits.end()));
}

CategoricalDist CategoricalDist::with_logits(std::vector<double> probs, std::vector<double> logits) {
  if (probs.size() != logits.size()) throw ShapeError("probabilities and logits differ in size");
  return CategoricalDist(std::move(probs), std::move(logits));
}

CategoricalDist CategoricalDist::one_hot(std::size_t index, std::size_t classes) {
  if (index >= classes) throw ConfigError("class index out of range");
  std::vector<double> p(classes, 0.0);
  p[index] = 1.0;
  return CategoricalDist(std::move(p));
}

CategoricalDist CategoricalDist::uniform(std::size_t classes) {
  if (classes == 0) throw ConfigError("uniform distribution needs at least one class");
  return CategoricalDist(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

std::vector<double> CategoricalDist::tempered(double temperature) const {
  check_temperature(temperature);
  if (logits_) return softmax(*logits_, temperature);
  if (temperature == 1.0) return probs_;
  std::vector<double> logp(probs_.size());
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    logp[j] = probs_[j] > 0.0 ? std::log(probs_[j]) : -std::numeric_limits<double>::infinity();
  }
  return softmax(logp, temperature);
}

std::size_t CategoricalDist::argmax() const {
  // First maximum wins, so ties resolve to the lowest class index.
  return static_cast<std::size_t>(std::ranges::max_element(probs_) - probs_.begin());
}

double GaussianPred::sigma() const { return std::exp(0.5 * s); }

GaussianPred GaussianPred::from_row(std::span<const double> row) {
  if (row.size() < 2) throw ShapeError("Gaussian output row needs at least 2 values");
  return {std::vector<double>(row.begin(), row.end() - 1), row.back()};
}

std::vector<double> log_softmax(std::span<const double> logits, double temperature) {
  check_temperature(temperature);
  if (logits.empty()) throw ShapeError("softmax of an empty vector");
  const double max = *std::ranges::max_element(logits);
  if (!std::isfinite(max)) throw DataError("softmax needs at least one finite logit");
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = (logits[j] - max) / temperature;
    sum += std::exp(out[j]);
  }
  const double log_sum = std::log(sum);
  for (auto& v : out) v -= log_sum;
  return out;
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  auto out = log_softmax(logits, temperature);
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp(v);
    sum += v;
  }
  for (auto& v : out) v /= sum;
  return out;
}

LossGrad cross_entropy_soft(std::span<const double> logits, const CategoricalDist& target) {
  check_same_size(logits.size(), target.size(), "cross_entropy_soft");
  const auto logq = log_softmax(logits, 1.0);
  LossGrad out{0.0, std::vector<double>(logits.size())};
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (target[j] > 0.0) out.loss -= target[j] * logq[j];
    out.grad[j] = std::exp(logq[j]) - target[j];
  }
  return out;
}

LossGrad kd_categorical(const CategoricalDist& teacher, std::span<const double> student_logits,
                        double temperature) {
  check_same_size(student_logits.size(), teacher.size(), "kd_categorical");
  const auto p = teacher.tempered(temperature);
  const auto logp = teacher.logits() ? log_softmax(*teacher.logits(), temperature) : std::vector<double>{};
  const auto logq = log_softmax(student_logits, temperature);
  LossGrad out{0.0, std::vector<double>(student_logits.size())};
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) {
      const double lp = logp.empty() ? std::log(p[j]) : logp[j];
      out.loss += p[j] * (lp - logq[j]);
    }
    out.grad[j] = (std::exp(logq[j]) - p[j]) / temperature;
  }
  // Rounding can leave a -1e-17 residue at equality.
  out.loss = std::max(out.loss, 0.0);
  return out;
}

LossGrad gaussian_nll(const GaussianPred& pred, std::span<const double> target) {
  check_same_size(pred.dims(), target.size(), "gaussian_nll");
  const double inv_var = std::exp(-pred.s);
  double sq = 0.0;
  LossGrad out{0.0, std::vector<double>(pred.dims() + 1)};
  for (std::size_t k = 0; k < pred.dims(); ++k) {
    const double diff = pred.mu[k] - target[k];
    sq += diff * diff;
    out.grad[k] = inv_var * diff;
  }
  out.loss = 0.5 * inv_var * sq + 0.5 * pred.s;
  out.grad.back() = -0.5 * inv_var * sq + 0.5;
  return out;
}

LossGrad gaussian_kl(const GaussianPred& teacher, const GaussianPred& student, bool dim_scaled) {
  check_same_size(teacher.dims(), student.dims(), "gaussian_kl");
  const double scale = dim_scaled ? static_cast<double>(student.dims()) : 1.0;
  const double inv_var = std::exp(-student.s);
  const double delta = teacher.s - student.s;
  const double ratio = std::exp(delta);
  double sq = 0.0;
  LossGrad out{0.0, std::vector<double>(student.dims() + 1)};
  for (std::size_t k = 0; k < student.dims(); ++k) {
    const double diff = student.mu[k] - teacher.mu[k];
    sq += diff * diff;
    out.grad[k] = inv_var * diff;
  }
  out.loss = 0.5 * (scale * ratio + inv_var * sq - scale * delta - scale);
  out.grad.back() = 0.5 * (-scale * ratio - inv_var * sq + scale);
  out.loss = std::max(out.loss, 0.0);
  return out;
}

double normalized_entropy(std::span<const double> probs) {
  if (probs.size() < 2) throw ConfigError("normalized entropy needs at least 2 classes");
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(probs.size())), 0.0, 1.0);
}

double normalized_entropy(const CategoricalDist& dist) { return normalized_entropy(dist.probs()); }

CategoricalDist label_smooth(std::size_t class_index, std::size_t classes, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError("label smoothing eps must lie in [0, 1)");
  if (classes < 2) throw ConfigError("label smoothing needs at least 2 classes");
  if (class_index >= classes) throw ConfigError("class index out of range");
  std::vector<double> p(classes, eps / static_cast<double>(classes - 1));
  p[class_index] = 1.0 - eps;
  return CategoricalDist(std::move(p));
}

CategoricalDist mix_labels(const CategoricalDist& a, const CategoricalDist& b, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mixing coefficient must lie in [0, 1]");
  check_same_size(a.size(), b.size(), "mix_labels");
  std::vector<double> p(a.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = lambda * a[j] + (1.0 - lambda) * b[j];
  return CategoricalDist(std::move(p));
}

void LossSpec::validate() const {
  check_temperature(temperature);
  if (!(kd_gt_weight >= 0.0 && kd_gt_weight <= 1.0)) {
    throw ConfigError("kd_gt_weight must lie in [0, 1]");
  }
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropySoft:
      return "ce";
    case LossKind::kKDCategorical:
      return "kd";
    case LossKind::kGaussianNLL:
      return "nll";
    case LossKind::kGaussianKL:
      return "kl";
  }
  return "?";
}

}  // namespace xcl
