#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xcl {

/// A point on the probability simplex, optionally with the logits it came
/// from. Keeping the logits lets temperature rescaling be exact.
class CategoricalDist {
 public:
  /// Throws DataError unless probs is non-empty, non-negative and sums to 1
  /// within 1e-9.
  explicit CategoricalDist(std::vector<double> probs);
  static CategoricalDist from_logits(std::span<const double> logits);
  /// Validated probabilities plus the logits cached for temperature rescaling.
  static CategoricalDist with_logits(std::vector<double> probs, std::vector<double> logits);
  static CategoricalDist one_hot(std::size_t index, std::size_t classes);
  static CategoricalDist uniform(std::size_t classes);

  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t j) const { return probs_[j]; }
  const std::optional<std::vector<double>>& logits() const noexcept { return logits_; }

  /// softmax(logits / T) when logits are stored, otherwise softmax(log(p) / T).
  /// Zero-probability classes stay at zero.
  std::vector<double> tempered(double temperature) const;

  std::size_t argmax() const;

 private:
  CategoricalDist(std::vector<double> probs, std::vector<double> logits);

  std::vector<double> probs_;
  std::optional<std::vector<double>> logits_;
};

/// Isotropic Gaussian output: mean vector and scalar log-variance s = log sigma^2.
struct GaussianPred {
  std::vector<double> mu;
  double s = 0.0;

  std::size_t dims() const noexcept { return mu.size(); }
  double sigma() const;
  /// Splits a raw Gaussian-head row (mu..., s).
  static GaussianPred from_row(std::span<const double> row);
};

/// Loss value and its gradient with respect to the raw network outputs.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Numerically stable softmax of logits / T. Throws ConfigError for T <= 0.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);
std::vector<double> log_softmax(std::span<const double> logits, double temperature = 1.0);

/// -sum_j target_j log softmax(logits)_j. Gradient: softmax(logits) - target.
LossGrad cross_entropy_soft(std::span<const double> logits, const CategoricalDist& target);

/// KL(teacher_T || softmax(student / T)) with 0 log 0 = 0. The gradient is
/// (q_T - p_T) / T; no T^2 rescaling is applied.
LossGrad kd_categorical(const CategoricalDist& teacher, std::span<const double> student_logits,
                        double temperature);

/// 1/2 exp(-s) ||mu - y||^2 + 1/2 s. Gradient laid out as (d/dmu..., d/ds).
LossGrad gaussian_nll(const GaussianPred& pred, std::span<const double> target);

/// KL(N(mu_t, sigma_t^2) || N(mu, sigma^2)) for isotropic Gaussians, gradient
/// with respect to the student (mu..., s).
///
/// With dim_scaled = false the variance terms enter once,
///   1/2 [exp(s_t - s) + exp(-s) ||mu_t - mu||^2 - (s_t - s) - 1],
/// which is the form the loss is defined by here. dim_scaled = true gives the
/// textbook d-dimensional KL (variance terms multiplied by d).
LossGrad gaussian_kl(const GaussianPred& teacher, const GaussianPred& student,
                     bool dim_scaled = false);

/// -sum_j p_j log p_j / log c, clamped to [0, 1]. Throws ConfigError for c < 2.
double normalized_entropy(const CategoricalDist& dist);
double normalized_entropy(std::span<const double> probs);

/// 1 - eps on the true class, eps / (c - 1) elsewhere. Requires 0 <= eps < 1.
CategoricalDist label_smooth(std::size_t class_index, std::size_t classes, double eps);

/// lambda * a + (1 - lambda) * b.
CategoricalDist mix_labels(const CategoricalDist& a, const CategoricalDist& b, double lambda);

enum class LossKind { kCrossEntropySoft, kKDCategorical, kGaussianNLL, kGaussianKL };
enum class TargetSource { kGroundTruth, kTeacher };

/// Selects the per-row objective a training run minimises.
struct LossSpec {
  LossKind kind = LossKind::kCrossEntropySoft;
  TargetSource source = TargetSource::kGroundTruth;
  double temperature = 1.0;
  /// Weight of an added ground-truth cross-entropy term for kKDCategorical.
  double kd_gt_weight = 0.0;
  /// Textbook d-dimensional Gaussian KL instead of the single-variance-term form.
  bool kl_dim_scaled = false;

  /// Throws ConfigError for T <= 0 or kd_gt_weight outside [0, 1].
  void validate() const;
};

std::string to_string(LossKind kind);

}  // namespace xcl
