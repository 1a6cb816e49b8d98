#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xcl/matrix.hpp"
#include "xcl/rng.hpp"

namespace xcl {

enum class LabelKind { kClasses, kRegression };

/// Immutable labelled sample set: features plus either class indices in
/// [0, c) or real-valued regression targets.
class Dataset {
 public:
  static Dataset classification(Matrix features, std::vector<std::size_t> labels, std::size_t classes);
  static Dataset regression(Matrix features, Matrix targets);

  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  LabelKind kind() const noexcept { return kind_; }
  bool is_classification() const noexcept { return kind_ == LabelKind::kClasses; }

  const Matrix& features() const noexcept { return features_; }
  /// Class indices; empty for regression data.
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }
  std::size_t num_classes() const noexcept { return classes_; }
  /// Regression targets (n x m); empty for classification data.
  const Matrix& targets() const noexcept { return targets_; }
  std::size_t target_dim() const noexcept { return targets_.cols(); }

  std::vector<std::size_t> class_counts() const;
  /// One-hot rows (n x c).
  Matrix one_hot() const;
  /// Indices of samples belonging to class k, ascending.
  std::vector<std::size_t> indices_of_class(std::size_t k) const;

  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Dataset() = default;

  LabelKind kind_ = LabelKind::kClasses;
  Matrix features_;
  std::vector<std::size_t> labels_;
  std::size_t classes_ = 0;
  Matrix targets_;
};

struct BlobsParams {
  std::size_t classes = 10;
  std::size_t dim = 16;
  std::size_t per_class = 200;
  double spread = 1.0;        // per-coordinate standard deviation around each center
  double center_scale = 1.0;  // centers ~ U[-center_scale, center_scale]^dim
};

/// Gaussian class blobs. Centers are drawn first, then samples in interleaved
/// class order (sample i belongs to class i % c).
Dataset make_blobs(const BlobsParams& params, Rng& rng);

/// Noise profile of the synthetic regression task. Inputs x ~ U[-1, 1]^d_in,
/// targets are 2-dimensional: y = g(x) + eps, eps ~ N(0, sigma(x)^2 I).
///   kLinear:     g(x) = (x1 + x2, x1 - x2),    sigma(x) = 0.05 + 0.3 |x1|
///   kSinusoidal: g(x) = sin(pi x1) * (1, x2),   sigma(x) = 0.05 + 0.3 cos(pi x1 / 2)
/// (x2 is taken as 0 when d_in = 1). The sinusoidal profile is noisiest around
/// x1 = 0, which is where convex mixtures of inputs concentrate.
enum class NoiseProfile { kLinear, kSinusoidal };

struct RegressionParams {
  std::size_t n = 1000;
  std::size_t input_dim = 2;
  NoiseProfile noise = NoiseProfile::kLinear;
};

std::vector<double> regression_mean(std::span<const double> x, NoiseProfile noise);
double regression_noise_sigma(std::span<const double> x, NoiseProfile noise);

Dataset make_heteroscedastic_regression(const RegressionParams& params, Rng& rng);

/// Random partition into (A, B) with |A| ~ fraction * n. With class_balanced
/// the fraction is applied per class (rounded), and every class needs >= 2
/// samples. Both parts keep the original relative order.
std::pair<Dataset, Dataset> split_disjoint(const Dataset& data, double fraction, bool class_balanced,
                                           Rng& rng);
/// Index form of split_disjoint.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const Dataset& data,
                                                                            double fraction,
                                                                            bool class_balanced, Rng& rng);

/// Picks `reduced_classes` classes at random and keeps ceil(keep_fraction * count)
/// random samples of each; other classes are untouched. Order is preserved.
Dataset subsample_imbalanced(const Dataset& data, std::size_t reduced_classes, double keep_fraction,
                             Rng& rng);

void save_dataset(std::ostream& out, const Dataset& data);
Dataset load_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

std::string to_string(NoiseProfile noise);
NoiseProfile parse_noise_profile(const std::string& text);

}  // namespace xcl
