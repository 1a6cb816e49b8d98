#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xcl/datasets.hpp"
#include "xcl/matrix.hpp"
#include "xcl/rng.hpp"

namespace xcl {

/// lambda * a + (1 - lambda) * b, elementwise.
std::vector<double> mix_pair(std::span<const double> a, std::span<const double> b, double lambda);

/// Mixed inputs with the pair indices and coefficients that produced them.
struct MixBatch {
  Matrix inputs;
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  std::vector<double> lambda;
};

/// Each row mixes two dataset rows with lambda ~ U[0, 1]. Rows are picked
/// uniformly, or in proportion to `weights` when given.
MixBatch sample_mix_batch(const Dataset& data, std::size_t n, Rng& rng, std::span<const double> weights = {});

struct GridShape {
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Rectangle copied from the second input, in grid cells.
struct CutBox {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t area() const noexcept { return height * width; }
};

/// Box with sides round(H sqrt(1 - lambda)) x round(W sqrt(1 - lambda)),
/// placed uniformly among the positions that keep it inside the grid.
CutBox cutmix_box(GridShape grid, double lambda, Rng& rng);
/// Copy of `a` with `box` overwritten by the matching cells of `b`.
std::vector<double> apply_cutmix(std::span<const double> a, std::span<const double> b, const CutBox& box,
                                 GridShape grid);
std::vector<double> cutmix_pair(std::span<const double> a, std::span<const double> b, double lambda,
                                GridShape grid, Rng& rng);

/// x + eps with eps_k ~ N(0, sigma^2).
std::vector<double> noise_augment(std::span<const double> x, double sigma, Rng& rng);
/// Standard normal vector.
std::vector<double> gaussian_image(std::size_t dim, Rng& rng);

/// Generative model conditioned on a class vector on the simplex.
class ConditionalGenerator {
 public:
  virtual ~ConditionalGenerator() = default;
  virtual std::size_t num_classes() const = 0;
  virtual std::size_t latent_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual std::vector<double> generate(std::span<const double> z, std::span<const double> class_vector) const = 0;
};

/// Class-conditional diagonal Gaussian whose mean and scale are interpolated
/// by the class vector: x = sum_k e_k mean_k + z * (sum_k e_k scale_k).
class ToyGenerator final : public ConditionalGenerator {
 public:
  ToyGenerator(Matrix class_means, Matrix class_scales);

  std::size_t num_classes() const override { return means_.rows(); }
  std::size_t latent_dim() const override { return means_.cols(); }
  std::size_t output_dim() const override { return means_.cols(); }
  std::vector<double> generate(std::span<const double> z, std::span<const double> class_vector) const override;

  const Matrix& class_means() const noexcept { return means_; }
  const Matrix& class_scales() const noexcept { return scales_; }

 private:
  Matrix means_;
  Matrix scales_;
};

inline constexpr double kGeneratorScaleFloor = 1e-6;

/// Per-class sample means and (n - 1) standard deviations, floored at 1e-6.
ToyGenerator fit_toy_generator(const Dataset& data);

struct GeneratorDraw {
  std::vector<double> x;
  std::vector<double> class_vector;
  std::size_t first_class = 0;
  std::size_t second_class = 0;
  double lambda = 1.0;
};

/// i, j ~ U{0..c-1}, lambda ~ U[0, 1], z ~ N(0, I); conditions on
/// lambda e_i + (1 - lambda) e_j. With mix_classes = false the class vector is e_i.
GeneratorDraw sample_generator_mix(const ConditionalGenerator& gen, Rng& rng, bool mix_classes = true);

/// Sampled inputs; origin[i] is the dataset row a sample was copied from, or
/// -1 for synthesised rows.
struct SampledBatch {
  Matrix inputs;
  std::vector<std::ptrdiff_t> origin;
};

/// An approximation q(x) of the input distribution that transfer sets are drawn from.
class TransferSampler {
 public:
  virtual ~TransferSampler() = default;
  virtual SampledBatch sample(std::size_t n, Rng& rng) const = 0;
  virtual std::size_t dim() const = 0;
  /// Short provenance string, e.g. "mix" or "noise(sigma=0.1414)".
  virtual std::string describe() const = 0;
};

/// Dataset rows. Without replacement a batch is a prefix of a random
/// permutation (successive permutations when n exceeds the dataset size).
class EmpiricalSampler final : public TransferSampler {
 public:
  explicit EmpiricalSampler(Dataset data, bool with_replacement = false, std::vector<double> weights = {});
  SampledBatch sample(std::size_t n, Rng& rng) const override;
  std::size_t dim() const override { return data_.dim(); }
  std::string describe() const override;

 private:
  Dataset data_;
  bool with_replacement_;
  std::vector<double> weights_;
};

class MixSampler final : public TransferSampler {
 public:
  explicit MixSampler(Dataset data, std::vector<double> weights = {});
  SampledBatch sample(std::size_t n, Rng& rng) const override;
  std::size_t dim() const override { return data_.dim(); }
  std::string describe() const override { return "mix"; }

 private:
  Dataset data_;
  std::vector<double> weights_;
};

class CutMixSampler final : public TransferSampler {
 public:
  CutMixSampler(Dataset data, GridShape grid);
  SampledBatch sample(std::size_t n, Rng& rng) const override;
  std::size_t dim() const override { return data_.dim(); }
  std::string describe() const override;

 private:
  Dataset data_;
  GridShape grid_;
};

class NoiseSampler final : public TransferSampler {
 public:
  NoiseSampler(Dataset data, double sigma);
  SampledBatch sample(std::size_t n, Rng& rng) const override;
  std::size_t dim() const override { return data_.dim(); }
  std::string describe() const override;

 private:
  Dataset data_;
  double sigma_;
};

class GaussianImageSampler final : public TransferSampler {
 public:
  explicit GaussianImageSampler(std::size_t dim);
  SampledBatch sample(std::size_t n, Rng& rng) const override;
  std::size_t dim() const override { return dim_; }
  std::string describe() const override { return "gaussian-image"; }

 private:
  std::size_t dim_;
};

class GeneratorSampler final : public TransferSampler {
 public:
  GeneratorSampler(std::shared_ptr<const ConditionalGenerator> gen, bool mix_classes);
  SampledBatch sample(std::size_t n, Rng& rng) const override;
  std::size_t dim() const override { return gen_->output_dim(); }
  std::string describe() const override;

 private:
  std::shared_ptr<const ConditionalGenerator> gen_;
  bool mix_classes_;
};

using WeightedSampler = std::pair<std::shared_ptr<const TransferSampler>, double>;

/// Each row comes from component k with probability weight_k. Component
/// assignment uses a substream of `rng`; components then draw their rows from
/// `rng` in component order, so a single full-weight component reproduces
/// that sampler exactly.
SampledBatch union_sample(std::span<const WeightedSampler> components, std::size_t n, Rng& rng);

class UnionSampler final : public TransferSampler {
 public:
  explicit UnionSampler(std::vector<WeightedSampler> components);
  SampledBatch sample(std::size_t n, Rng& rng) const override { return union_sample(components_, n, rng); }
  std::size_t dim() const override { return components_.front().first->dim(); }
  std::string describe() const override;

 private:
  std::vector<WeightedSampler> components_;
};

/// Per-sample probabilities proportional to 1 / count(class), summing to 1.
std::vector<double> importance_weights(const Dataset& data);

}  // namespace xcl
