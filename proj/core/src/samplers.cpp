#include "xcl/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xcl/errors.hpp"
#include "xcl/text_io.hpp"
#include "xcl/training.hpp"

namespace xcl {

namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mixing coefficient must lie in [0, 1]");
}

// Uniform row, or a row drawn from the cumulative weight table when one is given.
std::size_t pick_row(const Dataset& data, const std::vector<double>& cumulative, Rng& rng) {
  if (cumulative.empty()) return rng.index(data.size());
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::ranges::upper_bound(cumulative, u);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

void check_weights(const Dataset& data, const std::vector<double>& weights) {
  if (!weights.empty() && weights.size() != data.size()) {
    throw ShapeError("sampling weights do not match dataset size");
  }
}

}  // namespace

std::vector<double> mix_pair(std::span<const double> a, std::span<const double> b, double lambda) {
  check_lambda(lambda);
  if (a.size() != b.size()) throw ShapeError("mix_pair: input dimensions differ");
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = lambda * a[k] + (1.0 - lambda) * b[k];
  return out;
}

MixBatch sample_mix_batch(const Dataset& data, std::size_t n, Rng& rng, std::span<const double> weights) {
  if (data.size() == 0) throw DataError("cannot mix samples of an empty dataset");
  if (n == 0) throw ConfigError("mix batch size must be positive");
  if (!weights.empty() && weights.size() != data.size()) throw ShapeError("sampling weights do not match dataset");
  std::vector<double> cumulative;
  if (!weights.empty()) {
    cumulative.resize(weights.size());
    std::inclusive_scan(weights.begin(), weights.end(), cumulative.begin());
    if (!(cumulative.back() > 0.0)) throw ConfigError("sampling weights sum to zero");
  }
  MixBatch batch{Matrix(n, data.dim()), {}, {}, {}};
  batch.first.reserve(n);
  batch.second.reserve(n);
  batch.lambda.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = pick_row(data, cumulative, rng);
    const std::size_t j = pick_row(data, cumulative, rng);
    const double lambda = rng.uniform();
    const auto x = mix_pair(data.features().row(i), data.features().row(j), lambda);
    std::ranges::copy(x, batch.inputs.row(r).begin());
    batch.first.push_back(i);
    batch.second.push_back(j);
    batch.lambda.push_back(lambda);
  }
  return batch;
}

CutBox cutmix_box(GridShape grid, double lambda, Rng& rng) {
  check_lambda(lambda);
  if (grid.height == 0 || grid.width == 0) throw ConfigError("cutmix grid must be non-empty");
  const double side = std::sqrt(1.0 - lambda);
  CutBox box;
  box.height = std::min(grid.height, static_cast<std::size_t>(std::llround(side * static_cast<double>(grid.height))));
  box.width = std::min(grid.width, static_cast<std::size_t>(std::llround(side * static_cast<double>(grid.width))));
  box.row = rng.index(grid.height - box.height + 1);
  box.col = rng.index(grid.width - box.width + 1);
  return box;
}

std::vector<double> apply_cutmix(std::span<const double> a, std::span<const double> b, const CutBox& box,
                                 GridShape grid) {
  if (a.size() != b.size()) throw ShapeError("cutmix: input dimensions differ");
  if (a.size() != grid.height * grid.width) {
    throw ConfigError("cutmix: feature dimension " + std::to_string(a.size()) + " is not a " +
                      std::to_string(grid.height) + "x" + std::to_string(grid.width) + " grid");
  }
  std::vector<double> out(a.begin(), a.end());
  for (std::size_t r = box.row; r < box.row + box.height; ++r) {
    for (std::size_t c = box.col; c < box.col + box.width; ++c) out[r * grid.width + c] = b[r * grid.width + c];
  }
  return out;
}

std::vector<double> cutmix_pair(std::span<const double> a, std::span<const double> b, double lambda,
                                GridShape grid, Rng& rng) {
  if (a.size() != grid.height * grid.width) {
    throw ConfigError("cutmix: feature dimension is not grid-compatible");
  }
  return apply_cutmix(a, b, cutmix_box(grid, lambda, rng), grid);
}

std::vector<double> noise_augment(std::span<const double> x, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  std::vector<double> out(x.begin(), x.end());
  if (sigma == 0.0) return out;
  for (auto& v : out) v += sigma * rng.normal();
  return out;
}

std::vector<double> gaussian_image(std::size_t dim, Rng& rng) {
  if (dim == 0) throw ConfigError("gaussian image needs dim >= 1");
  std::vector<double> out(dim);
  for (auto& v : out) v = rng.normal();
  return out;
}

ToyGenerator::ToyGenerator(Matrix class_means, Matrix class_scales)
    : means_(std::move(class_means)), scales_(std::move(class_scales)) {
  if (means_.rows() < 2) throw ConfigError("conditional generator needs at least 2 classes");
  if (scales_.rows() != means_.rows() || scales_.cols() != means_.cols()) {
    throw ShapeError("generator means and scales differ in shape");
  }
  for (double s : scales_.values()) {
    if (!(s > 0.0)) throw ConfigError("generator scales must be strictly positive");
  }
}

std::vector<double> ToyGenerator::generate(std::span<const double> z, std::span<const double> e) const {
  if (z.size() != latent_dim()) throw ShapeError("latent vector has the wrong dimension");
  if (e.size() != num_classes()) throw ShapeError("class vector has the wrong dimension");
  double sum = 0.0;
  for (double w : e) {
    if (!(w >= 0.0)) throw DataError("class vector has a negative component");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError("class vector does not sum to 1");
  std::vector<double> mean(output_dim(), 0.0);
  std::vector<double> scale(output_dim(), 0.0);
  for (std::size_t k = 0; k < num_classes(); ++k) {
    if (e[k] == 0.0) continue;
    for (std::size_t f = 0; f < output_dim(); ++f) {
      mean[f] += e[k] * means_(k, f);
      scale[f] += e[k] * scales_(k, f);
    }
  }
  for (std::size_t f = 0; f < output_dim(); ++f) mean[f] += z[f] * scale[f];
  return mean;
}

ToyGenerator fit_toy_generator(const Dataset& data) {
  if (!data.is_classification()) throw ConfigError("toy generator needs class labels");
  const std::size_t c = data.num_classes();
  const std::size_t d = data.dim();
  Matrix means(c, d);
  Matrix scales(c, d);
  for (std::size_t k = 0; k < c; ++k) {
    const auto idx = data.indices_of_class(k);
    if (idx.size() < 2) throw DataError("class " + std::to_string(k) + " has fewer than 2 samples");
    const double n = static_cast<double>(idx.size());
    for (std::size_t f = 0; f < d; ++f) {
      double sum = 0.0;
      for (auto i : idx) sum += data.features()(i, f);
      const double mean = sum / n;
      double sq = 0.0;
      for (auto i : idx) {
        const double diff = data.features()(i, f) - mean;
        sq += diff * diff;
      }
      means(k, f) = mean;
      scales(k, f) = std::max(std::sqrt(sq / (n - 1.0)), kGeneratorScaleFloor);
    }
  }
  return ToyGenerator(std::move(means), std::move(scales));
}

GeneratorDraw sample_generator_mix(const ConditionalGenerator& gen, Rng& rng, bool mix_classes) {
  const std::size_t c = gen.num_classes();
  GeneratorDraw draw;
  draw.first_class = rng.index(c);
  draw.second_class = rng.index(c);
  draw.lambda = mix_classes ? rng.uniform() : 1.0;
  draw.class_vector.assign(c, 0.0);
  draw.class_vector[draw.first_class] += draw.lambda;
  draw.class_vector[draw.second_class] += 1.0 - draw.lambda;
  std::vector<double> z(gen.latent_dim());
  for (auto& v : z) v = rng.normal();
  draw.x = gen.generate(z, draw.class_vector);
  return draw;
}

EmpiricalSampler::EmpiricalSampler(Dataset data, bool with_replacement, std::vector<double> weights)
    : data_(std::move(data)), with_replacement_(with_replacement || !weights.empty()), weights_(std::move(weights)) {
  check_weights(data_, weights_);
}

SampledBatch EmpiricalSampler::sample(std::size_t n, Rng& rng) const {
  std::vector<std::size_t> rows;
  rows.reserve(n);
  if (!weights_.empty()) {
    rows = weighted_draw(weights_, n, rng);
  } else if (with_replacement_) {
    for (std::size_t r = 0; r < n; ++r) rows.push_back(rng.index(data_.size()));
  } else {
    while (rows.size() < n) {
      const auto order = permutation(data_.size(), rng);
      const std::size_t take = std::min(order.size(), n - rows.size());
      rows.insert(rows.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    }
  }
  SampledBatch batch{data_.features().gather_rows(rows), {}};
  batch.origin.assign(rows.begin(), rows.end());
  return batch;
}

std::string EmpiricalSampler::describe() const {
  if (!weights_.empty()) return "empirical(weighted)";
  return with_replacement_ ? "empirical(replacement)" : "empirical";
}

MixSampler::MixSampler(Dataset data, std::vector<double> weights) : data_(std::move(data)), weights_(std::move(weights)) {
  check_weights(data_, weights_);
}

SampledBatch MixSampler::sample(std::size_t n, Rng& rng) const {
  auto mixed = sample_mix_batch(data_, n, rng, weights_);
  return {std::move(mixed.inputs), std::vector<std::ptrdiff_t>(n, -1)};
}

CutMixSampler::CutMixSampler(Dataset data, GridShape grid) : data_(std::move(data)), grid_(grid) {
  if (grid_.height * grid_.width != data_.dim()) {
    throw ConfigError("cutmix grid " + std::to_string(grid_.height) + "x" + std::to_string(grid_.width) +
                      " does not match feature dimension " + std::to_string(data_.dim()));
  }
}

SampledBatch CutMixSampler::sample(std::size_t n, Rng& rng) const {
  SampledBatch batch{Matrix(n, data_.dim()), std::vector<std::ptrdiff_t>(n, -1)};
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = rng.index(data_.size());
    const std::size_t j = rng.index(data_.size());
    const double lambda = rng.uniform();
    const auto x = cutmix_pair(data_.features().row(i), data_.features().row(j), lambda, grid_, rng);
    std::ranges::copy(x, batch.inputs.row(r).begin());
  }
  return batch;
}

std::string CutMixSampler::describe() const {
  return "cutmix(" + std::to_string(grid_.height) + "x" + std::to_string(grid_.width) + ")";
}

NoiseSampler::NoiseSampler(Dataset data, double sigma) : data_(std::move(data)), sigma_(sigma) {
  if (!(sigma_ >= 0.0)) throw ConfigError("noise sigma must be non-negative");
}

SampledBatch NoiseSampler::sample(std::size_t n, Rng& rng) const {
  SampledBatch batch{Matrix(n, data_.dim()), std::vector<std::ptrdiff_t>(n, -1)};
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = rng.index(data_.size());
    const auto x = noise_augment(data_.features().row(i), sigma_, rng);
    std::ranges::copy(x, batch.inputs.row(r).begin());
  }
  return batch;
}

std::string NoiseSampler::describe() const { return "noise(sigma=" + text::format_double(sigma_) + ")"; }

GaussianImageSampler::GaussianImageSampler(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw ConfigError("gaussian image needs dim >= 1");
}

SampledBatch GaussianImageSampler::sample(std::size_t n, Rng& rng) const {
  SampledBatch batch{Matrix(n, dim_), std::vector<std::ptrdiff_t>(n, -1)};
  for (auto& v : batch.inputs.values()) v = rng.normal();
  return batch;
}

GeneratorSampler::GeneratorSampler(std::shared_ptr<const ConditionalGenerator> gen, bool mix_classes)
    : gen_(std::move(gen)), mix_classes_(mix_classes) {
  if (!gen_) throw ConfigError("generator sampler needs a generator");
}

SampledBatch GeneratorSampler::sample(std::size_t n, Rng& rng) const {
  SampledBatch batch{Matrix(n, gen_->output_dim()), std::vector<std::ptrdiff_t>(n, -1)};
  for (std::size_t r = 0; r < n; ++r) {
    const auto draw = sample_generator_mix(*gen_, rng, mix_classes_);
    std::ranges::copy(draw.x, batch.inputs.row(r).begin());
  }
  return batch;
}

std::string GeneratorSampler::describe() const { return mix_classes_ ? "generator-mix" : "generator"; }

SampledBatch union_sample(std::span<const WeightedSampler> components, std::size_t n, Rng& rng) {
  if (components.empty()) throw ConfigError("union sampler needs at least one component");
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& [sampler, w] : components) {
    if (!sampler) throw ConfigError("union component is null");
    if (!(w >= 0.0)) throw ConfigError("union weights must be non-negative");
    weights.push_back(w);
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("union weights must sum to 1");
  const std::size_t dim = components.front().first->dim();
  for (const auto& comp : components) {
    if (comp.first->dim() != dim) throw ShapeError("union components differ in dimension");
  }

  Rng assign_rng = rng.substream("union-assign");
  const auto assignment = weighted_draw(weights, n, assign_rng);
  std::vector<std::size_t> counts(components.size(), 0);
  for (auto k : assignment) ++counts[k];

  std::vector<SampledBatch> parts(components.size());
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (counts[k] > 0) parts[k] = components[k].first->sample(counts[k], rng);
  }
  SampledBatch out{Matrix(n, dim), std::vector<std::ptrdiff_t>(n, -1)};
  std::vector<std::size_t> cursor(components.size(), 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t k = assignment[r];
    const std::size_t src = cursor[k]++;
    std::ranges::copy(parts[k].inputs.row(src), out.inputs.row(r).begin());
    out.origin[r] = parts[k].origin[src];
  }
  return out;
}

UnionSampler::UnionSampler(std::vector<WeightedSampler> components) : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("union sampler needs at least one component");
}

std::string UnionSampler::describe() const {
  std::string out = "union(";
  for (std::size_t k = 0; k < components_.size(); ++k) {
    if (k) out += ";";
    out += components_[k].first->describe() + ":" + text::format_double(components_[k].second);
  }
  return out + ")";
}

std::vector<double> importance_weights(const Dataset& data) {
  if (!data.is_classification()) throw DataError("importance weights need class labels for every sample");
  const auto counts = data.class_counts();
  std::vector<double> w(data.size());
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    w[i] = 1.0 / static_cast<double>(counts[data.labels()[i]]);
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

}  // namespace xcl
