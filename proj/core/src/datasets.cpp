#include "xcl/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "xcl/errors.hpp"
#include "xcl/text_io.hpp"
#include "xcl/training.hpp"

namespace xcl {

namespace {

void check_finite(const Matrix& m, const char* what) {
  for (double v : m.values()) {
    if (!std::isfinite(v)) throw DataError(std::string(what) + " contain a non-finite value");
  }
}

}  // namespace

Dataset Dataset::classification(Matrix features, std::vector<std::size_t> labels, std::size_t classes) {
  if (features.rows() == 0) throw DataError("dataset has no samples");
  if (labels.size() != features.rows()) throw ShapeError("label count does not match sample count");
  if (classes == 0) throw ConfigError("classification dataset needs at least one class");
  for (auto y : labels) {
    if (y >= classes) throw DataError("class index " + std::to_string(y) + " out of range");
  }
  check_finite(features, "features");
  Dataset d;
  d.kind_ = LabelKind::kClasses;
  d.features_ = std::move(features);
  d.labels_ = std::move(labels);
  d.classes_ = classes;
  return d;
}

Dataset Dataset::regression(Matrix features, Matrix targets) {
  if (features.rows() == 0) throw DataError("dataset has no samples");
  if (targets.rows() != features.rows()) throw ShapeError("target count does not match sample count");
  if (targets.cols() == 0) throw ShapeError("regression targets need at least one dimension");
  check_finite(features, "features");
  check_finite(targets, "targets");
  Dataset d;
  d.kind_ = LabelKind::kRegression;
  d.features_ = std::move(features);
  d.targets_ = std::move(targets);
  return d;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(classes_, 0);
  for (auto y : labels_) ++counts[y];
  return counts;
}

Matrix Dataset::one_hot() const {
  Matrix m(size(), classes_);
  for (std::size_t i = 0; i < labels_.size(); ++i) m(i, labels_[i]) = 1.0;
  return m;
}

std::vector<std::size_t> Dataset::indices_of_class(std::size_t k) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == k) idx.push_back(i);
  }
  return idx;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  if (kind_ == LabelKind::kClasses) {
    std::vector<std::size_t> labels;
    labels.reserve(indices.size());
    for (auto i : indices) labels.push_back(labels_.at(i));
    return classification(features_.gather_rows(indices), std::move(labels), classes_);
  }
  return regression(features_.gather_rows(indices), targets_.gather_rows(indices));
}

Dataset make_blobs(const BlobsParams& p, Rng& rng) {
  if (p.classes < 2) throw ConfigError("blobs need at least 2 classes");
  if (p.dim < 1 || p.per_class < 1) throw ConfigError("blobs need dim >= 1 and per_class >= 1");
  if (!(p.spread >= 0.0) || !(p.center_scale >= 0.0)) throw ConfigError("blob spread and scale must be >= 0");
  Matrix centers(p.classes, p.dim);
  for (auto& v : centers.values()) v = rng.uniform(-p.center_scale, p.center_scale);
  const std::size_t n = p.classes * p.per_class;
  Matrix features(n, p.dim);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % p.classes;
    labels[i] = k;
    for (std::size_t f = 0; f < p.dim; ++f) features(i, f) = centers(k, f) + p.spread * rng.normal();
  }
  return Dataset::classification(std::move(features), std::move(labels), p.classes);
}

std::vector<double> regression_mean(std::span<const double> x, NoiseProfile noise) {
  const double x1 = x[0];
  const double x2 = x.size() > 1 ? x[1] : 0.0;
  switch (noise) {
    case NoiseProfile::kLinear:
      return {x1 + x2, x1 - x2};
    case NoiseProfile::kSinusoidal: {
      const double s = std::sin(std::numbers::pi * x1);
      return {s, s * x2};
    }
  }
  return {};
}

double regression_noise_sigma(std::span<const double> x, NoiseProfile noise) {
  switch (noise) {
    case NoiseProfile::kLinear:
      return 0.05 + 0.3 * std::abs(x[0]);
    case NoiseProfile::kSinusoidal:
      return 0.05 + 0.3 * std::cos(0.5 * std::numbers::pi * x[0]);
  }
  return 0.0;
}

Dataset make_heteroscedastic_regression(const RegressionParams& p, Rng& rng) {
  if (p.n < 1 || p.input_dim < 1) throw ConfigError("regression data needs n >= 1 and input_dim >= 1");
  Matrix features(p.n, p.input_dim);
  Matrix targets(p.n, 2);
  for (std::size_t i = 0; i < p.n; ++i) {
    auto x = features.row(i);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const auto mean = regression_mean(x, p.noise);
    const double sigma = regression_noise_sigma(x, p.noise);
    for (std::size_t k = 0; k < 2; ++k) targets(i, k) = mean[k] + sigma * rng.normal();
  }
  return Dataset::regression(std::move(features), std::move(targets));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const Dataset& data,
                                                                            double fraction,
                                                                            bool class_balanced, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  std::vector<char> in_a(data.size(), 0);
  auto take = [&](const std::vector<std::size_t>& pool) {
    auto order = permutation(pool.size(), rng);
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
    for (std::size_t i = 0; i < count; ++i) in_a[pool[order[i]]] = 1;
  };
  if (class_balanced) {
    if (!data.is_classification()) throw ConfigError("class-balanced split needs class labels");
    for (std::size_t k = 0; k < data.num_classes(); ++k) {
      const auto pool = data.indices_of_class(k);
      if (pool.empty()) continue;
      if (pool.size() < 2) {
        throw DataError("class " + std::to_string(k) + " has a single sample; cannot split it");
      }
      take(pool);
    }
  } else {
    std::vector<std::size_t> pool(data.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    take(pool);
  }
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> parts;
  for (std::size_t i = 0; i < data.size(); ++i) (in_a[i] ? parts.first : parts.second).push_back(i);
  if (parts.first.empty() || parts.second.empty()) throw DataError("split leaves one side empty");
  return parts;
}

std::pair<Dataset, Dataset> split_disjoint(const Dataset& data, double fraction, bool class_balanced,
                                           Rng& rng) {
  const auto [a, b] = split_indices(data, fraction, class_balanced, rng);
  return {data.subset(a), data.subset(b)};
}

Dataset subsample_imbalanced(const Dataset& data, std::size_t reduced_classes, double keep_fraction,
                             Rng& rng) {
  if (!data.is_classification()) throw ConfigError("imbalanced subsampling needs class labels");
  if (reduced_classes > data.num_classes()) throw ConfigError("more reduced classes than classes");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw ConfigError("keep fraction must lie in (0, 1]");
  const auto class_order = permutation(data.num_classes(), rng);
  std::vector<char> keep(data.size(), 1);
  for (std::size_t r = 0; r < reduced_classes; ++r) {
    const auto pool = data.indices_of_class(class_order[r]);
    const auto kept = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(pool.size())));
    const auto order = permutation(pool.size(), rng);
    for (std::size_t i = kept; i < pool.size(); ++i) keep[pool[order[i]]] = 0;
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (keep[i]) idx.push_back(i);
  }
  return data.subset(idx);
}

namespace {

constexpr std::string_view kDatasetMagic = "xcl-dataset v1";

}  // namespace

void save_dataset(std::ostream& out, const Dataset& data) {
  out << kDatasetMagic << '\n'
      << "rows=" << data.size() << '\n'
      << "features=" << data.dim() << '\n'
      << "labels=" << (data.is_classification() ? "classes" : "regression") << '\n'
      << "width=" << (data.is_classification() ? data.num_classes() : data.target_dim()) << '\n';
  std::vector<double> row;
  for (std::size_t i = 0; i < data.size(); ++i) {
    row.assign(data.features().row(i).begin(), data.features().row(i).end());
    if (data.is_classification()) {
      row.push_back(static_cast<double>(data.labels()[i]));
    } else {
      row.insert(row.end(), data.targets().row(i).begin(), data.targets().row(i).end());
    }
    text::write_row(out, row);
  }
}

Dataset load_dataset(std::istream& in) {
  text::LineReader reader(in);
  if (reader.next("dataset header") != kDatasetMagic) {
    throw ParseError("not an xcl dataset file", reader.line_number());
  }
  const long long rows = reader.parse_int(reader.expect_key("rows"));
  const long long features = reader.parse_int(reader.expect_key("features"));
  const std::string kind = reader.expect_key("labels");
  const long long width = reader.parse_int(reader.expect_key("width"));
  if (rows < 1 || features < 1 || width < 1) throw ParseError("header sizes must be positive", reader.line_number());
  if (kind != "classes" && kind != "regression") throw ParseError("unknown label kind '" + kind + "'", reader.line_number());
  const bool classes = kind == "classes";
  const auto d = static_cast<std::size_t>(features);
  const std::size_t label_width = classes ? 1 : static_cast<std::size_t>(width);
  Matrix x(static_cast<std::size_t>(rows), d);
  Matrix targets(classes ? 0 : static_cast<std::size_t>(rows), label_width);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < static_cast<std::size_t>(rows); ++i) {
    const auto values = reader.parse_row(reader.next("data row"), d + label_width);
    std::copy(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(d), x.row(i).begin());
    if (classes) {
      const double y = values.back();
      if (y != std::floor(y) || y < 0.0 || y >= static_cast<double>(width)) {
        throw ParseError("invalid class index", reader.line_number());
      }
      labels.push_back(static_cast<std::size_t>(y));
    } else {
      std::copy(values.begin() + static_cast<std::ptrdiff_t>(d), values.end(), targets.row(i).begin());
    }
  }
  std::string extra;
  while (reader.next_if_any(extra)) {
    if (!text::trim(extra).empty()) throw ParseError("unexpected data after last row", reader.line_number());
  }
  try {
    return classes ? Dataset::classification(std::move(x), std::move(labels), static_cast<std::size_t>(width))
                   : Dataset::regression(std::move(x), std::move(targets));
  } catch (const std::exception& e) {
    throw ParseError(e.what(), reader.line_number());
  }
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_dataset(out, data);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("dataset file '" + path + "' not found");
  return load_dataset(in);
}

std::string to_string(NoiseProfile noise) {
  return noise == NoiseProfile::kLinear ? "linear" : "sinusoidal";
}

NoiseProfile parse_noise_profile(const std::string& text) {
  if (text == "linear") return NoiseProfile::kLinear;
  if (text == "sinusoidal") return NoiseProfile::kSinusoidal;
  throw ConfigError("unknown noise profile '" + text + "'");
}

}  // namespace xcl
