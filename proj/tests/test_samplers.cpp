#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>

#include "doctest.h"
#include "xcl/datasets.hpp"
#include "xcl/errors.hpp"
#include "xcl/samplers.hpp"

using namespace xcl;

namespace {

constexpr double kTol = 1e-9;

Dataset tiny_classes() {
  return Dataset::classification(Matrix::from_rows({{0, 1}, {2, 3}, {4, 5}, {6, 7}}), {0, 1, 0, 1}, 2);
}

Dataset one_dim(std::vector<double> xs, std::vector<std::size_t> labels, std::size_t classes) {
  const std::size_t n = xs.size();
  Matrix m(n, 1, std::move(xs));
  return Dataset::classification(std::move(m), std::move(labels), classes);
}

}  // namespace

TEST_SUITE("closed_form") {

TEST_CASE("mix_pair endpoints and midpoint") {
  const std::vector<double> a{1.0, -2.0, 3.0}, b{0.5, 4.0, -1.0};
  CHECK(mix_pair(a, b, 1.0) == a);
  CHECK(mix_pair(a, b, 0.0) == b);
  const auto mid = mix_pair(std::vector<double>{2, 0}, std::vector<double>{0, 2}, 0.5);
  CHECK(std::abs(mid[0] - 1.0) < kTol);
  CHECK(std::abs(mid[1] - 1.0) < kTol);
}

TEST_CASE("mix batch over a single point returns that point") {
  const Dataset one = Dataset::classification(Matrix::from_rows({{1.5, -0.5}}), {0}, 1);
  Rng rng(1);
  const MixBatch mb = sample_mix_batch(one, 20, rng);
  for (std::size_t r = 0; r < 20; ++r) {
    CHECK(std::abs(mb.inputs(r, 0) - 1.5) < kTol);
    CHECK(std::abs(mb.inputs(r, 1) + 0.5) < kTol);
  }
}

TEST_CASE("mix batch is deterministic for a seed") {
  Rng a(5), b(5);
  const MixBatch x = sample_mix_batch(tiny_classes(), 30, a);
  const MixBatch y = sample_mix_batch(tiny_classes(), 30, b);
  CHECK(x.inputs == y.inputs);
  CHECK(x.lambda == y.lambda);
  CHECK(x.first == y.first);
}

TEST_CASE("mix coefficients are uniform on [0, 1]") {
  Rng rng(7);
  const MixBatch mb = sample_mix_batch(tiny_classes(), 10000, rng);
  const double mean = std::accumulate(mb.lambda.begin(), mb.lambda.end(), 0.0) / 10000.0;
  CHECK(std::abs(mean - 0.5) < 0.02);
  CHECK(*std::min_element(mb.lambda.begin(), mb.lambda.end()) < 0.05);
  CHECK(*std::max_element(mb.lambda.begin(), mb.lambda.end()) > 0.95);
}

TEST_CASE("cutmix with lambda 1 keeps the first input, lambda 0 gives the second") {
  const GridShape grid{3, 4};
  std::vector<double> a(12), b(12);
  std::iota(a.begin(), a.end(), 0.0);
  std::iota(b.begin(), b.end(), 100.0);
  Rng rng(2);
  CHECK(cutmix_pair(a, b, 1.0, grid, rng) == a);
  CHECK(cutmix_pair(a, b, 0.0, grid, rng) == b);
}

TEST_CASE("cutmix never blends values") {
  Rng rng(3);
  const GridShape grid{5, 6};
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(30), b(30);
    for (double& v : a) v = rng.uniform(0.0, 1.0);
    for (double& v : b) v = rng.uniform(2.0, 3.0);
    const auto out = cutmix_pair(a, b, rng.uniform(), grid, rng);
    for (std::size_t k = 0; k < 30; ++k) CHECK((out[k] == a[k] || out[k] == b[k]));
  }
}

TEST_CASE("noise with sigma 0 returns the input") {
  Rng rng(4);
  const std::vector<double> x{1.0, 2.0, -3.0};
  CHECK(noise_augment(x, 0.0, rng) == x);
}

TEST_CASE("noise variance matches sigma squared") {
  Rng rng(5);
  const double sigma = 0.3;
  const std::vector<double> x{1.0, -2.0, 0.5};
  std::vector<double> sum(3, 0.0), sq(3, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto y = noise_augment(x, sigma, rng);
    for (std::size_t k = 0; k < 3; ++k) {
      sum[k] += y[k];
      sq[k] += y[k] * y[k];
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double m = sum[k] / n;
    const double var = (sq[k] - n * m * m) / (n - 1);
    CHECK(std::abs(var - sigma * sigma) < 0.1 * sigma * sigma);
  }
}

TEST_CASE("noise is deterministic for a seed") {
  Rng a(6), b(6);
  const std::vector<double> x{1.0, 2.0};
  CHECK(noise_augment(x, 0.5, a) == noise_augment(x, 0.5, b));
}

TEST_CASE("gaussian image moments") {
  Rng rng(8);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = gaussian_image(1, rng)[0];
    sum += v;
    sq += v * v;
  }
  const double m = sum / n;
  const double var = (sq - n * m * m) / (n - 1);
  CHECK(std::abs(m) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("gaussian image is deterministic and substreams differ") {
  Rng a(9), b(9);
  CHECK(gaussian_image(8, a) == gaussian_image(8, b));
  const Rng root(9);
  Rng s1 = root.substream("one"), s2 = root.substream("two");
  CHECK(gaussian_image(8, s1) != gaussian_image(8, s2));
}

TEST_CASE("toy generator on a repeated point has that mean and floor scale") {
  const Dataset d = Dataset::classification(Matrix::from_rows({{1, 2}, {1, 2}, {5, 5}, {5, 5}}), {0, 0, 1, 1}, 2);
  const ToyGenerator g = fit_toy_generator(d);
  CHECK(g.class_means()(0, 0) == 1.0);
  CHECK(g.class_means()(0, 1) == 2.0);
  CHECK(g.class_means()(1, 0) == 5.0);
  for (double s : g.class_scales().values()) CHECK(s == kGeneratorScaleFloor);
}

TEST_CASE("toy generator means by hand") {
  const Dataset d = one_dim({0, 0, 2, 2, 10, 10, 14, 14}, {0, 0, 0, 0, 1, 1, 1, 1}, 2);
  const ToyGenerator g = fit_toy_generator(d);
  CHECK(std::abs(g.class_means()(0, 0) - 1.0) < kTol);
  CHECK(std::abs(g.class_means()(1, 0) - 12.0) < kTol);
  // sample std with n - 1: sqrt(4/3) and sqrt(16/3)
  CHECK(std::abs(g.class_scales()(0, 0) - std::sqrt(4.0 / 3.0)) < kTol);
  CHECK(std::abs(g.class_scales()(1, 0) - std::sqrt(16.0 / 3.0)) < kTol);
}

TEST_CASE("toy generator fit is deterministic") {
  const Dataset d = one_dim({0, 1, 2, 3, 10, 12}, {0, 0, 1, 1, 1, 0}, 2);
  const ToyGenerator a = fit_toy_generator(d), b = fit_toy_generator(d);
  CHECK(a.class_means() == b.class_means());
  CHECK(a.class_scales() == b.class_scales());
}

TEST_CASE("generate at z = 0") {
  const ToyGenerator g(Matrix::from_rows({{0, 4}, {2, -2}}), Matrix::from_rows({{1, 1}, {3, 0.5}}));
  const std::vector<double> z{0.0, 0.0};
  const auto k1 = g.generate(z, std::vector<double>{0.0, 1.0});
  CHECK(k1 == std::vector<double>{2.0, -2.0});
  const auto mid = g.generate(z, std::vector<double>{0.5, 0.5});
  CHECK(std::abs(mid[0] - 1.0) < kTol);
  CHECK(std::abs(mid[1] - 1.0) < kTol);
}

TEST_CASE("one-hot generator output has the class scale as std") {
  const ToyGenerator g(Matrix::from_rows({{0, 4}, {2, -2}}), Matrix::from_rows({{1, 1}, {3, 0.5}}));
  Rng rng(10);
  const int n = 10000;
  std::vector<double> sum(2, 0.0), sq(2, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto x = g.generate(gaussian_image(2, rng), std::vector<double>{0.0, 1.0});
    for (std::size_t k = 0; k < 2; ++k) {
      sum[k] += x[k];
      sq[k] += x[k] * x[k];
    }
  }
  const double expect[2] = {3.0, 0.5};
  for (std::size_t k = 0; k < 2; ++k) {
    const double m = sum[k] / n;
    const double sd = std::sqrt((sq[k] - n * m * m) / (n - 1));
    CHECK(std::abs(sd - expect[k]) < 0.1 * expect[k]);
  }
}

TEST_CASE("generator mix is deterministic and on the simplex") {
  const ToyGenerator g(Matrix::from_rows({{0}, {1}, {2}}), Matrix::from_rows({{1}, {1}, {1}}));
  Rng a(11), b(11);
  for (int i = 0; i < 200; ++i) {
    const auto x = sample_generator_mix(g, a);
    const auto y = sample_generator_mix(g, b);
    CHECK(x.x == y.x);
    CHECK(x.class_vector == y.class_vector);
    double s = 0.0;
    for (double v : x.class_vector) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < kTol);
  }
}

TEST_CASE("generator class pairs are uniform") {
  const std::size_t c = 4;
  Matrix means(c, 1), scales(c, 1, 1.0);
  const ToyGenerator g(means, scales);
  Rng rng(12);
  const int n = 10000;
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  for (int i = 0; i < n; ++i) {
    const auto d = sample_generator_mix(g, rng);
    ++counts[{d.first_class, d.second_class}];
  }
  const double p = 1.0 / (c * c);
  const double sd = std::sqrt(n * p * (1 - p));
  CHECK(counts.size() == c * c);
  for (const auto& [pair, count] : counts) CHECK(std::abs(count - n * p) < 3.0 * sd);
}

TEST_CASE("union with a single full-weight component reproduces it") {
  auto mix = std::make_shared<MixSampler>(tiny_classes());
  const std::vector<WeightedSampler> parts{{mix, 1.0}};
  Rng a(13), b(13);
  const SampledBatch u = union_sample(parts, 25, a);
  const SampledBatch m = mix->sample(25, b);
  CHECK(u.inputs == m.inputs);
}

TEST_CASE("union weights (1, 0) never use the second component") {
  auto emp = std::make_shared<EmpiricalSampler>(tiny_classes(), true);
  auto gauss = std::make_shared<GaussianImageSampler>(2);
  const std::vector<WeightedSampler> parts{{emp, 1.0}, {gauss, 0.0}};
  Rng rng(14);
  const SampledBatch u = union_sample(parts, 500, rng);
  for (auto o : u.origin) CHECK(o >= 0);
}

TEST_CASE("union weights (0.5, 0.5) split draws evenly") {
  auto emp = std::make_shared<EmpiricalSampler>(tiny_classes(), true);
  auto gauss = std::make_shared<GaussianImageSampler>(2);
  const std::vector<WeightedSampler> parts{{emp, 0.5}, {gauss, 0.5}};
  Rng rng(15);
  const SampledBatch u = union_sample(parts, 10000, rng);
  const auto from_data = std::count_if(u.origin.begin(), u.origin.end(), [](auto o) { return o >= 0; });
  CHECK(std::abs(static_cast<double>(from_data) - 5000.0) < 3.0 * std::sqrt(10000 * 0.25));
}

TEST_CASE("importance weights") {
  const auto balanced = importance_weights(tiny_classes());
  for (double w : balanced) CHECK(std::abs(w - 0.25) < kTol);

  std::vector<double> xs(100, 0.0);
  std::vector<std::size_t> labels(100, 0);
  for (std::size_t i = 90; i < 100; ++i) labels[i] = 1;
  const auto w = importance_weights(one_dim(xs, labels, 2));
  CHECK(std::abs(w[0] / w[99] - 10.0 / 90.0) < kTol);
  CHECK(std::abs(std::accumulate(w.begin(), w.begin() + 90, 0.0) - 0.5) < kTol);
  CHECK(std::abs(std::accumulate(w.begin() + 90, w.end(), 0.0) - 0.5) < kTol);
  CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) < kTol);
}

}  // TEST_SUITE

TEST_SUITE("samplers") {

TEST_CASE("cutmix box area tracks 1 - lambda") {
  Rng rng(16);
  const GridShape grid{8, 8};
  for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const CutBox box = cutmix_box(grid, lambda, rng);
    const auto side = static_cast<std::size_t>(std::lround(8 * std::sqrt(1.0 - lambda)));
    CHECK(box.height == side);
    CHECK(box.width == side);
    CHECK(box.row + box.height <= 8);
    CHECK(box.col + box.width <= 8);
  }
}

TEST_CASE("cutmix grid must match the input size") {
  Rng rng(17);
  CHECK_THROWS_AS(cutmix_pair(std::vector<double>(6), std::vector<double>(6), 0.5, GridShape{2, 4}, rng), ConfigError);
}

TEST_CASE("empirical sampler without replacement is a permutation") {
  EmpiricalSampler s(tiny_classes());
  Rng rng(18);
  const SampledBatch b = s.sample(4, rng);
  std::vector<std::ptrdiff_t> o = b.origin;
  std::sort(o.begin(), o.end());
  CHECK(o == std::vector<std::ptrdiff_t>{0, 1, 2, 3});
}

TEST_CASE("synthesised rows carry origin -1") {
  MixSampler mix(tiny_classes());
  Rng rng(19);
  for (auto o : mix.sample(10, rng).origin) CHECK(o == -1);
}

TEST_CASE("weighted mix draws follow the weights") {
  const Dataset d = tiny_classes();
  Rng rng(20);
  const std::vector<double> w{1.0, 0.0, 0.0, 0.0};
  const MixBatch mb = sample_mix_batch(d, 50, rng, w);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(mb.first[i] == 0);
    CHECK(mb.second[i] == 0);
  }
}

TEST_CASE("class vector off the simplex is rejected") {
  const ToyGenerator g(Matrix::from_rows({{0}, {1}}), Matrix::from_rows({{1}, {1}}));
  CHECK_THROWS_AS(g.generate(std::vector<double>{0.0}, std::vector<double>{0.7, 0.7}), DataError);
}

}  // TEST_SUITE
