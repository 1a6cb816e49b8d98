#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "xcl/analysis.hpp"
#include "xcl/datasets.hpp"
#include "xcl/errors.hpp"
#include "xcl/training.hpp"

using namespace xcl;

namespace {

std::multiset<std::vector<double>> rows_of(const Matrix& m) {
  std::multiset<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.emplace(m.row(r).begin(), m.row(r).end());
  return out;
}

Dataset balanced(std::size_t classes, std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  return make_blobs(BlobsParams{classes, 3, per_class, 1.0, 5.0}, rng);
}

}  // namespace

TEST_SUITE("closed_form") {

TEST_CASE("zero spread puts every sample on its class center") {
  Rng rng(1);
  const Dataset d = make_blobs(BlobsParams{3, 4, 6, 0.0, 2.0}, rng);
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t r2 = 0; r2 < d.size(); ++r2) {
      if (d.labels()[r] == d.labels()[r2]) CHECK(std::equal(d.features().row(r).begin(), d.features().row(r).end(),
                                                            d.features().row(r2).begin()));
    }
  }
}

TEST_CASE("blob class counts are equal") {
  const Dataset d = balanced(7, 13, 2);
  for (auto c : d.class_counts()) CHECK(c == 13);
}

TEST_CASE("well separated blobs are linearly separable") {
  Rng rng(3);
  const Dataset d = make_blobs(BlobsParams{5, 8, 40, 0.05, 10.0}, rng);
  Rng init(4);
  Network net = init_network(NetworkSpec{{8, 5}, Activation::kReLU, HeadKind::kLogits}, init);
  OptimizerState opt;
  opt.learning_rate = 0.01;
  Rng tr(5);
  const auto r = train(net, TrainingData{d.features(), d.one_hot(), {}, {}}, LossSpec{}, opt, TrainOptions{50, 16}, tr);
  CHECK(evaluate(r.net, d).top1 >= 0.99);
}

TEST_CASE("regression data is deterministic for a seed") {
  Rng a(6), b(6);
  const RegressionParams p{200, 2, NoiseProfile::kLinear};
  CHECK(make_heteroscedastic_regression(p, a) == make_heteroscedastic_regression(p, b));
}

TEST_CASE("linear profile noise grows with |x1|") {
  Rng rng(7);
  const Dataset d = make_heteroscedastic_regression(RegressionParams{200000, 2, NoiseProfile::kLinear}, rng);
  // residual variance per target dimension, x1 near 0 against |x1| near 1
  double lo = 0.0, hi = 0.0;
  std::size_t nlo = 0, nhi = 0;
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto x = d.features().row(r);
    const auto mu = regression_mean(x, NoiseProfile::kLinear);
    double sq = 0.0;
    for (std::size_t k = 0; k < 2; ++k) sq += (d.targets()(r, k) - mu[k]) * (d.targets()(r, k) - mu[k]);
    if (std::abs(x[0]) < 0.02) {
      lo += sq / 2.0;
      ++nlo;
    } else if (std::abs(x[0]) > 0.98) {
      hi += sq / 2.0;
      ++nhi;
    }
  }
  REQUIRE(nlo > 1000);
  REQUIRE(nhi > 1000);
  const double ratio = (lo / nlo) / (hi / nhi);
  const double expect = (0.05 / 0.35) * (0.05 / 0.35);
  CHECK(std::abs(ratio - expect) < 0.3 * expect);
}

TEST_CASE("linear profile with two inputs has two targets") {
  Rng rng(8);
  CHECK(make_heteroscedastic_regression(RegressionParams{10, 2, NoiseProfile::kLinear}, rng).target_dim() == 2);
}

TEST_CASE("balanced half split of 10 per class") {
  const Dataset d = balanced(4, 10, 9);
  Rng rng(10);
  const auto [a, b] = split_disjoint(d, 0.5, true, rng);
  for (auto c : a.class_counts()) CHECK(c == 5);
  for (auto c : b.class_counts()) CHECK(c == 5);
}

TEST_CASE("split parts are disjoint and cover the data") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Dataset d = balanced(3, 9, seed);
    Rng rng(seed);
    const auto [ia, ib] = split_indices(d, 0.3 + 0.02 * static_cast<double>(seed), seed % 2 == 0, rng);
    std::vector<std::size_t> all = ia;
    all.insert(all.end(), ib.begin(), ib.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> want(d.size());
    for (std::size_t i = 0; i < want.size(); ++i) want[i] = i;
    CHECK(all == want);
  }
}

TEST_CASE("split is deterministic for a seed") {
  const Dataset d = balanced(3, 8, 11);
  Rng a(12), b(12);
  CHECK(split_disjoint(d, 0.5, true, a) == split_disjoint(d, 0.5, true, b));
}

TEST_CASE("keep fraction 1 leaves the data unchanged") {
  const Dataset d = balanced(5, 6, 13);
  Rng rng(14);
  const Dataset s = subsample_imbalanced(d, 3, 1.0, rng);
  CHECK(rows_of(s.features()) == rows_of(d.features()));
  CHECK(s.class_counts() == d.class_counts());
}

TEST_CASE("eight of ten classes cut to 10 percent of 100") {
  const Dataset d = balanced(10, 100, 15);
  Rng rng(16);
  const auto counts = subsample_imbalanced(d, 8, 0.1, rng).class_counts();
  CHECK(std::count(counts.begin(), counts.end(), 10u) == 8);
  CHECK(std::count(counts.begin(), counts.end(), 100u) == 2);
}

TEST_CASE("reduced classes depend only on the seed") {
  const Dataset d = balanced(10, 20, 17);
  Rng a(18), b(18);
  CHECK(subsample_imbalanced(d, 4, 0.1, a).class_counts() == subsample_imbalanced(d, 4, 0.1, b).class_counts());
}

TEST_CASE("dataset file round-trips bit for bit") {
  const Dataset c = balanced(3, 5, 19);
  Rng rng(20);
  const Dataset r = make_heteroscedastic_regression(RegressionParams{15, 3, NoiseProfile::kSinusoidal}, rng);
  for (const Dataset* d : {&c, &r}) {
    std::stringstream ss;
    save_dataset(ss, *d);
    CHECK(load_dataset(ss) == *d);
  }
}

TEST_CASE("truncated dataset file names the line") {
  std::stringstream ss;
  save_dataset(ss, balanced(2, 4, 21));
  std::string text = ss.str();
  text.resize(text.size() - 30);
  text = text.substr(0, text.rfind('\n') + 1);
  std::istringstream in(text);
  try {
    load_dataset(in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() > 1);
  }
}

TEST_CASE("row with the wrong width is a parse error") {
  std::stringstream ss;
  save_dataset(ss, balanced(2, 3, 22));
  std::string text = ss.str();
  const auto last = text.rfind('\n', text.size() - 2);
  text = text.substr(0, last + 1) + "1,0.5\n";
  std::istringstream in(text);
  CHECK_THROWS_AS(load_dataset(in), ParseError);
}

}  // TEST_SUITE

TEST_SUITE("datasets") {

TEST_CASE("samples are interleaved by class") {
  const Dataset d = balanced(4, 3, 23);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.labels()[i] == i % 4);
}

TEST_CASE("sinusoidal profile is noisiest at x1 = 0") {
  const std::vector<double> mid{0.0, 0.3}, edge{0.99, 0.3};
  CHECK(regression_noise_sigma(mid, NoiseProfile::kSinusoidal) >
        regression_noise_sigma(edge, NoiseProfile::kSinusoidal));
  CHECK(std::abs(regression_noise_sigma(mid, NoiseProfile::kLinear) - 0.05) < 1e-12);
}

TEST_CASE("balanced split needs two samples per class") {
  const Dataset d = Dataset::classification(Matrix(3, 1), {0, 0, 1}, 2);
  Rng rng(24);
  CHECK_THROWS_AS(split_disjoint(d, 0.5, true, rng), DataError);
}

TEST_CASE("labels out of range are rejected") {
  CHECK_THROWS(Dataset::classification(Matrix(2, 1), {0, 3}, 2));
}

TEST_CASE("missing dataset file") {
  CHECK_THROWS_AS(load_dataset(std::string("/nonexistent/xcl/data.txt")), MissingArtifactError);
}

}  // TEST_SUITE
