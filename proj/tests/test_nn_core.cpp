#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gradient_check.hpp"
#include "reference.hpp"
#include "xcl/analysis.hpp"
#include "xcl/datasets.hpp"
#include "xcl/errors.hpp"
#include "xcl/network.hpp"
#include "xcl/training.hpp"

using namespace xcl;

namespace {

Network random_net(std::uint64_t seed, Activation act = Activation::kReLU) {
  Rng rng(seed);
  return init_network(NetworkSpec{{3, 5, 4, 3}, act, HeadKind::kLogits}, rng);
}

Network single_linear(Matrix w, std::vector<double> b) {
  NetworkSpec spec{{w.cols(), w.rows()}, Activation::kReLU, HeadKind::kLogits};
  LayerParams layers(1);
  layers[0].weight = std::move(w);
  layers[0].bias = std::move(b);
  return Network(spec, std::move(layers));
}

}  // namespace

TEST_SUITE("closed_form") {

TEST_CASE("init_network is bit-identical for the same seed") {
  const NetworkSpec spec{{2, 4, 3}, Activation::kReLU, HeadKind::kLogits};
  Rng a(7), b(7);
  CHECK(init_network(spec, a) == init_network(spec, b));
}

TEST_CASE("hidden width 0 is a configuration error") {
  Rng rng(1);
  CHECK_THROWS_AS(init_network(NetworkSpec{{2, 0, 3}, Activation::kReLU, HeadKind::kLogits}, rng), ConfigError);
}

TEST_CASE("gaussian head with d=2 has three outputs") {
  Rng rng(1);
  const Network net = init_network(NetworkSpec{{2, 4, 2}, Activation::kReLU, HeadKind::kGaussian}, rng);
  CHECK(net.layers().back().weight.rows() == 3);
  CHECK(net.output_dim() == 3);
  CHECK(forward(net, Matrix(5, 2, 0.3)).cols() == 3);
}

TEST_CASE("all-zero parameters give all-zero output") {
  Network net = random_net(3);
  for (auto& layer : net.mutable_layers()) {
    for (double& w : layer.weight.values()) w = 0.0;
    for (double& b : layer.bias) b = 0.0;
  }
  const Matrix out = forward(net, Matrix::from_rows({{1.0, -2.0, 3.0}, {0.5, 0.5, 9.0}}));
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("identity linear layer returns its input") {
  const Network net = single_linear(Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), {0, 0, 0});
  const Matrix x = Matrix::from_rows({{1.5, -2.0, 0.25}});
  CHECK(forward(net, x) == x);
}

TEST_CASE("a batch of two equals two single-row forwards") {
  const Network net = random_net(11);
  const Matrix batch = Matrix::from_rows({{0.1, -0.4, 0.9}, {-1.2, 0.3, 0.0}});
  const Matrix out = forward(net, batch);
  for (std::size_t r = 0; r < 2; ++r) {
    const Matrix one = forward(net, Matrix(1, 3, std::vector<double>(batch.row(r).begin(), batch.row(r).end())));
    for (std::size_t j = 0; j < 3; ++j) CHECK(out(r, j) == one(0, j));
  }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  const Network net = random_net(5);
  const Matrix x = Matrix::from_rows({{0.1, 0.2, 0.3}});
  for (double g : flatten(backward(net, x, Matrix(1, 3)))) CHECK(g == 0.0);
}

TEST_CASE("single linear layer: weight gradient is g^T x") {
  const Network net = single_linear(Matrix::from_rows({{0.3, -0.1}, {0.2, 0.5}, {1.0, 0.0}}), {0.1, 0.0, -0.2});
  const Matrix x = Matrix::from_rows({{2.0, -3.0}, {0.5, 1.0}});
  const Matrix g = Matrix::from_rows({{1.0, 0.0, -1.0}, {0.5, 2.0, 0.0}});
  const LayerParams grads = backward(net, x, g);
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t i = 0; i < 2; ++i) {
      const double expect = g(0, o) * x(0, i) + g(1, o) * x(1, i);
      CHECK(grads[0].weight(o, i) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(grads[0].bias[o] == doctest::Approx(g(0, o) + g(1, o)).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  for (const auto& base : check::all_gradient_cases()) {
    for (Activation act : {Activation::kTanh, Activation::kReLU}) {
      check::GradientCase gc = base;
      gc.activation = act;
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CAPTURE(check::case_name(gc));
        CAPTURE(seed);
        CHECK(check::max_gradient_error(gc, seed) < 1e-4);
      }
    }
  }
}

TEST_CASE("zero epochs leave parameters untouched") {
  const Network net = random_net(9);
  TrainingData data{Matrix::from_rows({{1, 2, 3}}), Matrix::from_rows({{1, 0, 0}}), {}, {}};
  OptimizerState opt;
  Rng rng(1);
  const TrainResult r = train(net, data, LossSpec{}, opt, TrainOptions{0, 4}, rng);
  CHECK(r.net == net);
  CHECK(r.epoch_losses.empty());
}

TEST_CASE("one SGD step without momentum or decay is param - lr * grad") {
  Network net = random_net(21);
  const Network before = net;
  const Matrix x = Matrix::from_rows({{0.2, -0.7, 1.1}, {0.9, 0.1, -0.3}});
  const Matrix t = Matrix::from_rows({{1, 0, 0}, {0, 0, 1}});
  BatchEvaluation eval = evaluate_batch(net, x, t, LossSpec{});
  const auto g = flatten(eval.grads);
  OptimizerState opt;
  opt.momentum = 0.0;
  opt.weight_decay = 0.0;
  sgd_step(net, eval.grads, opt, 0.05);
  const auto p0 = flatten(before.layers());
  const auto p1 = flatten(net.layers());
  for (std::size_t i = 0; i < p0.size(); ++i) CHECK(p1[i] == p0[i] - 0.05 * g[i]);
}

TEST_CASE("separable two-class blobs reach training accuracy 1") {
  Rng rng(4);
  const Dataset data = make_blobs(BlobsParams{2, 2, 50, 0.1, 5.0}, rng);
  Rng init(5);
  Network net = init_network(NetworkSpec{{2, 8, 2}, Activation::kReLU, HeadKind::kLogits}, init);
  OptimizerState opt;
  opt.learning_rate = 0.05;
  Rng tr(6);
  const TrainResult r =
      train(net, TrainingData{data.features(), data.one_hot(), {}, {}}, LossSpec{}, opt, TrainOptions{50, 16}, tr);
  CHECK(evaluate(r.net, data).top1 == 1.0);
}

}  // TEST_SUITE

TEST_SUITE("nn_core") {

TEST_CASE("forward agrees with the reference implementation") {
  for (Activation act : {Activation::kReLU, Activation::kTanh}) {
    const Network net = random_net(31, act);
    const std::vector<double> x{0.3, -1.1, 0.7};
    const auto expect = ref::forward_row(net, x);
    const Matrix out = forward(net, Matrix(1, 3, x));
    for (std::size_t j = 0; j < 3; ++j) CHECK(out(0, j) == doctest::Approx(expect[j]).epsilon(1e-12));
  }
}

TEST_CASE("forward output does not depend on the thread count") {
  Rng rng(2);
  const Network net = init_network(NetworkSpec{{4, 16, 3}, Activation::kTanh, HeadKind::kLogits}, rng);
  Matrix x(3000, 4);
  for (double& v : x.values()) v = rng.normal();
  set_eval_threads(1);
  const Matrix one = forward(net, x);
  set_eval_threads(4);
  const Matrix four = forward(net, x);
  set_eval_threads(1);
  CHECK(one == four);
}

TEST_CASE("input width mismatch is a shape error") {
  const Network net = random_net(1);
  CHECK_THROWS_AS(forward(net, Matrix(2, 4)), ShapeError);
}

TEST_CASE("momentum accumulates velocity") {
  Network net = single_linear(Matrix::from_rows({{1.0}}), {0.0});
  OptimizerState opt;
  opt.momentum = 0.5;
  LayerParams g = zeros_like(net);
  g[0].weight(0, 0) = 1.0;
  sgd_step(net, g, opt, 0.1);
  CHECK(net.layers()[0].weight(0, 0) == doctest::Approx(0.9));
  g[0].weight(0, 0) = 1.0;
  sgd_step(net, g, opt, 0.1);
  // v = 0.5 * -0.1 - 0.1
  CHECK(net.layers()[0].weight(0, 0) == doctest::Approx(0.75));
}

TEST_CASE("weight decay adds an L2 gradient") {
  Network net = single_linear(Matrix::from_rows({{2.0}}), {0.0});
  OptimizerState opt;
  opt.momentum = 0.0;
  opt.weight_decay = 0.1;
  LayerParams g = zeros_like(net);
  sgd_step(net, g, opt, 0.5);
  CHECK(net.layers()[0].weight(0, 0) == doctest::Approx(2.0 - 0.5 * 0.1 * 2.0));
}

TEST_CASE("step decay multiplies the rate from its epoch on") {
  OptimizerState opt;
  opt.learning_rate = 0.1;
  opt.schedule.push_back({4, 0.1});
  CHECK(opt.rate_at(3) == doctest::Approx(0.1));
  CHECK(opt.rate_at(4) == doctest::Approx(0.01));
}

TEST_CASE("training is deterministic for a seed") {
  Rng data_rng(3);
  const Dataset data = make_blobs(BlobsParams{3, 4, 20, 1.0, 3.0}, data_rng);
  const auto run = [&] {
    Rng init(1);
    Network net = init_network(NetworkSpec{{4, 8, 3}, Activation::kReLU, HeadKind::kLogits}, init);
    OptimizerState opt;
    opt.learning_rate = 0.01;
    Rng tr(2);
    return train(net, TrainingData{data.features(), data.one_hot(), {}, {}}, LossSpec{}, opt, TrainOptions{5, 8}, tr);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  CHECK(a.net == b.net);
  CHECK(a.epoch_losses == b.epoch_losses);
}

TEST_CASE("non-finite loss aborts training") {
  Network net = single_linear(Matrix::from_rows({{1.0}}), {0.0});
  TrainingData data{Matrix::from_rows({{std::nan("")}}), Matrix::from_rows({{1.0}}), {}, {}};
  OptimizerState opt;
  Rng rng(1);
  CHECK_THROWS_AS(train(net, data, LossSpec{}, opt, TrainOptions{1, 1}, rng), NumericError);
}

TEST_CASE("loss and head must agree") {
  Rng rng(1);
  const Network net = init_network(NetworkSpec{{2, 3, 2}, Activation::kReLU, HeadKind::kLogits}, rng);
  TrainingData data{Matrix(1, 2), Matrix(1, 2), {}, {}};
  CHECK_THROWS_AS(check_compatible(net, LossSpec{LossKind::kGaussianNLL}, data), ConfigError);
}

TEST_CASE("model file round-trips bit for bit") {
  const Network a = random_net(8, Activation::kTanh);
  Rng rng(9);
  const Network b = init_network(NetworkSpec{{2, 3, 2}, Activation::kReLU, HeadKind::kGaussian}, rng);
  std::stringstream ss;
  const std::vector<Network> nets{a, b};
  write_networks(ss, nets);
  CHECK(read_networks(ss) == nets);
}

TEST_CASE("truncated model file names the line") {
  const Network a = random_net(8);
  std::stringstream ss;
  write_networks(ss, std::vector<Network>{a});
  std::string text = ss.str();
  text.resize(text.size() / 2);
  std::istringstream in(text);
  try {
    read_networks(in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() > 0);
    CHECK(std::string(e.what()).find("line ") == 0);
  }
}

TEST_CASE("weighted draw follows the weights") {
  Rng rng(12);
  const std::vector<double> w{0.0, 0.25, 0.75};
  const auto idx = weighted_draw(w, 20000, rng);
  std::size_t ones = 0;
  for (auto i : idx) {
    CHECK(i != 0);
    ones += i == 1;
  }
  // binomial(20000, 0.25), 3 sigma
  CHECK(std::abs(static_cast<double>(ones) - 5000.0) < 3.0 * std::sqrt(20000 * 0.25 * 0.75));
}

}  // TEST_SUITE
