#include <benchmark/benchmark.h>

#include "xcl/datasets.hpp"
#include "xcl/losses.hpp"
#include "xcl/network.hpp"
#include "xcl/samplers.hpp"
#include "xcl/training.hpp"

using namespace xcl;

namespace {

Network make_net(std::size_t width, Activation act = Activation::kReLU) {
  Rng rng(1);
  return init_network(NetworkSpec{{16, width, width, 10}, act, HeadKind::kLogits}, rng);
}

Matrix make_batch(std::size_t rows) {
  Rng rng(2);
  Matrix x(rows, 16);
  for (double& v : x.values()) v = rng.normal();
  return x;
}

Dataset make_blob_data() {
  Rng rng(3);
  return make_blobs(BlobsParams{10, 16, 100, 1.0, 3.0}, rng);
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const Network net = make_net(static_cast<std::size_t>(state.range(0)));
  const Matrix x = make_batch(static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Forward)->Args({64, 32})->Args({64, 1024})->Args({256, 1024});

static void BM_ForwardThreads(benchmark::State& state) {
  const Network net = make_net(128);
  const Matrix x = make_batch(8192);
  set_eval_threads(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
  set_eval_threads(1);
  state.SetItemsProcessed(state.iterations() * 8192);
}
BENCHMARK(BM_ForwardThreads)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();

static void BM_BatchGradient(benchmark::State& state) {
  const Network net = make_net(64);
  const Matrix x = make_batch(32);
  Matrix t(32, 10);
  for (std::size_t r = 0; r < 32; ++r) t(r, r % 10) = 1.0;
  LossSpec spec;
  spec.kind = static_cast<LossKind>(state.range(0));
  if (spec.kind == LossKind::kKDCategorical) {
    spec.source = TargetSource::kTeacher;
    spec.temperature = 4.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch(net, x, t, spec));
}
BENCHMARK(BM_BatchGradient)
    ->Arg(static_cast<int>(LossKind::kCrossEntropySoft))
    ->Arg(static_cast<int>(LossKind::kKDCategorical));

static void BM_KDLoss(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<double> tz(c), z(c);
  for (double& v : tz) v = rng.normal();
  for (double& v : z) v = rng.normal();
  const auto teacher = CategoricalDist::from_logits(tz);
  for (auto _ : state) benchmark::DoNotOptimize(kd_categorical(teacher, z, 4.0));
}
BENCHMARK(BM_KDLoss)->Arg(10)->Arg(100)->Arg(1000);

static void BM_GaussianKL(benchmark::State& state) {
  const GaussianPred t{{0.1, -0.3}, 0.2}, s{{0.0, 0.4}, -0.5};
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_kl(t, s));
}
BENCHMARK(BM_GaussianKL);

static void BM_MixSampler(benchmark::State& state) {
  const MixSampler sampler(make_blob_data());
  Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(static_cast<std::size_t>(state.range(0)), rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MixSampler)->Arg(256)->Arg(4096);

static void BM_CutMixSampler(benchmark::State& state) {
  const CutMixSampler sampler(make_blob_data(), GridShape{4, 4});
  Rng rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(4096, rng));
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_CutMixSampler);

static void BM_GeneratorSampler(benchmark::State& state) {
  auto gen = std::make_shared<ToyGenerator>(fit_toy_generator(make_blob_data()));
  const GeneratorSampler sampler(gen, true);
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(4096, rng));
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_GeneratorSampler);

static void BM_TrainEpoch(benchmark::State& state) {
  const Dataset data = make_blob_data();
  const TrainingData td{data.features(), data.one_hot(), {}, {}};
  for (auto _ : state) {
    OptimizerState opt;
    opt.learning_rate = 0.01;
    Rng rng(8);
    benchmark::DoNotOptimize(train(make_net(64), td, LossSpec{}, opt, TrainOptions{1, 32}, rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_TrainEpoch);
BENCHMARK_MAIN();
