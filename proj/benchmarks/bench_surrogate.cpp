#include <array>

#include <benchmark/benchmark.h>

#include "latticeopt/features.hpp"
#include "latticeopt/mlp.hpp"
#include "latticeopt/rng.hpp"

using namespace latticeopt;

namespace {

Eigen::MatrixXd random_batch(int rows, int cols) {
  Rng rng(1);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.bernoulli_half() ? 1.0 : 0.0;
  return x;
}

constexpr std::array<int, 5> kDims{340, 900, 600, 300, 1};

}  // namespace

static void BM_Features(benchmark::State& state) {
  FeaturePipeline p;
  p.m = 4;
  p.n_m = 2;
  for (int i = 0; i < 340; ++i) p.selected.push_back(i);
  Rng rng(3);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(member_count(static_cast<int>(state.range(0)))));
  for (auto& b : bits) b = rng.bernoulli_half();
  const UnitTopology x(static_cast<int>(state.range(0)), bits);
  for (auto _ : state) benchmark::DoNotOptimize(features_for_prediction(x, p));
}
BENCHMARK(BM_Features)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

static void BM_MlpForward(benchmark::State& state) {
  const Mlp net = Mlp::init(kDims, 1);
  const Eigen::MatrixXd x = random_batch(kDims[0], 1);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward({x.data(), static_cast<std::size_t>(kDims[0])}));
}
BENCHMARK(BM_MlpForward)->Unit(benchmark::kMicrosecond);

static void BM_MlpForwardBatch(benchmark::State& state) {
  const Mlp net = Mlp::init(kDims, 1);
  const Eigen::MatrixXd x = random_batch(kDims[0], static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_batch(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBatch)->Arg(200)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  Mlp net = Mlp::init(kDims, 1);
  Adam adam(net, AdamConfig{});
  const Eigen::MatrixXd x = random_batch(kDims[0], 200);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(200, 2.0);
  for (auto _ : state) adam.step(net, mse_gradients(net, x, y));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);
