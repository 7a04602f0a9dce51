#include <limits>

#include <benchmark/benchmark.h>

#include "latticeopt/dataset.hpp"
#include "latticeopt/fem.hpp"

using namespace latticeopt;

static void BM_AnalyzeGround(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const GridSpec spec = GridSpec::for_grid(m);
  const UnitTopology x = UnitTopology::ground(m);
  for (auto _ : state) benchmark::DoNotOptimize(analyze(x, spec, std::numeric_limits<double>::infinity()));
}
BENCHMARK(BM_AnalyzeGround)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_AnalyzeRandom(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const GridSpec spec = GridSpec::for_grid(m);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(analyze(sample_for_index(m, 1, k++), spec, kDefaultScreeningThreshold));
  }
}
BENCHMARK(BM_AnalyzeRandom)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_Instantiate(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const GridSpec spec = GridSpec::for_grid(m);
  const UnitTopology x = UnitTopology::ground(m);
  for (auto _ : state) benchmark::DoNotOptimize(instantiate_global(x, spec));
}
BENCHMARK(BM_Instantiate)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);
