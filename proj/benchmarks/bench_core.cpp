#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "markovcp/chains.hpp"
#include "markovcp/conformal.hpp"
#include "markovcp/harness.hpp"
#include "markovcp/rng.hpp"
#include "markovcp/theory.hpp"

namespace {

void BM_SimulateLazyWalk(benchmark::State& state) {
  const auto kernel = markovcp::chains::lazy_walk_kernel(20);
  const auto start = markovcp::chains::Distribution::uniform(20);
  const auto length = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(markovcp::chains::simulate_finite(kernel, start, length, seed++));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateLazyWalk)->Arg(1000)->Arg(100000);

void BM_MixingTime(benchmark::State& state) {
  const auto kernel = markovcp::chains::lazy_walk_kernel(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(markovcp::chains::mixing_time(kernel));
  }
}
BENCHMARK(BM_MixingTime)->Arg(8)->Arg(20);

void BM_SpectralGap(benchmark::State& state) {
  const auto kernel = markovcp::chains::lazy_walk_kernel(state.range(0));
  const auto pi = markovcp::chains::stationary_distribution(kernel);
  for (auto _ : state) {
    benchmark::DoNotOptimize(markovcp::chains::spectral_gap_exact(kernel, pi));
  }
}
BENCHMARK(BM_SpectralGap)->Arg(20)->Arg(50);

void BM_EmpiricalQuantile(benchmark::State& state) {
  markovcp::SplitMix64 rng(1);
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  for (auto& s : scores) s = rng.uniform01();
  for (auto _ : state) {
    benchmark::DoNotOptimize(markovcp::conformal::empirical_quantile(scores, 0.1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmpiricalQuantile)->Arg(1000)->Arg(100000);

void BM_RollingCp(benchmark::State& state) {
  markovcp::SplitMix64 rng(2);
  std::vector<double> scores(20000);
  for (auto& s : scores) s = rng.uniform01();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        markovcp::conformal::rolling_cp(scores, 1000, state.range(0), 0.1, 4));
  }
}
BENCHMARK(BM_RollingCp)->Arg(500)->Arg(2000);

void BM_LambertW0(benchmark::State& state) {
  double x = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(markovcp::theory::lambert_w0(x));
    x = x < 1e9 ? x * 1.37 : 1e-6;
  }
}
BENCHMARK(BM_LambertW0);

void BM_CoverageTrialBatch(benchmark::State& state) {
  markovcp::harness::ExperimentConfig config;
  config.chain = markovcp::harness::LazyWalkChain{20, 0.5, 1.0};
  config.train_size = 1000;
  config.calib_size = 1000;
  config.trials = 10;
  config.k_policy = markovcp::harness::KStarPolicy{};
  for (auto _ : state) {
    config.master_seed++;
    benchmark::DoNotOptimize(markovcp::harness::run_coverage_experiment(config, 1));
  }
}
BENCHMARK(BM_CoverageTrialBatch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
