#include <cmath>

#include <benchmark/benchmark.h>

#include "subdrift/domproc.hpp"
#include "subdrift/engine.hpp"

using namespace subdrift;

namespace {

DomParams bench_params() {
  DomParams p;
  p.beta = 0.1;
  p.kappa = 1.0;
  p.n_star = NStar::power(0.2);
  return p;
}

// Z^alpha after 16 steps of D from (1000, n*(1000)).
double sixteen_steps(RngStream& rng) {
  static const DomParams p = bench_params();
  DomState s{1000.0, p.n_star(1000.0)};
  for (int i = 0; i < 16; ++i) s = step_D(s, p, rng);
  return std::pow(s.z, 0.3);
}

void BM_mc_expectation_serial(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mc_expectation_serial(sixteen_steps, n, 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void BM_mc_expectation_parallel(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  const int workers = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(mc_expectation(sixteen_steps, n, 1, workers));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void BM_generate_replicates_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_replicates_serial(n, 1, [](RngStream& r, std::size_t) { return sixteen_steps(r); }));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void BM_generate_replicates_parallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int workers = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        generate_replicates(n, 1, [](RngStream& r, std::size_t) { return sixteen_steps(r); }, workers));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

}  // namespace

BENCHMARK(BM_mc_expectation_serial)->Arg(1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_expectation_parallel)->Args({1 << 16, 1})->Args({1 << 16, 0})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_generate_replicates_serial)->Arg(1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_generate_replicates_parallel)->Args({1 << 16, 1})->Args({1 << 16, 0})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
