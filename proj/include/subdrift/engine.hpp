#pragma once

// Replicate engine. Replicate i always draws from RngStream(seed, i), and
// every reduction runs over fixed-size blocks merged in index order, so the
// results are bit-identical for any worker count. The *_serial variants are
// straight loops kept as the reference the parallel kernels are tested
// against.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "subdrift/errors.hpp"
#include "subdrift/estimate.hpp"
#include "subdrift/rng.hpp"

namespace subdrift {

/// Number of replicates reduced together before merging; part of the
/// numerical contract (changing it changes the last bits of every mean).
inline constexpr std::size_t kReductionBlock = 4096;

inline int resolve_workers(int workers) {
#ifdef _OPENMP
  return workers > 0 ? workers : omp_get_max_threads();
#else
  (void)workers;
  return 1;
#endif
}

/// out[i] = fn(RngStream(seed, i), i), evaluated in parallel.
template <class Fn>
auto generate_replicates(std::size_t count, std::uint64_t seed, Fn&& fn, int workers = 0)
    -> std::vector<std::invoke_result_t<Fn&, RngStream&, std::size_t>> {
  using Result = std::invoke_result_t<Fn&, RngStream&, std::size_t>;
  std::vector<Result> out(count);
  const auto n = static_cast<std::int64_t>(count);
  [[maybe_unused]] const int threads = resolve_workers(workers);
#pragma omp parallel for schedule(dynamic, 64) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] = fn(rng, static_cast<std::size_t>(i));
  }
  return out;
}

template <class Fn>
auto generate_replicates_serial(std::size_t count, std::uint64_t seed, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, RngStream&, std::size_t>> {
  std::vector<std::invoke_result_t<Fn&, RngStream&, std::size_t>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng(seed, i);
    out.push_back(fn(rng, i));
  }
  return out;
}

/// Mean and standard error of sampler(rng) over `replicates` i.i.d. draws.
template <class Sampler>
Estimate mc_expectation(Sampler&& sampler, std::uint64_t replicates, std::uint64_t master_seed,
                        int workers = 0) {
  if (replicates < 2) throw contract_error("mc_expectation: replicates must be >= 2");
  const std::size_t blocks = (replicates + kReductionBlock - 1) / kReductionBlock;
  std::vector<Moments> partial(blocks);
  const auto nblocks = static_cast<std::int64_t>(blocks);
  [[maybe_unused]] const int threads = resolve_workers(workers);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t b = 0; b < nblocks; ++b) {
    const std::uint64_t begin = static_cast<std::uint64_t>(b) * kReductionBlock;
    const std::uint64_t end = std::min<std::uint64_t>(begin + kReductionBlock, replicates);
    Moments m;
    for (std::uint64_t i = begin; i < end; ++i) {
      RngStream rng(master_seed, i);
      m.push(static_cast<double>(sampler(rng)));
    }
    partial[static_cast<std::size_t>(b)] = m;
  }
  Moments total;
  for (const auto& m : partial) total.merge(m);
  return total.to_estimate();
}

/// Reference implementation: one pass to collect, two-pass variance.
template <class Sampler>
Estimate mc_expectation_serial(Sampler&& sampler, std::uint64_t replicates,
                               std::uint64_t master_seed) {
  if (replicates < 2) throw contract_error("mc_expectation: replicates must be >= 2");
  std::vector<double> draws;
  draws.reserve(replicates);
  std::uint64_t non_finite = 0;
  for (std::uint64_t i = 0; i < replicates; ++i) {
    RngStream rng(master_seed, i);
    const double v = sampler(rng);
    if (std::isfinite(v)) {
      draws.push_back(v);
    } else {
      ++non_finite;
    }
  }
  Estimate e;
  e.replicates = replicates;
  e.non_finite_count = non_finite;
  if (draws.empty()) {
    e.mean = std::nan("");
    return e;
  }
  double sum = 0.0;
  for (double v : draws) sum += v;
  e.mean = sum / static_cast<double>(draws.size());
  if (draws.size() >= 2) {
    double ss = 0.0;
    for (double v : draws) ss += (v - e.mean) * (v - e.mean);
    const double n = static_cast<double>(draws.size());
    e.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

}  // namespace subdrift
