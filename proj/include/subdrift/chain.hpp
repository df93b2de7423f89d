#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <optional>
#include <ranges>
#include <string>
#include <utility>
#include <vector>

#include "subdrift/errors.hpp"
#include "subdrift/rng.hpp"
#include "subdrift/scale.hpp"

namespace subdrift {

/// One-step transition law. Kernels are immutable values: sample() is const
/// and may be called from many workers at once.
template <class K>
concept MarkovKernel = requires(const K& k, const typename K::state_type& x, RngStream& rng) {
  typename K::state_type;
  { k.sample(x, rng) } -> std::same_as<typename K::state_type>;
  { k.contains(x) } -> std::convertible_to<bool>;
};

template <class S>
struct Transition {
  S to;
  double prob;
};

/// Kernel whose one-step law has finite support, so that P^n f(x) can be
/// computed exactly by propagating the distribution.
template <class K>
concept FiniteSupportKernel =
    MarkovKernel<K> && requires(const K& k, const typename K::state_type& x) {
      { k.transitions(x) } -> std::ranges::range;
    };

template <class S>
struct Trajectory {
  std::vector<S> states;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::int64_t length() const { return static_cast<std::int64_t>(states.size()) - 1; }
};

enum class StopKind { return_time, hitting_time, subsampled_return };

inline const char* to_string(StopKind k) {
  switch (k) {
    case StopKind::return_time: return "return";
    case StopKind::hitting_time: return "hitting";
    case StopKind::subsampled_return: return "subsampled-return";
  }
  return "?";
}

/// Observed stopping time, or CENSORED(cap) when the horizon ran out first.
struct StoppingRecord {
  StopKind kind = StopKind::return_time;
  std::uint64_t value = 0;
  bool censored = false;
  std::uint64_t cap = 0;

  static StoppingRecord observed(StopKind kind, std::uint64_t v, std::uint64_t cap) {
    return {kind, v, false, cap};
  }
  static StoppingRecord censored_at(StopKind kind, std::uint64_t cap) {
    return {kind, cap, true, cap};
  }
};

template <MarkovKernel K>
typename K::state_type checked_step(const K& kernel, const typename K::state_type& x,
                                    RngStream& rng) {
  auto y = kernel.sample(x, rng);
  if (!kernel.contains(y)) {
    throw state_space_error("sampler left the state space: " + describe(x) + " -> " +
                            describe(y));
  }
  return y;
}

template <MarkovKernel K>
Trajectory<typename K::state_type> simulate_path(const K& kernel,
                                                 const typename K::state_type& x0,
                                                 std::int64_t horizon, RngStream& rng) {
  if (horizon < 0) throw contract_error("simulate_path: horizon must be >= 0");
  if (!kernel.contains(x0)) throw contract_error("simulate_path: x0 outside state space");
  Trajectory<typename K::state_type> t;
  t.seed = rng.seed();
  t.stream = rng.stream_id();
  t.states.reserve(static_cast<std::size_t>(horizon) + 1);
  t.states.push_back(x0);
  for (std::int64_t n = 0; n < horizon; ++n) t.states.push_back(checked_step(kernel, t.states.back(), rng));
  return t;
}

/// tau_A = inf{n >= 1 : X_n in A} (return) or sigma_A = inf{n >= 0 : X_n in A}
/// (hitting), censored at `cap` transitions.
template <MarkovKernel K, class Pred>
StoppingRecord stopping_time(const K& kernel, typename K::state_type x, const Pred& target,
                             StopKind kind, std::uint64_t cap, RngStream& rng) {
  if (cap < 1) throw contract_error("stopping_time: cap must be >= 1");
  if (kind == StopKind::subsampled_return) {
    throw contract_error("stopping_time: use subsampled_return_time for subsampled returns");
  }
  if (kind == StopKind::hitting_time && target(x)) return StoppingRecord::observed(kind, 0, cap);
  for (std::uint64_t n = 1; n <= cap; ++n) {
    x = checked_step(kernel, x, rng);
    if (target(x)) return StoppingRecord::observed(kind, n, cap);
  }
  return StoppingRecord::censored_at(kind, cap);
}

template <class S>
struct SubsampledPoint {
  std::uint64_t time;
  S state;
};

namespace detail {
template <class S>
std::int64_t checked_count(const NFn<S>& n_fn, const S& x) {
  const std::int64_t n = n_fn(x);
  if (n < 1) {
    throw contract_error("subsampling schedule returned " + std::to_string(n) + " at state " +
                         describe(x));
  }
  return n;
}
}  // namespace detail

/// Skeleton (tau^k, X_{tau^k}) for k = 0..k_max with tau^0 = 0 and
/// tau^{k+1} = tau^k + n(X_{tau^k}).
template <MarkovKernel K>
std::vector<SubsampledPoint<typename K::state_type>> subsampled_iterates(
    const K& kernel, typename K::state_type x, const NFn<typename K::state_type>& n_fn,
    std::int64_t k_max, RngStream& rng) {
  if (k_max < 1) throw contract_error("subsampled_iterates: k_max must be >= 1");
  std::vector<SubsampledPoint<typename K::state_type>> out;
  out.reserve(static_cast<std::size_t>(k_max) + 1);
  std::uint64_t t = 0;
  out.push_back({t, x});
  for (std::int64_t k = 0; k < k_max; ++k) {
    const std::int64_t n = detail::checked_count(n_fn, x);
    for (std::int64_t j = 0; j < n; ++j) x = checked_step(kernel, x, rng);
    t += static_cast<std::uint64_t>(n);
    out.push_back({t, x});
  }
  return out;
}

/// Return time of the subsampled skeleton: bar-tau_C = inf{k >= 1 : X_{tau^k} in C}.
struct SubsampledReturn {
  StoppingRecord index;  // bar-tau_C, or censored with value = skeleton steps completed
  std::uint64_t steps = 0;  // tau^{bar-tau_C} in chain transitions (cap when censored)
  std::optional<std::uint64_t> raw_return;  // tau_C of the raw path, if seen before stopping

  bool censored() const { return index.censored; }
};

/// `on_skeleton(X_{tau^k})` is called for k = 0, ..., bar-tau_C - 1. The raw
/// path is scanned too, so the plain return time tau_C <= tau^{bar-tau_C}
/// comes for free. `cap` bounds the number of chain transitions.
template <MarkovKernel K, class Pred, class Visitor>
SubsampledReturn subsampled_return_time(const K& kernel, typename K::state_type x,
                                        const NFn<typename K::state_type>& n_fn,
                                        const Pred& target, std::uint64_t cap, RngStream& rng,
                                        Visitor&& on_skeleton) {
  if (cap < 1) throw contract_error("subsampled_return_time: cap must be >= 1");
  SubsampledReturn r;
  std::uint64_t t = 0;
  for (std::uint64_t k = 1;; ++k) {
    on_skeleton(x);
    const auto n = static_cast<std::uint64_t>(detail::checked_count(n_fn, x));
    if (t + n > cap) {
      r.index = StoppingRecord::censored_at(StopKind::subsampled_return, cap);
      r.index.value = k - 1;
      r.steps = cap;
      return r;
    }
    for (std::uint64_t j = 0; j < n; ++j) {
      x = checked_step(kernel, x, rng);
      ++t;
      if (!r.raw_return && target(x)) r.raw_return = t;
    }
    if (target(x)) {
      r.index = StoppingRecord::observed(StopKind::subsampled_return, k, cap);
      r.steps = t;
      return r;
    }
  }
}

template <MarkovKernel K, class Pred>
SubsampledReturn subsampled_return_time(const K& kernel, typename K::state_type x,
                                        const NFn<typename K::state_type>& n_fn,
                                        const Pred& target, std::uint64_t cap, RngStream& rng) {
  return subsampled_return_time(kernel, std::move(x), n_fn, target, cap, rng,
                                [](const auto&) {});
}

// ---------------------------------------------------------------------------
// Exact propagation for finite-support kernels.

template <class S>
using Distribution = std::vector<Transition<S>>;  // sorted by state, merged

template <FiniteSupportKernel K>
Distribution<typename K::state_type> step_distribution(const K& kernel,
                                                       const Distribution<typename K::state_type>& d) {
  using S = typename K::state_type;
  Distribution<S> next;
  for (const auto& [x, p] : d) {
    for (const auto& t : kernel.transitions(x)) {
      if (t.prob > 0.0) next.push_back({t.to, p * t.prob});
    }
  }
  std::sort(next.begin(), next.end(), [](const auto& a, const auto& b) { return a.to < b.to; });
  Distribution<S> merged;
  for (const auto& t : next) {
    if (!merged.empty() && !(merged.back().to < t.to)) {
      merged.back().prob += t.prob;
    } else {
      merged.push_back(t);
    }
  }
  return merged;
}

/// E_x[ terminal(X_n) + sum_{j<n} running(j, X_j) ], exactly.
template <FiniteSupportKernel K, class Terminal, class Running>
double exact_path_expectation(const K& kernel, const typename K::state_type& x, std::int64_t n,
                              const Terminal& terminal, const Running& running) {
  using S = typename K::state_type;
  Distribution<S> d{{x, 1.0}};
  double acc = 0.0;
  for (std::int64_t j = 0; j < n; ++j) {
    for (const auto& [y, p] : d) acc += p * running(j, y);
    d = step_distribution(kernel, d);
  }
  for (const auto& [y, p] : d) acc += p * terminal(y);
  return acc;
}

/// P^n f(x), exactly.
template <FiniteSupportKernel K, class F>
double exact_expectation(const K& kernel, const typename K::state_type& x, std::int64_t n,
                         const F& f) {
  return exact_path_expectation(kernel, x, n, f,
                                [](std::int64_t, const typename K::state_type&) { return 0.0; });
}

}  // namespace subdrift
