#pragma once

// Verification of Foster-Lyapunov drift inequalities on a finite grid of
// states, exactly when the kernel has finite one-step support and by Monte
// Carlo otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subdrift/chain.hpp"
#include "subdrift/engine.hpp"
#include "subdrift/rates.hpp"
#include "subdrift/scale.hpp"

namespace subdrift {

enum class Verdict { pass, fail, inconclusive };
enum class EvalMode { exact, mc };

const char* to_string(Verdict v);
const char* to_string(EvalMode m);

/// Combine per-state verdicts: any FAIL fails, else any INCONCLUSIVE is
/// inconclusive.
Verdict combine(Verdict a, Verdict b);

struct McOptions {
  std::uint64_t master_seed = 0;
  std::uint64_t replicates = 10'000;
  /// Replicates are multiplied by 10 on INCONCLUSIVE states until this budget.
  std::uint64_t replicate_budget = 1'000'000;
  /// Maximum chain transitions per replicate.
  std::int64_t step_budget = 10'000'000;
  /// CI half-width multiplier.
  double z = 3.0;
  int workers = 0;
};

struct StateCheck {
  std::string state;
  std::int64_t k = 0;  // index in a nested family, 0 otherwise
  double margin = 0.0;  // rhs - lhs; >= 0 means the inequality holds
  double std_error = 0.0;
  std::uint64_t replicates = 0;
  Verdict verdict = Verdict::pass;
  std::string note;
};

struct DriftCertificate {
  std::string variant;
  EvalMode mode = EvalMode::exact;
  std::vector<StateCheck> checks;
  /// Second inequality of the double-control pair.
  std::vector<StateCheck> secondary;
  Verdict verdict = Verdict::pass;

  std::vector<std::string> failing_states() const;
  std::vector<std::string> inconclusive_states() const;
};

// ---------------------------------------------------------------------------
// Drift specifications

/// PV <= beta V + b 1_C
template <class S>
struct GeometricDrift {
  ScaleFunction<S> V;
  double beta = 0.5;
  double b = 0.0;
  StateSet<S> C;
};

/// PV <= V - phi(V) + b 1_C, phi increasing concave with inf phi > 0.
template <class S>
struct PhiDrift {
  ScaleFunction<S> V;
  std::function<double(double)> phi;
  double b = 0.0;
  StateSet<S> C;
};

/// PV <= V - W + b 1_C and PW <= W + b 1_C
template <class S>
struct DoubleControlDrift {
  ScaleFunction<S> V;
  ScaleFunction<S> W;
  double b = 0.0;
  StateSet<S> C;
};

/// E_x[W(X_{n(x)})] <= beta W(x) + b 1_C(x)
template <class S>
struct SubsampledDrift {
  ScaleFunction<S> W;
  NFn<S> n;
  double beta = 0.5;
  double b = 0.0;
  StateSet<S> C;
};

/// E_x[V_{k+n(x)}(X_{n(x)})] + E_x[sum_{j<n(x)} r(k+j) f(X_j)] <= V_k(x) + S_k(x) 1_C(x)
template <class S>
struct NestedDrift {
  std::function<double(std::int64_t, const S&)> V;
  std::function<double(std::int64_t, const S&)> S_k;
  std::function<double(std::int64_t)> r;
  std::function<double(const S&)> f;
  NFn<S> n;
  StateSet<S> C;
};

namespace detail {

/// Relative slack allowed in exact mode for rounding in rhs - lhs.
inline constexpr double kExactTol = 1e-12;

struct Expectation {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replicates = 0;
  std::string note;
  bool budget_exceeded = false;
};

template <class S>
void require_scale_at_least_one(const ScaleFunction<S>& f, const S& x, const char* name) {
  const double l = f.log(x);
  if (!(l >= -1e-12)) {
    throw contract_error(std::string("scale function ") + name + " is below 1 at state " +
                         describe(x));
  }
}

/// E_x[terminal(X_h) + sum_{j<h} running(j, X_j)] by the requested mode.
template <MarkovKernel K, class Terminal, class Running>
Expectation path_expectation(const K& kernel, const typename K::state_type& x, std::int64_t h,
                             const Terminal& terminal, const Running& running, EvalMode mode,
                             const McOptions& mc, std::uint64_t reps, std::uint64_t stream_tag) {
  using S = typename K::state_type;
  Expectation e;
  if (mode == EvalMode::exact) {
    if constexpr (FiniteSupportKernel<K>) {
      e.mean = exact_path_expectation(kernel, x, h, terminal, running);
      return e;
    } else {
      throw capability_error("exact mode requires a kernel with finite one-step support");
    }
  }
  if (h > mc.step_budget) {
    e.budget_exceeded = true;
    e.note = "n(x)=" + std::to_string(h) + " exceeds step budget";
    e.mean = NAN;
    return e;
  }
  const auto est = mc_expectation(
      [&](RngStream& rng) {
        S y = x;
        double acc = 0.0;
        for (std::int64_t j = 0; j < h; ++j) {
          acc += running(j, y);
          y = checked_step(kernel, y, rng);
        }
        return acc + terminal(y);
      },
      reps, derive_seed(mc.master_seed, stream_tag), mc.workers);
  e.mean = est.mean;
  e.std_error = est.std_error;
  e.replicates = est.replicates;
  if (est.non_finite_count > 0) {
    e.note = std::to_string(est.non_finite_count) + " non-finite draws excluded";
  }
  if (std::abs(est.mean) > 0 && est.std_error / std::abs(est.mean) > 10.0) {
    e.note += (e.note.empty() ? "" : "; ");
    e.note += "exploding variance: std_error/mean > 10";
  }
  return e;
}

inline Verdict judge(double rhs, const Expectation& e, EvalMode mode, double z, double* margin) {
  *margin = rhs - e.mean;
  if (e.budget_exceeded || std::isnan(*margin)) return Verdict::inconclusive;
  if (mode == EvalMode::exact || e.std_error == 0.0) {
    const double scale = std::max({std::abs(rhs), std::abs(e.mean), 1.0});
    return *margin >= -kExactTol * scale ? Verdict::pass : Verdict::fail;
  }
  if (*margin - z * e.std_error > 0.0) return Verdict::pass;
  if (*margin + z * e.std_error < 0.0) return Verdict::fail;
  return Verdict::inconclusive;
}

/// One grid state: evaluate, and in mc mode escalate replicates x10 while
/// the CI straddles zero and the budget allows.
template <MarkovKernel K, class Terminal, class Running>
StateCheck check_state(const K& kernel, const typename K::state_type& x, std::int64_t h,
                       double rhs, const Terminal& terminal, const Running& running,
                       EvalMode mode, const McOptions& mc, std::uint64_t stream_tag) {
  StateCheck c;
  c.state = describe(x);
  std::uint64_t reps = mc.replicates;
  for (;;) {
    const auto e = path_expectation(kernel, x, h, terminal, running, mode, mc, reps, stream_tag);
    c.verdict = judge(rhs, e, mode, mc.z, &c.margin);
    c.std_error = e.std_error;
    c.replicates = e.replicates;
    c.note = e.note;
    if (mode == EvalMode::exact || c.verdict != Verdict::inconclusive || e.budget_exceeded ||
        reps * 10 > mc.replicate_budget) {
      break;
    }
    reps *= 10;
  }
  return c;
}

template <class S>
void finish(DriftCertificate& cert) {
  cert.verdict = Verdict::pass;
  for (const auto& c : cert.checks) cert.verdict = combine(cert.verdict, c.verdict);
  for (const auto& c : cert.secondary) cert.verdict = combine(cert.verdict, c.verdict);
}

inline auto no_running() {
  return [](std::int64_t, const auto&) { return 0.0; };
}

}  // namespace detail

/// Concavity/monotonicity/positivity of phi on a log-spaced grid of
/// [1, t_max]; throws contract_error when any fails.
void require_concave_increasing_positive(const std::function<double(double)>& phi, double t_max);

template <MarkovKernel K>
DriftCertificate verify_onestep(const K& kernel, const GeometricDrift<typename K::state_type>& spec,
                                std::span<const typename K::state_type> grid, EvalMode mode,
                                const McOptions& mc = {}) {
  if (!(spec.beta > 0.0 && spec.beta < 1.0)) throw contract_error("beta must lie in (0,1)");
  if (!(spec.b >= 0.0) || !std::isfinite(spec.b)) throw contract_error("b must be finite and >= 0");
  DriftCertificate cert;
  cert.variant = "one-step-geometric";
  cert.mode = mode;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& x = grid[i];
    detail::require_scale_at_least_one(spec.V, x, "V");
    const double rhs = spec.beta * spec.V(x) + (spec.C(x) ? spec.b : 0.0);
    cert.checks.push_back(detail::check_state(
        kernel, x, 1, rhs, [&](const auto& y) { return spec.V(y); }, detail::no_running(), mode,
        mc, i));
  }
  detail::finish<typename K::state_type>(cert);
  return cert;
}

template <MarkovKernel K>
DriftCertificate verify_onestep(const K& kernel, const PhiDrift<typename K::state_type>& spec,
                                std::span<const typename K::state_type> grid, EvalMode mode,
                                const McOptions& mc = {}) {
  if (!(spec.b >= 0.0) || !std::isfinite(spec.b)) throw contract_error("b must be finite and >= 0");
  double v_max = 1.0;
  for (const auto& x : grid) v_max = std::max(v_max, spec.V(x));
  require_concave_increasing_positive(spec.phi, v_max);
  DriftCertificate cert;
  cert.variant = "phi-subgeometric";
  cert.mode = mode;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& x = grid[i];
    detail::require_scale_at_least_one(spec.V, x, "V");
    const double v = spec.V(x);
    const double rhs = v - spec.phi(v) + (spec.C(x) ? spec.b : 0.0);
    cert.checks.push_back(detail::check_state(
        kernel, x, 1, rhs, [&](const auto& y) { return spec.V(y); }, detail::no_running(), mode,
        mc, i));
  }
  detail::finish<typename K::state_type>(cert);
  return cert;
}

template <MarkovKernel K>
DriftCertificate verify_double_control(const K& kernel,
                                       const DoubleControlDrift<typename K::state_type>& spec,
                                       std::span<const typename K::state_type> grid,
                                       EvalMode mode, const McOptions& mc = {}) {
  if (!(spec.b >= 0.0) || !std::isfinite(spec.b)) throw contract_error("b must be finite and >= 0");
  DriftCertificate cert;
  cert.variant = "double-control";
  cert.mode = mode;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& x = grid[i];
    detail::require_scale_at_least_one(spec.V, x, "V");
    detail::require_scale_at_least_one(spec.W, x, "W");
    const double b = spec.C(x) ? spec.b : 0.0;
    cert.checks.push_back(detail::check_state(
        kernel, x, 1, spec.V(x) - spec.W(x) + b, [&](const auto& y) { return spec.V(y); },
        detail::no_running(), mode, mc, 2 * i));
    cert.secondary.push_back(detail::check_state(
        kernel, x, 1, spec.W(x) + b, [&](const auto& y) { return spec.W(y); },
        detail::no_running(), mode, mc, 2 * i + 1));
  }
  detail::finish<typename K::state_type>(cert);
  return cert;
}

template <MarkovKernel K>
DriftCertificate verify_subsampled(const K& kernel,
                                   const SubsampledDrift<typename K::state_type>& spec,
                                   std::span<const typename K::state_type> grid, EvalMode mode,
                                   const McOptions& mc = {}) {
  if (!(spec.beta > 0.0 && spec.beta < 1.0)) throw contract_error("beta must lie in (0,1)");
  if (!(spec.b >= 0.0) || !std::isfinite(spec.b)) throw contract_error("b must be finite and >= 0");
  DriftCertificate cert;
  cert.variant = "subsampled";
  cert.mode = mode;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& x = grid[i];
    detail::require_scale_at_least_one(spec.W, x, "W");
    const std::int64_t n = detail::checked_count(spec.n, x);
    const double rhs = spec.beta * spec.W(x) + (spec.C(x) ? spec.b : 0.0);
    cert.checks.push_back(detail::check_state(
        kernel, x, n, rhs, [&](const auto& y) { return spec.W(y); }, detail::no_running(), mode,
        mc, i));
  }
  detail::finish<typename K::state_type>(cert);
  return cert;
}

/// Subsampled drift with a caller-supplied exact expectation
/// (x, n) -> E_x[W(X_n)], for kernels whose law is continuous but whose
/// moments are known in closed form.
template <class S, class ExactFn>
DriftCertificate verify_subsampled_closed_form(const SubsampledDrift<S>& spec,
                                               std::span<const S> grid, const ExactFn& expect) {
  if (!(spec.beta > 0.0 && spec.beta < 1.0)) throw contract_error("beta must lie in (0,1)");
  DriftCertificate cert;
  cert.variant = "subsampled";
  cert.mode = EvalMode::exact;
  for (const auto& x : grid) {
    detail::require_scale_at_least_one(spec.W, x, "W");
    const std::int64_t n = detail::checked_count(spec.n, x);
    StateCheck c;
    c.state = describe(x);
    detail::Expectation e;
    e.mean = expect(x, n);
    const double rhs = spec.beta * spec.W(x) + (spec.C(x) ? spec.b : 0.0);
    c.verdict = detail::judge(rhs, e, EvalMode::exact, 0.0, &c.margin);
    cert.checks.push_back(std::move(c));
  }
  detail::finish<S>(cert);
  return cert;
}

template <MarkovKernel K>
DriftCertificate verify_nested_family(const K& kernel,
                                      const NestedDrift<typename K::state_type>& spec,
                                      std::span<const typename K::state_type> grid,
                                      std::int64_t k_first, std::int64_t k_last, EvalMode mode,
                                      const McOptions& mc = {}) {
  if (k_last < k_first || k_first < 0) throw contract_error("nested family: bad k range");
  DriftCertificate cert;
  cert.variant = "nested";
  cert.mode = mode;
  std::uint64_t tag = 0;
  for (std::int64_t k = k_first; k <= k_last; ++k) {
    for (const auto& x : grid) {
      const std::int64_t n = detail::checked_count(spec.n, x);
      const double rhs = spec.V(k, x) + (spec.C(x) ? spec.S_k(k, x) : 0.0);
      auto c = detail::check_state(
          kernel, x, n, rhs, [&](const auto& y) { return spec.V(k + n, y); },
          [&](std::int64_t j, const auto& y) { return spec.r(k + j) * spec.f(y); }, mode, mc,
          tag++);
      c.k = k;
      cert.checks.push_back(std::move(c));
    }
  }
  detail::finish<typename K::state_type>(cert);
  return cert;
}

/// Smallest level L such that the phi-drift holds with b = 0 at every grid
/// state with coordinate above L, and the b that then covers the states at
/// or below L. Exact mode only. Returns nullopt when the top grid state
/// already fails.
struct PhiCalibration {
  double level = 0.0;
  double b = 0.0;
};

template <FiniteSupportKernel K>
std::optional<PhiCalibration> calibrate_phi_drift(const K& kernel,
                                                  const ScaleFunction<typename K::state_type>& v,
                                                  const std::function<double(double)>& phi,
                                                  std::span<const typename K::state_type> grid) {
  std::vector<double> deficit(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double vx = v(grid[i]);
    const double pv = exact_expectation(kernel, grid[i], 1, [&](const auto& y) { return v(y); });
    deficit[i] = pv - (vx - phi(vx));
  }
  // grid is assumed sorted by coordinate
  std::size_t last_bad = grid.size();
  for (std::size_t i = grid.size(); i-- > 0;) {
    if (deficit[i] > 0.0) {
      last_bad = i;
      break;
    }
  }
  if (last_bad == grid.size()) return PhiCalibration{coordinate(grid.front()) - 1.0, 0.0};
  if (last_bad + 1 == grid.size()) return std::nullopt;
  PhiCalibration cal;
  cal.level = coordinate(grid[last_bad]);
  for (std::size_t i = 0; i <= last_bad; ++i) cal.b = std::max(cal.b, deficit[i]);
  // Round b up so the certificate is not decided by the last bit.
  cal.b = cal.b * (1.0 + 1e-9) + 1e-12;
  return cal;
}

}  // namespace subdrift
