#pragma once

// Subsampling schedules: from a convergence rate, from the phi catalog, and
// the tame construction. Also scale functions estimated from return-time
// moments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subdrift/chain.hpp"
#include "subdrift/engine.hpp"
#include "subdrift/kernels.hpp"
#include "subdrift/rates.hpp"
#include "subdrift/scale.hpp"

namespace subdrift {

enum class PlanSource { rate, catalog, tame, manual };

const char* to_string(PlanSource s);

struct Provenance {
  PlanSource source = PlanSource::manual;
  std::string detail;
  /// Free constants chosen while planning (C, c', c_beta, delta, ...).
  std::map<std::string, double> constants;
};

/// (n, W, beta, beta', b, C). The skeleton drift the plan asserts is
/// P^{n(x)} W <= beta' W + b 1_C; beta < beta' is the pre-subsampling
/// constant that fixed n.
template <class S>
struct SubsamplePlan {
  NFn<S> n;
  ScaleFunction<S> W;
  double beta = 0.0;
  double beta_prime = 0.0;
  std::optional<double> b;
  StateSet<S> C;
  Provenance provenance;

  double drift_beta() const { return beta_prime; }
};

/// n(x) = max(1, r^{-1}((C/beta) V(x)/W(x))), C = {W <= b/(beta' - beta)}.
/// A generalized inverse of 0 is rounded up to 1 since schedules count at
/// least one step.
template <class S>
SubsamplePlan<S> plan_from_rate(const RateSeq& r, const ScaleFunction<S>& v,
                                const ScaleFunction<S>& w, double c_const, double beta,
                                double beta_prime, double b) {
  if (!(beta > 0.0 && beta < beta_prime && beta_prime < 1.0)) {
    throw contract_error("plan_from_rate: need 0 < beta < beta' < 1");
  }
  if (!(c_const > 0.0)) throw contract_error("plan_from_rate: C must be positive");
  if (!(b >= 0.0) || !std::isfinite(b)) throw contract_error("plan_from_rate: b must be finite and >= 0");
  const double log_scale = std::log(c_const / beta);
  SubsamplePlan<S> p;
  p.n = [r, v, w, log_scale](const S& x) -> std::int64_t {
    const double lv = v.log(x);
    const double lw = w.log(x);
    if (lv < -1e-12 || lw < -1e-12) {
      throw contract_error("plan_from_rate: V and W must be >= 1 (state " + describe(x) + ")");
    }
    // Same 1e-12 slack as ceil_count: log-space rounding must not push an
    // exact tie r(k) = t past k.
    return std::max<std::int64_t>(1, gen_inverse(r, std::exp(log_scale + lv - lw) * (1.0 - 1e-12)));
  };
  p.W = w;
  p.beta = beta;
  p.beta_prime = beta_prime;
  p.b = b;
  const double level = b / (beta_prime - beta);
  const double log_level = std::log(level);
  p.C = {[w, log_level](const S& x) { return w.log(x) <= log_level; },
         "{W <= " + describe(level) + "}"};
  p.provenance.source = PlanSource::rate;
  p.provenance.detail = "r=" + r.label() + ", V=" + v.label() + ", W=" + w.label();
  p.provenance.constants = {{"C", c_const}, {"b", b}, {"C_level", level}};
  return p;
}

/// Plan taken directly from the phi catalog; the drift constants are the
/// caller's (typically found by verify_subsampled).
template <class S>
SubsamplePlan<S> plan_from_catalog(PhiFamily family, double alpha, const ScaleFunction<S>& v,
                                   double c_prime, double beta, double beta_prime,
                                   std::optional<double> b, StateSet<S> c) {
  if (!(beta > 0.0 && beta < beta_prime && beta_prime < 1.0)) {
    throw contract_error("plan_from_catalog: need 0 < beta < beta' < 1");
  }
  auto pair = catalog_pair_from_phi(family, alpha, v, c_prime);
  SubsamplePlan<S> p;
  p.n = std::move(pair.n);
  p.W = std::move(pair.W);
  p.beta = beta;
  p.beta_prime = beta_prime;
  p.b = b;
  p.C = std::move(c);
  p.provenance.source = PlanSource::catalog;
  p.provenance.detail = std::string("phi family ") + to_string(family) + ", V=" + v.label();
  p.provenance.constants = {{"alpha", alpha}, {"c_prime", c_prime}};
  return p;
}

// ---------------------------------------------------------------------------
// Tameness

struct TameWitness {
  std::string state;
  std::int64_t n = 0;
  /// delta ln W(x) - ln n(x); >= 0 iff n(x) <= W(x)^delta.
  double margin = 0.0;
};

struct TameVerdict {
  bool is_tame = false;
  double delta = 0.0;
  double beta = 0.0;
  std::vector<TameWitness> witnesses;
  std::size_t violations = 0;
  /// delta^{-1} ln(1 - delta) - ln beta; > 0 iff the second condition holds.
  double condition2_margin = 0.0;
};

/// Largest beta allowed by the second tameness condition: (1 - delta)^{1/delta}.
inline double tame_beta_bound(double delta) { return std::pow(1.0 - delta, 1.0 / delta); }

template <class S>
TameVerdict classify_tame(const SubsamplePlan<S>& plan, double delta, std::span<const S> grid) {
  if (!(delta > 0.0 && delta < 1.0)) throw contract_error("classify_tame: delta must lie in (0,1)");
  TameVerdict v;
  v.delta = delta;
  v.beta = plan.drift_beta();
  v.condition2_margin = std::log1p(-delta) / delta - std::log(v.beta);
  for (const auto& x : grid) {
    TameWitness t;
    t.state = describe(x);
    t.n = detail::checked_count(plan.n, x);
    const double lw = plan.W.log(x);
    t.margin = delta * lw - std::log(static_cast<double>(t.n));
    if (t.margin < -1e-12 * std::max(1.0, std::abs(lw))) ++v.violations;
    v.witnesses.push_back(std::move(t));
  }
  v.is_tame = v.violations == 0 && v.condition2_margin > 0.0;
  return v;
}

struct TameConstruction {
  double alpha = 0.0;
  double delta = 0.0;
  double beta = 0.0;  // drift constant, half the tameness bound
  double c_beta = 0.0;
  double c_level = 0.0;  // C = {V <= c_level}
};

/// Constants for the polynomial phi(t) = c t^{1-alpha}, alpha in (0, 1/2):
/// delta is the midpoint of (alpha/(1-alpha), 1), beta half of
/// (1-delta)^{1/delta}, c_beta = c_scale/beta.
TameConstruction tame_constants(double alpha, double c_scale = 1.0);

/// n(x) = ceil(c_beta V^alpha(x)) capped at floor(W^delta(x)) (and at least
/// 1), W = V^{1-alpha}. The cap binds only inside C = {V <= (c_beta +
/// 1)^{1/(delta(1-alpha) - alpha)}}, where the drift carries the constant b.
template <class S>
std::pair<SubsamplePlan<S>, TameVerdict> construct_tame_from_phi(double alpha,
                                                                 const ScaleFunction<S>& v,
                                                                 std::span<const S> grid,
                                                                 double c_scale = 1.0) {
  const auto k = tame_constants(alpha, c_scale);
  SubsamplePlan<S> p;
  const double log_c = std::log(k.c_beta);
  const double cap_exp = k.delta * (1.0 - alpha);
  p.n = [v, log_c, alpha, cap_exp](const S& x) -> std::int64_t {
    const double lv = v.log(x);
    const std::int64_t want = ceil_count(std::exp(log_c + alpha * lv));
    const double cap_log = cap_exp * lv;
    if (cap_log > std::log(9.0e18)) return want;
    const auto cap = static_cast<std::int64_t>(std::floor(std::exp(cap_log) * (1.0 + 1e-12)));
    return std::max<std::int64_t>(1, std::min(want, cap));
  };
  p.W = v.pow(1.0 - alpha);
  p.beta = k.beta / 2.0;
  p.beta_prime = k.beta;
  const double log_level = std::log(k.c_level);
  p.C = {[v, log_level](const S& x) { return v.log(x) <= log_level; },
         "{V <= " + describe(k.c_level) + "}"};
  p.provenance.source = PlanSource::tame;
  p.provenance.detail = "poly phi, exponent 1-alpha, V=" + v.label();
  p.provenance.constants = {{"alpha", alpha},   {"delta", k.delta},     {"beta", k.beta},
                            {"c_beta", k.c_beta}, {"c_scale", c_scale}, {"C_level", k.c_level}};
  auto verdict = classify_tame(p, k.delta, grid);
  return {std::move(p), std::move(verdict)};
}

// ---------------------------------------------------------------------------
// Scale functions from return-time moments:
//   V(x) = E_x[sum_{k=0}^{sigma_C} r(k)],  W(x) = E_x[r(sigma_C)]

struct ScaleRow {
  std::string state;
  double coordinate = 0.0;
  Estimate V;
  Estimate W;
  double censored_fraction = 0.0;
  bool unreliable = false;
};

struct ScaleTable {
  std::vector<ScaleRow> rows;  // sorted by coordinate
  double max_censored_fraction = 0.0;
  /// Empirical sup over the C sample of E_x[sum_{k=1}^{tau_C} r(k)].
  Estimate sup_return_sum;
  std::string sup_return_state;
  std::string interpolation = "piecewise linear in ln V against the state coordinate";

  /// Interpolated value; throws contract_error outside the grid.
  double V_at(double coord) const { return interpolate(coord, true); }
  double W_at(double coord) const { return interpolate(coord, false); }

  template <class S>
  ScaleFunction<S> V_function() const {
    auto self = *this;
    return ScaleFunction<S>::from_log(
        [self](const S& x) { return std::log(self.V_at(coordinate(x))); }, "V-hat");
  }
  template <class S>
  ScaleFunction<S> W_function() const {
    auto self = *this;
    return ScaleFunction<S>::from_log(
        [self](const S& x) { return std::log(self.W_at(coordinate(x))); }, "W-hat");
  }

 private:
  double interpolate(double coord, bool v) const;
};

struct ScaleOptions {
  std::uint64_t replicates = 10'000;
  std::uint64_t cap = 1'000'000;
  std::uint64_t master_seed = 0;
  int workers = 0;
  double unreliable_censoring = 0.01;
};

namespace detail {

struct HitSums {
  double sum = 0.0;   // sum_{k=0}^{sigma} r(k)
  double last = 0.0;  // r(sigma)
  bool censored = false;
};

template <MarkovKernel K, class Pred>
HitSums hitting_sums(const K& kernel, typename K::state_type x, const Pred& c, const RateSeq& r,
                     std::uint64_t cap, RngStream& rng, std::int64_t first_index) {
  HitSums h;
  std::int64_t k = first_index;
  if (first_index == 0 && c(x)) {
    h.sum = h.last = r(0);
    return h;
  }
  if (first_index == 0) h.sum += r(0);
  for (std::uint64_t n = 1; n <= cap; ++n) {
    x = checked_step(kernel, x, rng);
    k = static_cast<std::int64_t>(n);
    h.sum += r(k);
    if (c(x)) {
      h.last = r(k);
      return h;
    }
  }
  h.censored = true;
  return h;
}

inline Estimate summarize_uncensored(const std::vector<HitSums>& draws, bool use_sum) {
  Moments m;
  std::uint64_t censored = 0;
  for (const auto& d : draws) {
    if (d.censored) {
      ++censored;
    } else {
      m.push(use_sum ? d.sum : d.last);
    }
  }
  auto e = m.to_estimate();
  e.replicates += censored;
  e.censored_count = censored;
  return e;
}

}  // namespace detail

template <MarkovKernel K>
ScaleTable scales_from_return_moments(const K& kernel,
                                      const StateSet<typename K::state_type>& c,
                                      const RateSeq& r,
                                      std::span<const typename K::state_type> grid,
                                      std::span<const typename K::state_type> c_sample,
                                      const ScaleOptions& opt) {
  if (grid.empty()) throw contract_error("scales_from_return_moments: empty grid");
  if (opt.replicates < 2) throw contract_error("scales_from_return_moments: replicates must be >= 2");
  ScaleTable t;
  std::uint64_t tag = 0;
  for (const auto& x : grid) {
    const auto draws = generate_replicates(
        opt.replicates, derive_seed(opt.master_seed, tag++),
        [&](RngStream& rng, std::size_t) {
          return detail::hitting_sums(kernel, x, c, r, opt.cap, rng, 0);
        },
        opt.workers);
    ScaleRow row;
    row.state = describe(x);
    row.coordinate = coordinate(x);
    row.V = detail::summarize_uncensored(draws, true);
    row.W = detail::summarize_uncensored(draws, false);
    row.censored_fraction =
        static_cast<double>(row.V.censored_count) / static_cast<double>(opt.replicates);
    row.unreliable = row.censored_fraction > opt.unreliable_censoring;
    t.max_censored_fraction = std::max(t.max_censored_fraction, row.censored_fraction);
    t.rows.push_back(std::move(row));
  }
  std::stable_sort(t.rows.begin(), t.rows.end(),
                   [](const auto& a, const auto& b) { return a.coordinate < b.coordinate; });
  // Return sums from C, starting the rate index at 1.
  for (const auto& x : c_sample) {
    if (!c(x)) throw contract_error("scales_from_return_moments: C sample state " + describe(x) + " is not in C");
    const auto draws = generate_replicates(
        opt.replicates, derive_seed(opt.master_seed, tag++),
        [&](RngStream& rng, std::size_t) {
          return detail::hitting_sums(kernel, x, c, r, opt.cap, rng, 1);
        },
        opt.workers);
    const auto e = detail::summarize_uncensored(draws, true);
    if (t.sup_return_state.empty() || e.mean > t.sup_return_sum.mean) {
      t.sup_return_sum = e;
      t.sup_return_state = describe(x);
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Exact counterparts on finite kernels.

/// E_x[sum_{k=0}^{sigma_C} f(X_k)] for every state: f on C, and the solution
/// of (I - Q) F = f on the complement, Q the kernel restricted to it.
Eigen::VectorXd hitting_additive_functional(const FiniteKernel& kernel,
                                            const std::vector<bool>& in_c,
                                            const Eigen::VectorXd& f);

/// E_x[sum_{k=1}^{tau_C} f(X_k)] for every state, by propagating the mass
/// that has not yet returned until it falls below `tail`.
Eigen::VectorXd return_additive_functional(const FiniteKernel& kernel,
                                           const std::vector<bool>& in_c,
                                           const Eigen::VectorXd& f, double tail = 1e-15,
                                           std::int64_t max_steps = 10'000'000);

struct ExactScales {
  Eigen::VectorXd V;
  Eigen::VectorXd W;
};

/// V(x) = E_x[sum_{k=0}^{sigma_C} r(k)], W(x) = E_x[r(sigma_C)] by
/// survival propagation.
ExactScales exact_return_scales(const FiniteKernel& kernel, const std::vector<bool>& in_c,
                                const RateSeq& r, double tail = 1e-15,
                                std::int64_t max_steps = 10'000'000);

}  // namespace subdrift
