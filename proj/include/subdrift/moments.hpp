#pragma once

// Modulated return-time moments E_x[R(tau_C)] and their comparison with
// W(x) + b 1_C(x).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subdrift/chain.hpp"
#include "subdrift/drift.hpp"
#include "subdrift/engine.hpp"
#include "subdrift/planner.hpp"
#include "subdrift/rates.hpp"

namespace subdrift {

struct MomentOptions {
  std::uint64_t replicates = 10'000;
  /// 0 selects default_cap(R).
  std::uint64_t cap = 0;
  std::uint64_t master_seed = 0;
  int workers = 0;
  /// Censored fraction above which an estimate is flagged.
  double flag_censoring = 0.05;
  /// Relative slack in the stabilization rule of bound_sweep.
  double stabilization_tol = 0.25;
};

/// min(1e7, sup{t : R(t) < 1e300}), so that R(cap) is representable.
std::uint64_t default_cap(const RateFn& r);

struct MomentEstimate {
  /// Mean of R(tau) over uncensored paths; censored_count set.
  Estimate truncated;
  /// (sum over uncensored R(tau) + censored * R(cap)) / replicates.
  double censor_lower_bound = 0.0;
  double censored_fraction = 0.0;
  std::uint64_t cap = 0;
  /// Mean of tau over uncensored paths.
  double mean_tau = 0.0;
  bool flagged = false;
  std::vector<std::string> warnings;
};

namespace detail {

struct TauDraw {
  std::uint64_t tau = 0;
  bool censored = false;
};

MomentEstimate summarize_moment(const std::vector<TauDraw>& draws, const RateFn& r,
                                std::uint64_t cap, double flag_censoring);

}  // namespace detail

/// E_{x0}[R(tau_A)] with tau_A the return time to `target`.
template <MarkovKernel K, class Pred>
MomentEstimate estimate_R_moment(const K& kernel, const typename K::state_type& x0,
                                 const Pred& target, const RateFn& r, const MomentOptions& opt) {
  if (opt.replicates < 2) throw contract_error("estimate_R_moment: replicates must be >= 2");
  const std::uint64_t cap = opt.cap > 0 ? opt.cap : default_cap(r);
  if (r.log_value(static_cast<double>(cap)) > std::log(1e300)) {
    throw contract_error("estimate_R_moment: R(cap) is not representable; lower the cap");
  }
  const auto draws = generate_replicates(
      opt.replicates, opt.master_seed,
      [&](RngStream& rng, std::size_t) {
        const auto rec = stopping_time(kernel, x0, target, StopKind::return_time, cap, rng);
        return detail::TauDraw{rec.value, rec.censored};
      },
      opt.workers);
  return detail::summarize_moment(draws, r, cap, opt.flag_censoring);
}

struct MomentRow {
  std::string state;
  double coordinate = 0.0;
  MomentEstimate estimate;
  double W = 0.0;
  bool in_C = false;
  /// estimate / (W + b 1_C)
  double bound_ratio = 0.0;
  double lower_bound_ratio = 0.0;
};

struct MomentReport {
  std::string experiment;
  std::string rate;
  std::string target;
  std::vector<MomentRow> rows;  // ascending in W
  double max_censored_fraction = 0.0;
  /// Max bound ratio over the inner (smaller-W) half, the estimate of the
  /// existential constant, and over the outer half.
  double inner_max_ratio = 0.0;
  double outer_max_ratio = 0.0;
  double stabilization_tol = 0.0;
  /// Least-squares slope of ln(estimate) against ln(coordinate).
  std::optional<double> loglog_slope;
  Verdict verdict = Verdict::inconclusive;
  std::vector<std::string> notes;
};

/// Slope of the least-squares line through (ln x_i, ln y_i) over the
/// points with x_i, y_i > 0; nullopt with fewer than two such points.
std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y);

/// Fills ratios, halves, slope and verdict from rows already sorted by W.
/// PASS iff no row is flagged for censoring and outer max <= inner max *
/// (1 + tol); FAIL if the outer half blows up; INCONCLUSIVE when censoring
/// forbids a claim.
void finish_report(MomentReport& rep, double tol);

namespace detail {

template <class S>
CheckReport admissibility(const RateFn& r, const SubsamplePlan<S>& plan,
                          std::span<const S> grid, const CheckOptions& check) {
  auto rep = check_case_i(r, plan.n, plan.W, grid, check);
  if (rep.pass) return rep;
  auto rep2 = check_case_ii(r, plan.n, plan.W, plan.drift_beta(), grid, check);
  if (rep2.pass) return rep2;
  throw scope_error("moment bound does not apply: (R, n, W) fails both admissibility cases (" +
                    rep.shape_detail + ", " + std::to_string(rep.violations) +
                    " case-i violations; " + rep2.shape_detail + ", " +
                    std::to_string(rep2.violations) + " case-ii violations)");
}

template <MarkovKernel K>
MomentReport sweep(const K& kernel, const SubsamplePlan<typename K::state_type>& plan,
                   const RateFn& r, const StateSet<typename K::state_type>& target,
                   std::span<const typename K::state_type> grid, const MomentOptions& opt,
                   const char* name) {
  MomentReport rep;
  rep.experiment = name;
  rep.rate = r.label();
  rep.target = target.label;
  const double b = plan.b.value_or(0.0);
  std::uint64_t tag = 0;
  for (const auto& x : grid) {
    MomentOptions o = opt;
    o.master_seed = derive_seed(opt.master_seed, tag++);
    MomentRow row;
    row.state = describe(x);
    row.coordinate = coordinate(x);
    row.estimate = estimate_R_moment(kernel, x, target, r, o);
    row.W = plan.W(x);
    row.in_C = plan.C(x);
    const double denom = row.W + (row.in_C ? b : 0.0);
    row.bound_ratio = row.estimate.truncated.mean / denom;
    row.lower_bound_ratio = row.estimate.censor_lower_bound / denom;
    rep.rows.push_back(std::move(row));
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const auto& a, const auto& b2) { return a.W < b2.W; });
  finish_report(rep, opt.stabilization_tol);
  return rep;
}

}  // namespace detail

/// Bound ratios E_x[R(tau_C)]/(W(x) + b 1_C(x)) across the grid. Refuses
/// (scope_error) unless (R, n, W, beta') passes an admissibility case.
template <MarkovKernel K>
MomentReport bound_sweep(const K& kernel, const SubsamplePlan<typename K::state_type>& plan,
                         const RateFn& r, std::span<const typename K::state_type> grid,
                         const MomentOptions& opt, const CheckOptions& check = {}) {
  const auto adm = detail::admissibility(r, plan, grid, check);
  auto rep = detail::sweep(kernel, plan, r, plan.C, grid, opt, "bound-sweep");
  rep.notes.push_back("admissibility " + adm.condition + ": " + adm.shape_detail);
  return rep;
}

/// As bound_sweep with the return time to an accessible set D in place of
/// C. Only subgeometric R are in scope.
template <MarkovKernel K>
MomentReport accessible_set_experiment(const K& kernel,
                                       const SubsamplePlan<typename K::state_type>& plan,
                                       const RateFn& r,
                                       const StateSet<typename K::state_type>& d,
                                       std::span<const typename K::state_type> grid,
                                       const MomentOptions& opt, const CheckOptions& check = {}) {
  if (!r.is_subgeometric()) {
    throw scope_error("accessible-set bound needs a subgeometric rate, got " + r.label());
  }
  const auto adm = detail::admissibility(r, plan, grid, check);
  auto rep = detail::sweep(kernel, plan, r, d, grid, opt, "accessible-set");
  rep.notes.push_back("admissibility " + adm.condition + ": " + adm.shape_detail);
  return rep;
}

// ---------------------------------------------------------------------------
// Pathwise form of the case (i) argument:
//   R(tau_C) <= R(tau^{bar-tau_C}) <= sum_{k < bar-tau_C} W(X_{tau^k}).

struct PathwiseReport {
  std::uint64_t paths = 0;
  std::uint64_t censored = 0;
  std::uint64_t violations = 0;
  /// Smallest value of 1 - lhs/rhs seen, for the record.
  double min_relative_slack = 1.0;
  std::vector<std::string> first_violations;
};

template <MarkovKernel K>
PathwiseReport pathwise_subadditivity(const K& kernel,
                                      const SubsamplePlan<typename K::state_type>& plan,
                                      const RateFn& r,
                                      std::span<const typename K::state_type> starts,
                                      std::uint64_t paths_per_start, std::uint64_t cap,
                                      std::uint64_t master_seed, int workers = 0) {
  struct Draw {
    bool censored = false;
    double lhs_raw = 0.0;   // ln R(tau_C)
    double lhs_skel = 0.0;  // ln R(tau^{bar-tau})
    double rhs = 0.0;       // sum W along the skeleton
  };
  PathwiseReport rep;
  std::uint64_t tag = 0;
  for (const auto& x : starts) {
    const auto draws = generate_replicates(
        paths_per_start, derive_seed(master_seed, tag++),
        [&](RngStream& rng, std::size_t) {
          Draw d;
          const auto ret = subsampled_return_time(kernel, x, plan.n, plan.C, cap, rng,
                                                  [&](const auto& y) { d.rhs += plan.W(y); });
          d.censored = ret.censored();
          if (!d.censored) {
            d.lhs_raw = r.log_value(static_cast<double>(*ret.raw_return));
            d.lhs_skel = r.log_value(static_cast<double>(ret.steps));
          }
          return d;
        },
        workers);
    for (std::size_t i = 0; i < draws.size(); ++i) {
      const auto& d = draws[i];
      ++rep.paths;
      if (d.censored) {
        ++rep.censored;
        continue;
      }
      const double log_rhs = std::log(d.rhs);
      const bool ok = d.lhs_raw <= d.lhs_skel + 1e-12 && d.lhs_skel <= log_rhs + 1e-12;
      rep.min_relative_slack = std::min(rep.min_relative_slack, -std::expm1(d.lhs_skel - log_rhs));
      if (!ok) {
        ++rep.violations;
        if (rep.first_violations.size() < 10) {
          rep.first_violations.push_back("start " + describe(x) + " path " + std::to_string(i));
        }
      }
    }
  }
  return rep;
}

}  // namespace subdrift
