#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subdrift/errors.hpp"
#include "subdrift/scale.hpp"

namespace subdrift {

// ---------------------------------------------------------------------------
// Discrete rate sequences r : N -> [0, inf)

enum class SeqFamily { linear, polynomial, log_power, constant, custom };

class RateSeq {
 public:
  /// r(k) = k + offset
  static RateSeq linear(double offset = 0.0);
  /// r(k) = (k + 1)^p, p > 0
  static RateSeq polynomial(double p);
  /// r(k) = [1 + ln(1 + k)]^alpha, alpha > 0
  static RateSeq log_power(double alpha);
  /// r(k) = c. Bounded, so gen_inverse fails for t > c.
  static RateSeq constant(double c);
  /// `fn` must be non-decreasing; `divergent` declares lim r = inf.
  static RateSeq custom(std::function<double(std::int64_t)> fn, bool divergent, std::string label);

  double operator()(std::int64_t k) const { return fn_(k); }
  SeqFamily family() const { return family_; }
  bool divergent() const { return divergent_; }
  const std::string& label() const { return label_; }
  double parameter() const { return param_; }

 private:
  RateSeq(SeqFamily f, double param, bool divergent, std::function<double(std::int64_t)> fn,
          std::string label)
      : family_(f), param_(param), divergent_(divergent), fn_(std::move(fn)), label_(std::move(label)) {}

  SeqFamily family_;
  double param_;
  bool divergent_;
  std::function<double(std::int64_t)> fn_;
  std::string label_;
};

/// r^{-1}(t) = inf{k in N : r(k) >= t}; 0 for t <= 0.
std::int64_t gen_inverse(const RateSeq& r, double t);

// ---------------------------------------------------------------------------
// Continuous moment rates R : (0, inf) -> (0, inf), strictly increasing.

enum class RateFamily { geometric, subgeometric, polynomial, logarithmic };

const char* to_string(RateFamily f);

/// Parameters as they appear in configuration documents.
///   geometric:    R(t) = kappa^t                    (kappa > 1)
///   subgeometric: R(t) = exp(c t^{1/(1+alpha)})     (c > 0, alpha > 0)
///   polynomial:   R(t) = t^{(1-alpha)/alpha}        (alpha in (0, 1])
///   logarithmic:  R(t) = [ln(e + t)]^alpha          (alpha > 0)
struct RateFnParams {
  RateFamily family = RateFamily::polynomial;
  double kappa = 0.0;
  double c = 0.0;
  double alpha = 0.0;
};

class RateFn {
 public:
  static RateFn geometric(double kappa);
  static RateFn subgeometric(double c, double alpha);
  /// R(t) = t^p, p > 0 (polynomial family, stated by exponent).
  static RateFn power(double p);
  static RateFn logarithmic(double alpha);

  double operator()(double t) const { return std::exp(log_value(t)); }
  double log_value(double t) const;
  double inverse(double s) const { return inverse_log(std::log(s)); }
  /// R^{-1}(exp(log_s)); avoids forming R values that overflow.
  double inverse_log(double log_s) const;
  /// log R'(t)
  double log_derivative(double t) const;

  RateFamily family() const { return family_; }
  /// Lambda-membership metadata: ln R(t)/t -> 0. Certified per family, never
  /// inferred from samples.
  bool is_subgeometric() const { return family_ != RateFamily::geometric; }
  bool has_derivative() const { return true; }
  /// Exact shape metadata for case (ii): R convex with log-concave R'.
  /// nullopt when it only holds above a threshold.
  std::optional<bool> convex_logconcave_derivative() const;
  /// Exact metadata for case (i): R(t)/t non-increasing on (0, inf).
  std::optional<bool> sublinear() const;
  const std::string& label() const { return label_; }
  /// Exponent p for the polynomial family, kappa for geometric, etc.
  double a() const { return a_; }
  double b() const { return b_; }

 private:
  RateFn(RateFamily f, double a, double b, std::string label)
      : family_(f), a_(a), b_(b), label_(std::move(label)) {}

  RateFamily family_;
  double a_;
  double b_;
  std::string label_;
};

RateFn make_R(const RateFnParams& params);

// ---------------------------------------------------------------------------
// Admissibility of (R, n, W) for modulated return-time moments.

struct CheckOptions {
  /// Grid states with W(x) below this are reported but not judged.
  double min_W = 1.0;
  /// Log-spaced shape grid.
  int points_per_decade = 32;
  /// Relative tolerance on second differences.
  double shape_tol = 1e-8;
  /// Range of the R(t)/t monotonicity check for case (i).
  double t_min = 1.0;
  double t_max = 1e12;
};

struct CheckPoint {
  std::string state;
  double margin = 0.0;  // >= 0 means satisfied
  bool judged = true;
};

struct CheckReport {
  std::string condition;  // "case-i" or "case-ii"
  std::vector<CheckPoint> points;
  bool shape_ok = false;
  std::string shape_detail;
  std::size_t violations = 0;
  bool pass = false;
};

/// Numerical shape tests on a log-spaced grid over [t_lo, t_hi].
bool ratio_nonincreasing(const RateFn& r, double t_lo, double t_hi, const CheckOptions& opt,
                         std::string* detail = nullptr);
bool convex_logconcave_derivative(const RateFn& r, double t_lo, double t_hi,
                                  const CheckOptions& opt, std::string* detail = nullptr);

/// Case (i): t -> R(t)/t non-increasing and R(n(x)) <= W(x). Per-point
/// margin is ln W(x) - ln R(n(x)), which has the sign of W - R(n) and
/// stays finite when W overflows.
template <class S>
CheckReport check_case_i(const RateFn& r, const NFn<S>& n, const ScaleFunction<S>& w,
                         std::span<const S> grid, const CheckOptions& opt = {}) {
  if (grid.empty()) throw contract_error("check_case_i: empty grid");
  CheckReport rep;
  rep.condition = "case-i";
  for (const auto& x : grid) {
    CheckPoint p;
    p.state = describe(x);
    const double log_w = w.log(x);
    p.margin = log_w - r.log_value(static_cast<double>(n(x)));
    p.judged = log_w >= std::log(opt.min_W) - 1e-12;
    if (p.judged && p.margin < -1e-12 * std::max(1.0, std::abs(log_w))) ++rep.violations;
    rep.points.push_back(std::move(p));
  }
  rep.shape_ok = ratio_nonincreasing(r, opt.t_min, opt.t_max, opt, &rep.shape_detail);
  rep.pass = rep.shape_ok && rep.violations == 0;
  return rep;
}

/// Case (ii): R convex with log-concave R', and
/// R^{-1}(W(x)) - R^{-1}(beta W(x)) - n(x) >= 0. The shape test runs over
/// the range [R^{-1}(beta W), R^{-1}(W)] spanned by the judged points.
template <class S>
CheckReport check_case_ii(const RateFn& r, const NFn<S>& n, const ScaleFunction<S>& w,
                          double beta, std::span<const S> grid, const CheckOptions& opt = {}) {
  if (grid.empty()) throw contract_error("check_case_ii: empty grid");
  if (!(beta > 0.0 && beta < 1.0)) throw contract_error("check_case_ii: beta must lie in (0,1)");
  if (!r.has_derivative()) throw capability_error("check_case_ii: rate has no derivative");
  CheckReport rep;
  rep.condition = "case-ii";
  const double log_beta = std::log(beta);
  double t_lo = INFINITY;
  double t_hi = 0.0;
  for (const auto& x : grid) {
    CheckPoint p;
    p.state = describe(x);
    const double log_w = w.log(x);
    const double hi = r.inverse_log(log_w);
    const double lo = r.inverse_log(log_w + log_beta);
    p.margin = hi - lo - static_cast<double>(n(x));
    p.judged = log_w >= std::log(opt.min_W) - 1e-12;
    if (p.judged) {
      if (p.margin < -1e-9 * std::max(1.0, std::abs(hi))) ++rep.violations;
      t_lo = std::min(t_lo, lo);
      t_hi = std::max(t_hi, hi);
    }
    rep.points.push_back(std::move(p));
  }
  if (t_hi > 0.0) {
    t_lo = std::max(t_lo, 1e-3 * std::min(1.0, t_hi));
    if (t_hi <= t_lo) t_hi = t_lo * 10.0;
    rep.shape_ok = convex_logconcave_derivative(r, t_lo, t_hi, opt, &rep.shape_detail);
  } else {
    rep.shape_detail = "no judged grid points";
  }
  rep.pass = rep.shape_ok && rep.violations == 0;
  return rep;
}

// ---------------------------------------------------------------------------
// (n, W) pairs obtained from a subgeometric drift PV <= V - phi(V) + b 1_C.

enum class PhiFamily {
  log_power,    // phi(t) ~ c [1 + ln t]^alpha : n = c' V/[1+ln V]^alpha, W = [1+ln V]^alpha
  poly,         // phi(t) ~ c t^{1-alpha}      : n = c' V^alpha,          W = V^{1-alpha}
  near_linear,  // phi(t) ~ c t [ln t]^{-alpha}: n = c' [1+ln V]^alpha,   W = V [1+ln V]^{-alpha}
};

const char* to_string(PhiFamily f);

template <class S>
struct CatalogPair {
  NFn<S> n;
  ScaleFunction<S> W;
  /// Unrounded lower bound c' * (...) that n(x) is the ceiling of.
  std::function<double(const S&)> n_real;
};

template <class S>
CatalogPair<S> catalog_pair_from_phi(PhiFamily family, double alpha, const ScaleFunction<S>& v,
                                     double c_prime = 1.0) {
  if (!(c_prime > 0.0)) throw contract_error("catalog pair: c' must be positive");
  const double log_c = std::log(c_prime);
  std::function<double(const S&)> log_n;
  ScaleFunction<S> w;
  switch (family) {
    case PhiFamily::poly:
      if (!(alpha > 0.0 && alpha < 1.0)) throw contract_error("poly catalog: alpha must lie in (0,1)");
      log_n = [v, alpha, log_c](const S& x) { return log_c + alpha * v.log(x); };
      w = v.pow(1.0 - alpha);
      break;
    case PhiFamily::log_power:
      if (!(alpha > 0.0)) throw contract_error("log-power catalog: alpha must be positive");
      log_n = [v, alpha, log_c](const S& x) {
        return log_c + v.log(x) - alpha * std::log1p(v.log(x));
      };
      w = ScaleFunction<S>::from_log(
          [v, alpha](const S& x) { return alpha * std::log1p(v.log(x)); },
          "[1+ln(" + v.label() + ")]^" + describe(alpha));
      break;
    case PhiFamily::near_linear:
      if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw contract_error("near-linear catalog: alpha must lie in (0,1]");
      }
      log_n = [v, alpha, log_c](const S& x) { return log_c + alpha * std::log1p(v.log(x)); };
      w = ScaleFunction<S>::from_log(
          [v, alpha](const S& x) { return v.log(x) - alpha * std::log1p(v.log(x)); },
          v.label() + "[1+ln(" + v.label() + ")]^-" + describe(alpha));
      break;
  }
  CatalogPair<S> out;
  out.n_real = [log_n](const S& x) { return std::exp(log_n(x)); };
  out.n = [log_n](const S& x) { return ceil_count(std::exp(log_n(x))); };
  out.W = std::move(w);
  return out;
}

}  // namespace subdrift
