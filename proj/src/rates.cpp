#include "subdrift/rates.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>

namespace subdrift {

namespace {

std::string fmt_label(const char* prefix, double v, const char* suffix = "") {
  std::ostringstream os;
  os << prefix << v << suffix;
  return os.str();
}

}  // namespace

RateSeq RateSeq::linear(double offset) {
  if (!(offset >= 0.0)) throw contract_error("linear rate: offset must be >= 0");
  return RateSeq(SeqFamily::linear, offset, true,
                 [offset](std::int64_t k) { return static_cast<double>(k) + offset; },
                 fmt_label("k+", offset));
}

RateSeq RateSeq::polynomial(double p) {
  if (!(p > 0.0)) throw contract_error("polynomial rate: exponent must be positive");
  return RateSeq(SeqFamily::polynomial, p, true,
                 [p](std::int64_t k) { return std::pow(static_cast<double>(k) + 1.0, p); },
                 fmt_label("(k+1)^", p));
}

RateSeq RateSeq::log_power(double alpha) {
  if (!(alpha > 0.0)) throw contract_error("log-power rate: alpha must be positive");
  return RateSeq(SeqFamily::log_power, alpha, true,
                 [alpha](std::int64_t k) {
                   return std::pow(1.0 + std::log1p(static_cast<double>(k)), alpha);
                 },
                 fmt_label("[1+ln(1+k)]^", alpha));
}

RateSeq RateSeq::constant(double c) {
  if (!(c > 0.0)) throw contract_error("constant rate: value must be positive");
  return RateSeq(SeqFamily::constant, c, false, [c](std::int64_t) { return c; },
                 fmt_label("", c));
}

RateSeq RateSeq::custom(std::function<double(std::int64_t)> fn, bool divergent, std::string label) {
  return RateSeq(SeqFamily::custom, 0.0, divergent, std::move(fn), std::move(label));
}

std::int64_t gen_inverse(const RateSeq& r, double t) {
  if (!(t > 0.0) || r(0) >= t) return 0;
  if (!r.divergent()) {
    if (r.family() == SeqFamily::constant) {
      throw contract_error("gen_inverse: bounded rate " + r.label() + " never reaches " +
                           describe(t));
    }
  }
  // Exponential bracketing then bisection: r(lo) < t <= r(hi).
  std::int64_t lo = 0;
  std::int64_t hi = 1;
  while (r(hi) < t) {
    lo = hi;
    if (hi > (std::numeric_limits<std::int64_t>::max() >> 2)) {
      throw contract_error("gen_inverse: " + r.label() + " does not reach " + describe(t));
    }
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (r(mid) >= t) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// ---------------------------------------------------------------------------

const char* to_string(RateFamily f) {
  switch (f) {
    case RateFamily::geometric: return "geometric";
    case RateFamily::subgeometric: return "subgeometric";
    case RateFamily::polynomial: return "polynomial";
    case RateFamily::logarithmic: return "logarithmic";
  }
  return "?";
}

const char* to_string(PhiFamily f) {
  switch (f) {
    case PhiFamily::log_power: return "log-power";
    case PhiFamily::poly: return "poly";
    case PhiFamily::near_linear: return "near-linear";
  }
  return "?";
}

RateFn RateFn::geometric(double kappa) {
  if (!(kappa > 1.0)) throw contract_error("geometric rate: kappa must exceed 1");
  return RateFn(RateFamily::geometric, kappa, std::log(kappa), fmt_label("", kappa, "^t"));
}

RateFn RateFn::subgeometric(double c, double alpha) {
  if (!(c > 0.0) || !(alpha > 0.0)) {
    throw contract_error("subgeometric rate: c and alpha must be positive");
  }
  std::ostringstream os;
  os << "exp(" << c << " t^(1/" << 1.0 + alpha << "))";
  return RateFn(RateFamily::subgeometric, c, alpha, os.str());
}

RateFn RateFn::power(double p) {
  if (!(p > 0.0)) throw contract_error("polynomial rate: exponent must be positive");
  return RateFn(RateFamily::polynomial, p, 0.0, fmt_label("t^", p));
}

RateFn RateFn::logarithmic(double alpha) {
  if (!(alpha > 0.0)) throw contract_error("logarithmic rate: alpha must be positive");
  return RateFn(RateFamily::logarithmic, alpha, 0.0, fmt_label("[ln(e+t)]^", alpha));
}

RateFn make_R(const RateFnParams& p) {
  switch (p.family) {
    case RateFamily::geometric: return RateFn::geometric(p.kappa);
    case RateFamily::subgeometric: return RateFn::subgeometric(p.c, p.alpha);
    case RateFamily::polynomial:
      if (!(p.alpha > 0.0 && p.alpha <= 1.0)) {
        throw contract_error("polynomial rate: alpha must lie in (0,1]");
      }
      return RateFn::power((1.0 - p.alpha) / p.alpha);
    case RateFamily::logarithmic: return RateFn::logarithmic(p.alpha);
  }
  throw contract_error("unknown rate family");
}

double RateFn::log_value(double t) const {
  switch (family_) {
    case RateFamily::geometric: return t * b_;
    case RateFamily::subgeometric: return a_ * std::pow(t, 1.0 / (1.0 + b_));
    case RateFamily::polynomial: return a_ * std::log(t);
    case RateFamily::logarithmic:
      // ln(e + t) = 1 + log1p(t/e)
      return a_ * std::log1p(std::log1p(t / std::numbers::e));
  }
  return NAN;
}

double RateFn::inverse_log(double log_s) const {
  switch (family_) {
    case RateFamily::geometric: return log_s / b_;
    case RateFamily::subgeometric: return std::pow(std::max(log_s, 0.0) / a_, 1.0 + b_);
    case RateFamily::polynomial: return std::exp(log_s / a_);
    case RateFamily::logarithmic:
      // exp(exp(L/alpha)) - e = e * expm1(expm1(L/alpha))
      return std::numbers::e * std::expm1(std::expm1(log_s / a_));
  }
  return NAN;
}

double RateFn::log_derivative(double t) const {
  switch (family_) {
    case RateFamily::geometric: return std::log(b_) + t * b_;
    case RateFamily::subgeometric: {
      const double q = 1.0 / (1.0 + b_);
      return std::log(a_ * q) + (q - 1.0) * std::log(t) + a_ * std::pow(t, q);
    }
    case RateFamily::polynomial: return std::log(a_) + (a_ - 1.0) * std::log(t);
    case RateFamily::logarithmic: {
      const double l = 1.0 + std::log1p(t / std::numbers::e);
      return std::log(a_) + (a_ - 1.0) * std::log(l) - std::log(std::numbers::e + t);
    }
  }
  return NAN;
}

std::optional<bool> RateFn::convex_logconcave_derivative() const {
  switch (family_) {
    case RateFamily::geometric: return true;
    case RateFamily::polynomial: return a_ >= 1.0;
    case RateFamily::logarithmic: return false;
    case RateFamily::subgeometric: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<bool> RateFn::sublinear() const {
  switch (family_) {
    case RateFamily::geometric: return false;
    case RateFamily::polynomial: return a_ <= 1.0;
    case RateFamily::logarithmic:
      if (a_ <= 1.0) return true;
      return std::nullopt;
    case RateFamily::subgeometric: return false;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  std::vector<double> t;
  const double l0 = std::log10(lo);
  const double l1 = std::log10(hi);
  const int n = std::max(3, static_cast<int>(std::ceil((l1 - l0) * per_decade)) + 1);
  t.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t.push_back(std::pow(10.0, l0 + (l1 - l0) * i / (n - 1)));
  return t;
}

}  // namespace

bool ratio_nonincreasing(const RateFn& r, double t_lo, double t_hi, const CheckOptions& opt,
                         std::string* detail) {
  const auto t = log_grid(t_lo, t_hi, opt.points_per_decade);
  double prev = r.log_value(t[0]) - std::log(t[0]);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double cur = r.log_value(t[i]) - std::log(t[i]);
    if (cur > prev + opt.shape_tol * std::max(1.0, std::abs(prev))) {
      if (detail) *detail = "R(t)/t increases near t=" + describe(t[i]);
      return false;
    }
    prev = cur;
  }
  if (detail) *detail = "R(t)/t non-increasing on [" + describe(t_lo) + ", " + describe(t_hi) + "]";
  return true;
}

bool convex_logconcave_derivative(const RateFn& r, double t_lo, double t_hi,
                                  const CheckOptions& opt, std::string* detail) {
  const auto t = log_grid(t_lo, t_hi, opt.points_per_decade);
  std::vector<double> g(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) g[i] = r.log_derivative(t[i]);
  for (std::size_t i = 1; i < t.size(); ++i) {
    // Convexity of R <=> R' non-decreasing <=> log R' non-decreasing.
    if (g[i] < g[i - 1] - opt.shape_tol * std::max(1.0, std::abs(g[i - 1]))) {
      if (detail) *detail = "R' decreases near t=" + describe(t[i]) + " (R not convex)";
      return false;
    }
  }
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double s0 = (g[i] - g[i - 1]) / (t[i] - t[i - 1]);
    const double s1 = (g[i + 1] - g[i]) / (t[i + 1] - t[i]);
    if (s1 > s0 + opt.shape_tol * std::max({std::abs(s0), std::abs(s1), 1e-300})) {
      if (detail) *detail = "log R' is not concave near t=" + describe(t[i]);
      return false;
    }
  }
  if (detail) {
    *detail = "R convex, R' log-concave on [" + describe(t_lo) + ", " + describe(t_hi) + "]";
  }
  return true;
}

}  // namespace subdrift
