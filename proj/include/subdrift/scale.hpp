#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "subdrift/errors.hpp"

namespace subdrift {

// Generic code calls describe(x) and coordinate(x) unqualified. Overloads for
// scalar states live here; class-type states provide theirs next to the type
// and are found by ADL.

inline std::string describe(std::int64_t x) { return std::to_string(x); }

inline std::string describe(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

/// Size coordinate used by parametric scale functions and scaling fits.
inline double coordinate(std::int64_t x) { return static_cast<double>(x); }
inline double coordinate(double x) { return x; }

/// Measurable set given by a membership predicate.
template <class S>
struct StateSet {
  std::function<bool(const S&)> contains;
  std::string label;

  bool operator()(const S& x) const { return contains(x); }

  static StateSet all() {
    return {[](const S&) { return true; }, "all"};
  }
  static StateSet none() {
    return {[](const S&) { return false; }, "empty"};
  }
  /// {x : lo <= coordinate(x) <= hi}
  static StateSet interval(double lo, double hi) {
    std::ostringstream os;
    os << "[" << lo << ", " << hi << "]";
    return {[lo, hi](const S& x) {
              const double c = coordinate(x);
              return c >= lo && c <= hi;
            },
            os.str()};
  }
  StateSet united(const StateSet& other) const {
    return {[a = contains, b = other.contains](const S& x) { return a(x) || b(x); },
            label + " u " + other.label};
  }
};

/// Subsampling schedule n : X -> {1, 2, ...}.
template <class S>
using NFn = std::function<std::int64_t(const S&)>;

/// Scale (Lyapunov) function W : X -> [1, inf), stored in log-space so that
/// V(x) = x^8 style functions and their powers never overflow.
template <class S>
class ScaleFunction {
 public:
  using Fn = std::function<double(const S&)>;

  ScaleFunction() = default;

  static ScaleFunction from_log(Fn log_fn, std::string label) {
    ScaleFunction f;
    f.log_ = std::move(log_fn);
    f.label_ = std::move(label);
    return f;
  }

  /// value_fn must return finite positive values.
  static ScaleFunction from_value(Fn value_fn, std::string label) {
    ScaleFunction f;
    f.log_ = [v = value_fn](const S& x) { return std::log(v(x)); };
    f.value_ = std::move(value_fn);
    f.label_ = std::move(label);
    return f;
  }

  static ScaleFunction constant(double c) {
    std::ostringstream os;
    os << c;
    return from_value([c](const S&) { return c; }, os.str());
  }

  double operator()(const S& x) const {
    if (value_) return value_(x);
    return std::exp(log_(x));
  }
  double log(const S& x) const { return log_(x); }
  const std::string& label() const { return label_; }
  explicit operator bool() const { return static_cast<bool>(log_); }

  /// x -> f(x)^a
  ScaleFunction pow(double a) const {
    std::ostringstream os;
    os << "(" << label_ << ")^" << a;
    return from_log([l = log_, a](const S& x) { return a * l(x); }, os.str());
  }

  /// x -> c * f(x)
  ScaleFunction scaled(double c) const {
    if (!(c > 0.0)) throw contract_error("ScaleFunction::scaled: factor must be positive");
    std::ostringstream os;
    os << c << "*" << label_;
    const double lc = std::log(c);
    if (value_) {
      return from_value([v = value_, c](const S& x) { return c * v(x); }, os.str());
    }
    return from_log([l = log_, lc](const S& x) { return lc + l(x); }, os.str());
  }

 private:
  Fn log_;
  Fn value_;
  std::string label_;
};

/// Smallest integer >= v, tolerant to the ~1e-15 relative error that
/// log-space evaluation leaves on exact integers.
inline std::int64_t ceil_count(double v) {
  if (!(v < 9.0e18)) throw contract_error("subsampling count overflows a 64-bit integer");
  const double c = std::ceil(v * (1.0 - 1e-12));
  return static_cast<std::int64_t>(c < 1.0 ? 1.0 : c);
}

}  // namespace subdrift
