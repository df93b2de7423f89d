#pragma once

// Finite-state diagnostics on n-step laws.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "subdrift/kernels.hpp"

namespace subdrift {

struct WnormSeries {
  std::int64_t x = 0;
  std::int64_t x_prime = 0;
  /// ratio[n-1] = n ||P^n(x,.) - P^n(x',.)||_W / (V(x) + V(x'))
  std::vector<double> ratio;
  double sup_ratio = 0.0;
  double early_max = 0.0;  // max over n < n_max/2
  double late_max = 0.0;   // max over n in [n_max/2, n_max]
  bool stabilized = false;
};

struct WnormDiagnostic {
  std::int64_t n_max = 0;
  std::vector<WnormSeries> series;
  bool pass = false;
};

/// The discrete W-norm is sum_y |mu(y) - nu(y)| W(y). A pair passes when the
/// running maximum is already attained before n_max/2, i.e. it is constant
/// over the last half of the horizon.
WnormDiagnostic wnorm_difference_diagnostic(const FiniteKernel& kernel, const Eigen::VectorXd& w,
                                            const Eigen::VectorXd& v, std::int64_t n_max,
                                            const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs);

struct RunningSup {
  std::int64_t x0 = 0;
  /// P^k W(x0) for k = 0..n_max
  std::vector<double> values;
  double sup = 0.0;
  /// Running sup still rising over the last half of the horizon.
  bool growing = false;
};

RunningSup running_sup_diagnostic(const FiniteKernel& kernel, const Eigen::VectorXd& w,
                                  std::int64_t x0, std::int64_t n_max);

}  // namespace subdrift
