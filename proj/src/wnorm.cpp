#include "subdrift/wnorm.hpp"

#include <algorithm>

namespace subdrift {

namespace {

void check_vector(const FiniteKernel& kernel, const Eigen::VectorXd& f, const char* name) {
  if (f.size() != kernel.size()) {
    throw contract_error(std::string(name) + " has " + std::to_string(f.size()) +
                         " entries, kernel has " + std::to_string(kernel.size()) + " states");
  }
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (!(f(i) >= 1.0) || !std::isfinite(f(i))) {
      throw contract_error(std::string(name) + " must be finite and >= 1 (state " +
                           std::to_string(i) + ")");
    }
  }
}

}  // namespace

WnormDiagnostic wnorm_difference_diagnostic(
    const FiniteKernel& kernel, const Eigen::VectorXd& w, const Eigen::VectorXd& v,
    std::int64_t n_max, const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs) {
  if (n_max < 2) throw contract_error("wnorm diagnostic: n_max must be >= 2");
  check_vector(kernel, w, "W");
  check_vector(kernel, v, "V");
  const auto& p = kernel.matrix();
  WnormDiagnostic d;
  d.n_max = n_max;
  d.pass = true;
  const std::int64_t half = n_max / 2;
  for (const auto& [x, xp] : pairs) {
    if (!kernel.contains(x) || !kernel.contains(xp)) {
      throw contract_error("wnorm diagnostic: pair state out of range");
    }
    WnormSeries s;
    s.x = x;
    s.x_prime = xp;
    s.ratio.reserve(static_cast<std::size_t>(n_max));
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(kernel.size());
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(kernel.size());
    a(x) = 1.0;
    b(xp) = 1.0;
    const double denom = v(x) + v(xp);
    for (std::int64_t n = 1; n <= n_max; ++n) {
      a = a * p;
      b = b * p;
      const double norm = (a - b).cwiseAbs().dot(w.transpose());
      const double r = static_cast<double>(n) * norm / denom;
      s.ratio.push_back(r);
      s.sup_ratio = std::max(s.sup_ratio, r);
      if (n < half) {
        s.early_max = std::max(s.early_max, r);
      } else {
        s.late_max = std::max(s.late_max, r);
      }
    }
    s.stabilized = s.late_max <= s.early_max;
    d.pass = d.pass && s.stabilized;
    d.series.push_back(std::move(s));
  }
  return d;
}

RunningSup running_sup_diagnostic(const FiniteKernel& kernel, const Eigen::VectorXd& w,
                                  std::int64_t x0, std::int64_t n_max) {
  if (n_max < 2) throw contract_error("running sup: n_max must be >= 2");
  if (!kernel.contains(x0)) throw contract_error("running sup: x0 out of range");
  check_vector(kernel, w, "W");
  RunningSup r;
  r.x0 = x0;
  Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(kernel.size());
  a(x0) = 1.0;
  double early = 0.0;
  double late = 0.0;
  for (std::int64_t k = 0; k <= n_max; ++k) {
    if (k > 0) a = a * kernel.matrix();
    const double val = a.dot(w.transpose());
    r.values.push_back(val);
    r.sup = std::max(r.sup, val);
    double& slot = k < n_max / 2 ? early : late;
    slot = std::max(slot, val);
  }
  r.growing = late > early * (1.0 + 1e-12);
  return r;
}

}  // namespace subdrift
