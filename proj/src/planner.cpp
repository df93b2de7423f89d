#include "subdrift/planner.hpp"

#include <stdexcept>

namespace subdrift {

const char* to_string(PlanSource s) {
  switch (s) {
    case PlanSource::rate: return "rate";
    case PlanSource::catalog: return "catalog";
    case PlanSource::tame: return "tame";
    case PlanSource::manual: return "manual";
  }
  return "?";
}

TameConstruction tame_constants(double alpha, double c_scale) {
  if (!(alpha > 0.0)) throw contract_error("tame construction: alpha must be positive");
  if (alpha >= 0.5) {
    throw scope_error("tame construction needs alpha < 1/2, got " + describe(alpha));
  }
  if (!(c_scale > 0.0)) throw contract_error("tame construction: c_scale must be positive");
  TameConstruction k;
  k.alpha = alpha;
  k.delta = 0.5 * (alpha / (1.0 - alpha) + 1.0);
  k.beta = 0.5 * tame_beta_bound(k.delta);
  k.c_beta = c_scale / k.beta;
  k.c_level = std::pow(k.c_beta + 1.0, 1.0 / (k.delta * (1.0 - alpha) - alpha));
  return k;
}

double ScaleTable::interpolate(double coord, bool v) const {
  if (rows.empty()) throw contract_error("scale table is empty");
  if (coord < rows.front().coordinate || coord > rows.back().coordinate) {
    throw contract_error("scale table queried at " + describe(coord) + ", outside the grid [" +
                         describe(rows.front().coordinate) + ", " +
                         describe(rows.back().coordinate) + "]");
  }
  auto value = [v](const ScaleRow& r) { return std::log(v ? r.V.mean : r.W.mean); };
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const auto& a = rows[i];
    const auto& b = rows[i + 1];
    if (coord <= b.coordinate) {
      if (b.coordinate == a.coordinate) return std::exp(value(a));
      const double w = (coord - a.coordinate) / (b.coordinate - a.coordinate);
      return std::exp((1.0 - w) * value(a) + w * value(b));
    }
  }
  return std::exp(value(rows.back()));
}

namespace {

void check_sizes(const FiniteKernel& kernel, const std::vector<bool>& in_c) {
  if (static_cast<std::int64_t>(in_c.size()) != kernel.size()) {
    throw contract_error("set membership vector does not match the kernel size");
  }
}

}  // namespace

Eigen::VectorXd hitting_additive_functional(const FiniteKernel& kernel,
                                            const std::vector<bool>& in_c,
                                            const Eigen::VectorXd& f) {
  check_sizes(kernel, in_c);
  const auto n = kernel.size();
  std::vector<Eigen::Index> outside;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!in_c[static_cast<std::size_t>(i)]) outside.push_back(i);
  }
  Eigen::VectorXd out = f;
  if (outside.empty()) return out;
  const auto m = static_cast<Eigen::Index>(outside.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd rhs(m);
  const auto& p = kernel.matrix();
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto xi = outside[static_cast<std::size_t>(i)];
    rhs(i) = f(xi);
    // F(x) = f(x) + sum_{y in C} P(x,y) f(y) + sum_{y not in C} P(x,y) F(y)
    for (Eigen::Index y = 0; y < n; ++y) {
      if (in_c[static_cast<std::size_t>(y)]) rhs(i) += p(xi, y) * f(y);
    }
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) -= p(xi, outside[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd sol = a.fullPivLu().solve(rhs);
  for (Eigen::Index i = 0; i < m; ++i) out(outside[static_cast<std::size_t>(i)]) = sol(i);
  return out;
}

Eigen::VectorXd return_additive_functional(const FiniteKernel& kernel,
                                           const std::vector<bool>& in_c,
                                           const Eigen::VectorXd& f, double tail,
                                           std::int64_t max_steps) {
  check_sizes(kernel, in_c);
  const auto n = kernel.size();
  const auto& p = kernel.matrix();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    // alive(y) = P_x(X_k = y, k <= tau_C) with mass in C removed after
    // it has been counted.
    Eigen::RowVectorXd alive = Eigen::RowVectorXd::Zero(n);
    alive(x) = 1.0;
    double acc = 0.0;
    for (std::int64_t k = 1;; ++k) {
      alive = alive * p;
      acc += alive.dot(f.transpose());
      for (Eigen::Index y = 0; y < n; ++y) {
        if (in_c[static_cast<std::size_t>(y)]) alive(y) = 0.0;
      }
      if (alive.sum() < tail) break;
      if (k >= max_steps) {
        throw std::runtime_error("return_additive_functional: mass " + describe(alive.sum()) +
                                 " has not returned after " + std::to_string(max_steps) +
                                 " steps");
      }
    }
    out(x) = acc;
  }
  return out;
}

ExactScales exact_return_scales(const FiniteKernel& kernel, const std::vector<bool>& in_c,
                                const RateSeq& r, double tail, std::int64_t max_steps) {
  check_sizes(kernel, in_c);
  const auto n = kernel.size();
  const auto& p = kernel.matrix();
  ExactScales s{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index x = 0; x < n; ++x) {
    if (in_c[static_cast<std::size_t>(x)]) {
      s.V(x) = s.W(x) = r(0);
      continue;
    }
    // sum_{k=0}^{sigma} r(k) = sum_k r(k) 1{sigma >= k}
    Eigen::RowVectorXd alive = Eigen::RowVectorXd::Zero(n);
    alive(x) = 1.0;
    double v = r(0);
    double w = 0.0;
    for (std::int64_t k = 1;; ++k) {
      alive = alive * p;
      const double rk = r(k);
      v += rk * alive.sum();
      double hit = 0.0;
      for (Eigen::Index y = 0; y < n; ++y) {
        if (in_c[static_cast<std::size_t>(y)]) {
          hit += alive(y);
          alive(y) = 0.0;
        }
      }
      w += rk * hit;
      if (alive.sum() < tail) break;
      if (k >= max_steps) {
        throw std::runtime_error("exact_return_scales: mass has not hit C after " +
                                 std::to_string(max_steps) + " steps");
      }
    }
    s.V(x) = v;
    s.W(x) = w;
  }
  return s;
}

}  // namespace subdrift
