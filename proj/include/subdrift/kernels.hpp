#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subdrift/chain.hpp"

namespace subdrift {

/// P(x, .) = delta_x on any state type.
template <class S>
class IdentityKernel {
 public:
  using state_type = S;
  S sample(const S& x, RngStream&) const { return x; }
  bool contains(const S&) const { return true; }
  std::array<Transition<S>, 1> transitions(const S& x) const { return {Transition<S>{x, 1.0}}; }
};

/// Row-stochastic matrix over states 0..N-1.
class FiniteKernel {
 public:
  using state_type = std::int64_t;

  explicit FiniteKernel(Eigen::MatrixXd matrix, std::vector<std::string> labels = {});

  /// CSV with a header row of state labels followed by N rows of N
  /// probabilities. A leading label column is accepted and ignored.
  static FiniteKernel from_csv(const std::string& path);

  std::int64_t size() const { return static_cast<std::int64_t>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const std::vector<std::string>& labels() const { return labels_; }

  bool contains(std::int64_t x) const { return x >= 0 && x < size(); }
  std::int64_t sample(std::int64_t x, RngStream& rng) const;
  std::span<const Transition<std::int64_t>> transitions(std::int64_t x) const {
    return rows_[static_cast<std::size_t>(x)];
  }

 private:
  Eigen::MatrixXd matrix_;
  std::vector<std::string> labels_;
  std::vector<std::vector<Transition<std::int64_t>>> rows_;
  std::vector<std::vector<double>> cumulative_;
};

/// Row x of P^n by repeated squaring.
Eigen::VectorXd matrix_power_distribution(const FiniteKernel& kernel, std::int64_t x,
                                          std::int64_t n);

/// P^n by repeated squaring.
Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& p, std::int64_t n);

/// Stationary vector of a finite irreducible kernel (left eigenvector for 1).
Eigen::VectorXd stationary_distribution(const FiniteKernel& kernel);

/// 2-state swap [[0,1],[1,0]].
FiniteKernel swap_kernel();

/// Birth-death chain on {0..n-1}: up w.p. p_up, down w.p. p_down, holds
/// otherwise; moves off either end are replaced by holding.
FiniteKernel lazy_birth_death(std::int64_t n, double p_up, double p_down);

/// Nearest-neighbour walk on {0, 1, 2, ...} with inward drift of order 1/x:
/// up w.p. p(x) = 1/2 - d/(x + s), down otherwise, holding at 0 in place of
/// a down move and at `upper` (if set) in place of an up move. Requires
/// s > 2d so that 0 < p(x) < 1 everywhere. With V(x) = (x+1)^k this chain
/// satisfies PV <= V - c V^{1-2/k} + b 1_C and no geometric drift: the
/// standard example of a polynomially ergodic chain.
class BirthDeathKernel {
 public:
  using state_type = std::int64_t;

  BirthDeathKernel(double d, double s, std::optional<std::int64_t> upper = std::nullopt);

  double up_probability(std::int64_t x) const { return 0.5 - d_ / (static_cast<double>(x) + s_); }
  double d() const { return d_; }
  double s() const { return s_; }
  std::optional<std::int64_t> upper() const { return upper_; }

  bool contains(std::int64_t x) const { return x >= 0 && (!upper_ || x <= *upper_); }
  std::int64_t sample(std::int64_t x, RngStream& rng) const;
  std::array<Transition<std::int64_t>, 2> transitions(std::int64_t x) const;

 private:
  double d_;
  double s_;
  std::optional<std::int64_t> upper_;
};

}  // namespace subdrift
