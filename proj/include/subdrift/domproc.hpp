#pragma once

// The dominating process D = (Z, M): Z is kappa exp(U) for the D/M/1
// workload U slowed down by the countdown M, which restarts at n*(Z) after
// every jump.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subdrift/chain.hpp"
#include "subdrift/moments.hpp"
#include "subdrift/rates.hpp"
#include "subdrift/rng.hpp"

namespace subdrift {

enum class NStarFamily { power, log_power, constant };

const char* to_string(NStarFamily f);

/// n*(z): ceil(z^gamma) for power, max(1, ceil((ln z)^gamma)) for
/// log-power, and the integer gamma for constant.
struct NStar {
  NStarFamily family = NStarFamily::constant;
  double gamma = 1.0;

  static NStar power(double gamma);
  static NStar log_power(double gamma);
  static NStar constant(std::int64_t c = 1);

  std::int64_t operator()(double z) const;
  std::string label() const;
};

struct DomParams {
  double beta = 0.1;
  double kappa = 1.0;
  NStar n_star = NStar::constant();

  /// beta in (0, 1/e), kappa >= 1; throws contract_error otherwise.
  void validate() const;
  double log_inv_beta() const { return -std::log(beta); }
};

struct DomState {
  double z = 1.0;
  std::int64_t m = 1;

  friend bool operator==(const DomState&, const DomState&) = default;
  friend bool operator<(const DomState& a, const DomState& b) {
    return a.z < b.z || (a.z == b.z && a.m < b.m);
  }
};

std::string describe(const DomState& s);
inline double coordinate(const DomState& s) { return s.z; }

/// U' = max(u + e - ln(1/beta), 0) for a given Exp(1) increment e.
double step_U(double u, double e, const DomParams& p);
double step_U(double u, const DomParams& p, RngStream& rng);

/// Y' = max(kappa, beta y / V) with V uniform on (0, 1]: Pareto(1) with
/// scale beta y, folded onto an atom at kappa of mass 1 - beta y / kappa
/// when beta y < kappa. Equals kappa exp(step_U(ln(y/kappa))) with the same
/// draw, since exp(E) = 1/V.
double step_Y(double y, const DomParams& p, RngStream& rng);

DomState step_D(const DomState& s, const DomParams& p, RngStream& rng);

/// Workload chain U on [0, inf).
class WorkloadKernel {
 public:
  using state_type = double;
  explicit WorkloadKernel(DomParams p) : p_(std::move(p)) { p_.validate(); }
  double sample(double u, RngStream& rng) const { return step_U(u, p_, rng); }
  bool contains(double u) const { return u >= 0.0 && std::isfinite(u); }

 private:
  DomParams p_;
};

/// Y = kappa exp(U) on [kappa, inf).
class YKernel {
 public:
  using state_type = double;
  explicit YKernel(DomParams p) : p_(std::move(p)) { p_.validate(); }
  double sample(double y, RngStream& rng) const { return step_Y(y, p_, rng); }
  bool contains(double y) const { return y >= p_.kappa && std::isfinite(y); }
  const DomParams& params() const { return p_; }

 private:
  DomParams p_;
};

class DomKernel {
 public:
  using state_type = DomState;
  explicit DomKernel(DomParams p) : p_(std::move(p)) { p_.validate(); }
  DomState sample(const DomState& s, RngStream& rng) const { return step_D(s, p_, rng); }
  bool contains(const DomState& s) const {
    return s.z >= p_.kappa && std::isfinite(s.z) && s.m >= 1 && s.m <= p_.n_star(s.z);
  }
  const DomParams& params() const { return p_; }
  /// C = {(z, m) : z in [kappa, kappa/beta]}
  StateSet<DomState> small_set() const;
  /// (z, n*(z))
  DomState fresh(double z) const { return {z, p_.n_star(z)}; }

 private:
  DomParams p_;
};

/// Root in (0, 1) of ln(1 - a) - a ln(beta) = 0, to absolute 1e-12.
/// Throws scope_error for beta outside (0, 1/e).
double alpha_beta(double beta);

struct DriftConstants {
  double beta_prime = 0.0;  // beta^alpha / (1 - alpha)
  double b_prime = 0.0;     // (1 - beta^alpha) / (1 - alpha) kappa^alpha
};

/// Throws scope_error unless 0 < alpha < alpha_beta(beta).
DriftConstants drift_constants(double alpha, const DomParams& p);

/// E[Y_1^alpha | Y_0 = z] in closed form:
///   beta^alpha z^alpha / (1 - alpha)                          if beta z >= kappa
///   beta z kappa^{alpha-1}/(1 - alpha) + (1 - beta z/kappa) kappa^alpha  otherwise
double jump_power_moment(double z, double alpha, const DomParams& p);

// ---------------------------------------------------------------------------
// Moment experiments on D.

enum class DomMomentCase { polynomial, stretched, geometric };

const char* to_string(DomMomentCase c);

struct DomMomentSetup {
  DomMomentCase which = DomMomentCase::polynomial;
  DomParams params;
  /// nullopt: 0.9 alpha_beta.
  std::optional<double> alpha;
  /// nullopt: midpoint of the admissible interval (2 gamma/alpha when it is
  /// unbounded above, half the upper bound in the stretched case).
  std::optional<double> eta;
};

struct DomMomentResolved {
  double alpha = 0.0;
  double eta = 0.0;
  double alpha_beta = 0.0;
  DriftConstants drift;
  RateFn rate = RateFn::power(1.0);
  std::string constraint;
};

/// Checks every parameter constraint of the chosen case and fills the
/// defaults; throws scope_error naming the violated inequality.
DomMomentResolved resolve_dom_moments(const DomMomentSetup& setup);

struct AdmissibilityRow {
  double z = 0.0;
  /// (1 - beta'^eta) z^{alpha eta} - n*(z)  (polynomial case)
  double margin = 0.0;
};

struct DomMomentReport {
  DomMomentResolved resolved;
  MomentReport moments;
  std::vector<AdmissibilityRow> admissibility;
};

/// E_{(z,1)}[R(tau_C)] over z_grid with R = t^{1/eta},
/// exp(eta alpha t^{1/(1+gamma)}) or ((1 - alpha) beta^{-alpha})^t.
/// Bound ratios use W = z^alpha and b = b'.
DomMomentReport dom_moment_experiment(const DomMomentSetup& setup, std::span<const double> z_grid,
                               const MomentOptions& opt);

// ---------------------------------------------------------------------------
// Statistical checks of the samplers against closed forms.

struct TailPoint {
  double v = 0.0;
  double empirical = 0.0;
  double exact = 0.0;  // beta u / v
  double std_error = 0.0;
  bool within = false;
};

struct TailCheck {
  double u = 0.0;
  std::uint64_t samples = 0;
  std::vector<TailPoint> points;
  /// Atom at kappa, present when beta u < kappa.
  std::optional<TailPoint> atom;
  bool pass = false;
};

/// Empirical P[Y_1 > v | Y_0 = u] at `v_points` log-spaced v over two
/// decades above max(beta u, kappa), each required within z binomial
/// standard errors of beta u / v; plus the atom mass 1 - beta u / kappa.
TailCheck y_tail_check(const DomParams& p, double u, std::uint64_t samples, int v_points,
                       std::uint64_t seed, int workers, double z = 3.0);

struct SharpnessRow {
  double z = 0.0;
  std::int64_t m = 0;
  bool in_C = false;
  Estimate estimate;  // of Z_m^alpha from (z, m), by simulating D
  double exact = 0.0;
  double z_score = 0.0;
  bool within = false;
};

/// Simulated E[Z_m^alpha | (z, m)] against the closed form, which is
/// beta' z^alpha off C.
std::vector<SharpnessRow> drift_sharpness(const DomParams& p, double alpha,
                                          std::span<const DomState> starts,
                                          std::uint64_t replicates, std::uint64_t seed,
                                          int workers, double z = 3.0);

}  // namespace subdrift
