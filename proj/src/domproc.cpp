#include "subdrift/domproc.hpp"

#include "subdrift/engine.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

namespace subdrift {

const char* to_string(NStarFamily f) {
  switch (f) {
    case NStarFamily::power: return "power";
    case NStarFamily::log_power: return "log-power";
    case NStarFamily::constant: return "constant";
  }
  return "?";
}

NStar NStar::power(double gamma) {
  if (!(gamma >= 0.0)) throw contract_error("n*: power exponent must be >= 0");
  return {NStarFamily::power, gamma};
}

NStar NStar::log_power(double gamma) {
  if (!(gamma > 0.0)) throw contract_error("n*: log-power exponent must be positive");
  return {NStarFamily::log_power, gamma};
}

NStar NStar::constant(std::int64_t c) {
  if (c < 1) throw contract_error("n*: constant must be >= 1");
  return {NStarFamily::constant, static_cast<double>(c)};
}

std::int64_t NStar::operator()(double z) const {
  switch (family) {
    case NStarFamily::power: return ceil_count(std::pow(z, gamma));
    case NStarFamily::log_power:
      return z <= 1.0 ? 1 : ceil_count(std::pow(std::log(z), gamma));
    case NStarFamily::constant: return static_cast<std::int64_t>(gamma);
  }
  return 1;
}

std::string NStar::label() const {
  std::ostringstream os;
  switch (family) {
    case NStarFamily::power: os << "ceil(z^" << gamma << ")"; break;
    case NStarFamily::log_power: os << "max(1, ceil((ln z)^" << gamma << "))"; break;
    case NStarFamily::constant: os << static_cast<std::int64_t>(gamma); break;
  }
  return os.str();
}

void DomParams::validate() const {
  if (!(beta > 0.0 && beta < std::exp(-1.0))) {
    throw contract_error("dominating process: beta must lie in (0, 1/e), got " + describe(beta));
  }
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    throw contract_error("dominating process: kappa must be >= 1, got " + describe(kappa));
  }
}

std::string describe(const DomState& s) {
  return "(" + describe(s.z) + "," + std::to_string(s.m) + ")";
}

double step_U(double u, double e, const DomParams& p) {
  return std::max(u + e - p.log_inv_beta(), 0.0);
}

double step_U(double u, const DomParams& p, RngStream& rng) {
  return step_U(u, rng.exponential(), p);
}

double step_Y(double y, const DomParams& p, RngStream& rng) {
  return std::max(p.kappa, p.beta * y / rng.uniform_pos());
}

DomState step_D(const DomState& s, const DomParams& p, RngStream& rng) {
  if (s.m >= 2) return {s.z, s.m - 1};
  const double z = step_Y(s.z, p, rng);
  return {z, p.n_star(z)};
}

StateSet<DomState> DomKernel::small_set() const {
  const double lo = p_.kappa;
  const double hi = p_.kappa / p_.beta;
  return {[lo, hi](const DomState& s) { return s.z >= lo && s.z <= hi; },
          "{z in [" + describe(lo) + ", " + describe(hi) + "]}"};
}

double alpha_beta(double beta) {
  if (!(beta > 0.0 && beta < std::exp(-1.0))) {
    throw scope_error("alpha_beta: beta must lie in (0, 1/e), got " + describe(beta));
  }
  const double l = -std::log(beta);
  // f(a) = ln(1-a) + a ln(1/beta): f > 0 near 0 since ln(1/beta) > 1, f -> -inf at 1.
  auto f = [l](double a) { return std::log1p(-a) + a * l; };
  const double lo = 1e-300;
  const double hi = std::nextafter(1.0, 0.0);
  if (f(hi) > 0.0) return hi;
  auto done = [](double a, double b) { return std::abs(b - a) <= 1e-13; };
  const auto [a, b] = boost::math::tools::bisect(f, lo, hi, done);
  return 0.5 * (a + b);
}

DriftConstants drift_constants(double alpha, const DomParams& p) {
  p.validate();
  const double ab = alpha_beta(p.beta);
  if (!(alpha > 0.0 && alpha < ab)) {
    throw scope_error("drift constants need 0 < alpha < alpha_beta = " + describe(ab) +
                      ", got " + describe(alpha));
  }
  const double ba = std::pow(p.beta, alpha);
  return {ba / (1.0 - alpha), (1.0 - ba) / (1.0 - alpha) * std::pow(p.kappa, alpha)};
}

double jump_power_moment(double z, double alpha, const DomParams& p) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw contract_error("jump moment: alpha must lie in (0,1)");
  const double bz = p.beta * z;
  if (bz >= p.kappa) return std::pow(bz, alpha) / (1.0 - alpha);
  return bz * std::pow(p.kappa, alpha - 1.0) / (1.0 - alpha) +
         (1.0 - bz / p.kappa) * std::pow(p.kappa, alpha);
}

const char* to_string(DomMomentCase c) {
  switch (c) {
    case DomMomentCase::polynomial: return "i";
    case DomMomentCase::stretched: return "ii";
    case DomMomentCase::geometric: return "iii";
  }
  return "?";
}

DomMomentResolved resolve_dom_moments(const DomMomentSetup& setup) {
  setup.params.validate();
  DomMomentResolved r;
  r.alpha_beta = alpha_beta(setup.params.beta);
  r.alpha = setup.alpha.value_or(0.9 * r.alpha_beta);
  if (!(r.alpha > 0.0 && r.alpha < r.alpha_beta)) {
    throw scope_error("violated: 0 < alpha < alpha_beta = " + describe(r.alpha_beta));
  }
  r.drift = drift_constants(r.alpha, setup.params);
  const auto& ns = setup.params.n_star;
  const double gamma = ns.gamma;
  switch (setup.which) {
    case DomMomentCase::polynomial: {
      if (ns.family != NStarFamily::power) {
        throw scope_error("case i needs a power n*, got " + ns.label());
      }
      const double lo = gamma / r.alpha;
      if (gamma < r.alpha_beta) {
        r.eta = setup.eta.value_or(0.5 * (lo + 1.0));
        if (!(r.eta > lo && r.eta <= 1.0)) {
          throw scope_error("violated: gamma/alpha < eta <= 1 (gamma < alpha_beta), with gamma/alpha = " +
                            describe(lo));
        }
        r.constraint = "eta in (gamma/alpha, 1]";
      } else {
        r.eta = setup.eta.value_or(2.0 * lo);
        if (!(r.eta > lo)) {
          throw scope_error("violated: eta > gamma/alpha = " + describe(lo));
        }
        r.constraint = "eta > gamma/alpha";
      }
      r.rate = RateFn::power(1.0 / r.eta);
      break;
    }
    case DomMomentCase::stretched: {
      if (ns.family != NStarFamily::log_power) {
        throw scope_error("case ii needs a log-power n*, got " + ns.label());
      }
      const double bound = std::pow((1.0 + gamma) / r.alpha *
                                        std::log((1.0 - r.alpha) / std::pow(setup.params.beta, r.alpha)),
                                    1.0 / (1.0 + gamma));
      r.eta = setup.eta.value_or(0.5 * bound);
      if (!(r.eta > 0.0 && r.eta < bound)) {
        throw scope_error("violated: 0 < eta < " + describe(bound));
      }
      r.constraint = "0 < eta < ((1+gamma)/alpha ln((1-alpha)/beta^alpha))^{1/(1+gamma)}";
      r.rate = RateFn::subgeometric(r.eta * r.alpha, gamma);
      break;
    }
    case DomMomentCase::geometric: {
      if (!(ns.family == NStarFamily::constant && ns(1.0) == 1)) {
        throw scope_error("case iii needs n* = 1, got " + ns.label());
      }
      const double base = (1.0 - r.alpha) * std::pow(setup.params.beta, -r.alpha);
      if (!(base > 1.0)) throw scope_error("violated: (1-alpha) beta^{-alpha} > 1");
      r.eta = setup.eta.value_or(1.0);
      r.constraint = "(1-alpha) beta^{-alpha} > 1";
      r.rate = RateFn::geometric(base);
      break;
    }
  }
  return r;
}

DomMomentReport dom_moment_experiment(const DomMomentSetup& setup, std::span<const double> z_grid,
                               const MomentOptions& opt) {
  DomMomentReport rep;
  rep.resolved = resolve_dom_moments(setup);
  const DomKernel kernel(setup.params);
  const auto c = kernel.small_set();
  const double alpha = rep.resolved.alpha;
  auto& m = rep.moments;
  m.experiment = std::string("domproc-case-") + to_string(setup.which);
  m.rate = rep.resolved.rate.label();
  m.target = c.label;
  std::uint64_t tag = 0;
  for (double z : z_grid) {
    if (!(z >= setup.params.kappa)) {
      throw contract_error("domproc experiment: z = " + describe(z) + " is below kappa");
    }
    const DomState x0{z, 1};
    MomentOptions o = opt;
    o.master_seed = derive_seed(opt.master_seed, tag++);
    MomentRow row;
    row.state = describe(x0);
    row.coordinate = z;
    row.estimate = estimate_R_moment(kernel, x0, c, rep.resolved.rate, o);
    row.W = std::pow(z, alpha);
    row.in_C = c(x0);
    const double denom = row.W + (row.in_C ? rep.resolved.drift.b_prime : 0.0);
    row.bound_ratio = row.estimate.truncated.mean / denom;
    row.lower_bound_ratio = row.estimate.censor_lower_bound / denom;
    m.rows.push_back(std::move(row));
    if (setup.which == DomMomentCase::polynomial) {
      const double eta = rep.resolved.eta;
      rep.admissibility.push_back(
          {z, (1.0 - std::pow(rep.resolved.drift.beta_prime, eta)) * std::pow(z, alpha * eta) -
                  static_cast<double>(setup.params.n_star(z))});
    }
  }
  std::stable_sort(m.rows.begin(), m.rows.end(),
                   [](const auto& a, const auto& b) { return a.W < b.W; });
  finish_report(m, opt.stabilization_tol);
  return rep;
}

TailCheck y_tail_check(const DomParams& p, double u, std::uint64_t samples, int v_points,
                       std::uint64_t seed, int workers, double z) {
  p.validate();
  if (!(u >= p.kappa)) throw contract_error("tail check: u must be >= kappa");
  if (samples < 2 || v_points < 1) throw contract_error("tail check: need samples >= 2 and v_points >= 1");
  const auto draws = generate_replicates(
      samples, seed, [&](RngStream& rng, std::size_t) { return step_Y(u, p, rng); }, workers);
  const double n = static_cast<double>(samples);
  auto point = [&](double v, double exact, auto&& hit) {
    std::uint64_t count = 0;
    for (double y : draws) count += hit(y) ? 1 : 0;
    TailPoint t;
    t.v = v;
    t.exact = exact;
    t.empirical = static_cast<double>(count) / n;
    t.std_error = std::sqrt(exact * (1.0 - exact) / n);
    t.within = std::abs(t.empirical - exact) <= z * t.std_error;
    return t;
  };
  TailCheck c;
  c.u = u;
  c.samples = samples;
  const double base = std::max(p.beta * u, p.kappa);
  for (int k = 1; k <= v_points; ++k) {
    const double v = base * std::pow(100.0, static_cast<double>(k) / v_points);
    c.points.push_back(point(v, p.beta * u / v, [v](double y) { return y > v; }));
  }
  if (p.beta * u < p.kappa) {
    const double kappa = p.kappa;
    c.atom = point(kappa, 1.0 - p.beta * u / kappa, [kappa](double y) { return y == kappa; });
  }
  c.pass = std::all_of(c.points.begin(), c.points.end(), [](const auto& t) { return t.within; }) &&
           (!c.atom || c.atom->within);
  return c;
}

std::vector<SharpnessRow> drift_sharpness(const DomParams& p, double alpha,
                                          std::span<const DomState> starts,
                                          std::uint64_t replicates, std::uint64_t seed,
                                          int workers, double z) {
  const DomKernel kernel(p);
  const auto c = kernel.small_set();
  std::vector<SharpnessRow> rows;
  std::uint64_t tag = 0;
  for (const auto& x : starts) {
    if (!kernel.contains(x)) throw contract_error("drift check: " + describe(x) + " is not a state of D");
    SharpnessRow r;
    r.z = x.z;
    r.m = x.m;
    r.in_C = c(x);
    r.estimate = mc_expectation(
        [&](RngStream& rng) {
          DomState s = x;
          for (std::int64_t j = 0; j < x.m; ++j) s = step_D(s, p, rng);
          return std::pow(s.z, alpha);
        },
        replicates, derive_seed(seed, tag++), workers);
    r.exact = jump_power_moment(x.z, alpha, p);
    r.z_score = (r.estimate.mean - r.exact) / r.estimate.std_error;
    r.within = std::abs(r.estimate.mean - r.exact) <= z * r.estimate.std_error;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace subdrift
