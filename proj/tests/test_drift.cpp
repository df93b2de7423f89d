#include <doctest.h>

#include <cmath>

#include "subdrift/domproc.hpp"
#include "subdrift/drift.hpp"
#include "subdrift/kernels.hpp"

using namespace subdrift;
using Int = std::int64_t;

namespace {

std::vector<Int> range(Int lo, Int hi) {
  std::vector<Int> g;
  for (Int x = lo; x <= hi; ++x) g.push_back(x);
  return g;
}

ScaleFunction<Int> exp_scale(double r) {
  return ScaleFunction<Int>::from_log([r](const Int& x) { return r * double(x); }, "exp(rx)");
}

ScaleFunction<Int> poly_scale(double e) {
  return ScaleFunction<Int>::from_log([e](const Int& x) { return e * std::log(double(x) + 1); }, "(x+1)^e");
}

StateSet<Int> upto(Int c) {
  return {[c](const Int& x) { return x <= c; }, "{x<=c}"};
}

}  // namespace

TEST_CASE("geometric drift on the lazy walk, exactly") {
  const auto k = lazy_birth_death(50, 0.3, 0.5);
  const double r = 0.25;
  const auto g = range(0, 49);
  GeometricDrift<Int> spec{exp_scale(r), 0.98, 2.0, upto(2)};
  const auto cert = verify_onestep(k, spec, std::span<const Int>(g), EvalMode::exact);
  CHECK(cert.verdict == Verdict::pass);
  // Oracle for interior states: PV/V = p e^r + (1-p-q) + q e^{-r}.
  const double ratio = 0.3 * std::exp(r) + 0.2 + 0.5 * std::exp(-r);
  for (Int x = 3; x < 49; ++x) {
    const double v = std::exp(r * x);
    CHECK(cert.checks[std::size_t(x)].margin == doctest::Approx(0.98 * v - ratio * v).epsilon(1e-10));
  }
  spec.beta = 0.95;  // below the interior ratio 0.9745...
  const auto bad = verify_onestep(k, spec, std::span<const Int>(g), EvalMode::exact);
  CHECK(bad.verdict == Verdict::fail);
  const auto fails = bad.failing_states();
  CHECK(std::find(fails.begin(), fails.end(), "10") != fails.end());
  CHECK(std::find(fails.begin(), fails.end(), "49") == fails.end());  // reflecting end pulls down
}

TEST_CASE("monte carlo verdicts agree with exact ones") {
  const auto k = lazy_birth_death(50, 0.3, 0.5);
  const std::vector<Int> g{0, 3, 10, 25, 49};
  GeometricDrift<Int> spec{exp_scale(0.25), 0.98, 2.0, upto(2)};
  McOptions mc;
  mc.master_seed = 5;
  mc.replicates = 20000;
  const auto ex = verify_onestep(k, spec, std::span<const Int>(g), EvalMode::exact);
  const auto est = verify_onestep(k, spec, std::span<const Int>(g), EvalMode::mc, mc);
  CHECK(est.verdict == Verdict::pass);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& c = est.checks[i];
    CHECK(c.replicates >= 20000);
    CHECK(std::abs(c.margin - ex.checks[i].margin) <= 4 * c.std_error + 1e-12);
  }
  mc.workers = 3;
  const auto again = verify_onestep(k, spec, std::span<const Int>(g), EvalMode::mc, mc);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(again.checks[i].margin == est.checks[i].margin);
}

TEST_CASE("polynomial walk has a phi drift but no geometric drift") {
  const BirthDeathKernel k(3, 7);
  const auto v = poly_scale(8.0);
  std::function<double(double)> phi = [](double t) { return std::pow(t, 0.75); };
  std::vector<Int> g = range(0, 300);
  for (Int x = 400; x < 100000; x = x * 5 / 4) g.push_back(x);
  const auto cal = calibrate_phi_drift(k, v, phi, std::span<const Int>(g));
  REQUIRE(cal);
  CHECK(cal->level < 50);
  PhiDrift<Int> spec{v, phi, cal->b, upto(static_cast<Int>(cal->level))};
  const auto cert = verify_onestep(k, spec, std::span<const Int>(g), EvalMode::exact);
  CHECK(cert.verdict == Verdict::pass);
  // Oracle: PV(x) = p(x)(x+2)^8 + (1-p(x)) x^8 for x >= 1.
  for (std::size_t i = 10; i < 20; ++i) {
    const double x = double(g[i]);
    const double p = 0.5 - 3.0 / (x + 7.0);
    const double pv = p * std::pow(x + 2, 8) + (1 - p) * std::pow(x, 8);
    const double vx = std::pow(x + 1, 8);
    const double rhs = vx - std::pow(vx, 0.75) + (spec.C(g[i]) ? spec.b : 0.0);
    CHECK(cert.checks[i].margin == doctest::Approx(rhs - pv).epsilon(1e-9));
  }
  spec.b = 0.0;
  CHECK(verify_onestep(k, spec, std::span<const Int>(g), EvalMode::exact).verdict == Verdict::fail);
  // PV/V -> 1, so any geometric drift breaks at large x.
  GeometricDrift<Int> geo{v, 0.999, 1e300, upto(100)};
  const auto gc = verify_onestep(k, geo, std::span<const Int>(g), EvalMode::exact);
  CHECK(gc.verdict == Verdict::fail);
  CHECK(gc.checks.back().margin < 0);
}

TEST_CASE("phi must be concave, increasing and positive") {
  const auto k = lazy_birth_death(5, 0.3, 0.5);
  const auto g = range(0, 4);
  PhiDrift<Int> spec{poly_scale(1.0), [](double t) { return t * t; }, 1.0, upto(0)};
  CHECK_THROWS_AS(verify_onestep(k, spec, std::span<const Int>(g), EvalMode::exact), contract_error);
  spec.phi = [](double t) { return 2.0 - std::sqrt(t); };
  CHECK_THROWS_AS(verify_onestep(k, spec, std::span<const Int>(g), EvalMode::exact), contract_error);
  spec.phi = [](double t) { return std::log(t); };
  CHECK_THROWS_AS(verify_onestep(k, spec, std::span<const Int>(g), EvalMode::exact), contract_error);
}

TEST_CASE("double control checks both inequalities") {
  const auto k = lazy_birth_death(50, 0.3, 0.5);
  const auto g = range(0, 49);
  DoubleControlDrift<Int> spec{poly_scale(2.0).scaled(5.0), poly_scale(1.0), 25.0, upto(2)};
  const auto cert = verify_double_control(k, spec, std::span<const Int>(g), EvalMode::exact);
  CHECK(cert.verdict == Verdict::pass);
  REQUIRE(cert.secondary.size() == g.size());
  // PW = W + p - q off the ends: margin q - p = 0.2.
  CHECK(cert.secondary[20].margin == doctest::Approx(0.2));
  // Interior: PV - V = 5(2(x+1)(p-q) + p + q) ; margin = -W - (PV - V).
  const double x1 = 21.0;
  CHECK(cert.checks[20].margin == doctest::Approx(-x1 - 5 * (2 * x1 * (-0.2) + 0.8)));
  spec.b = 0.0;
  CHECK(verify_double_control(k, spec, std::span<const Int>(g), EvalMode::exact).verdict == Verdict::fail);
}

TEST_CASE("subsampled drift against matrix powers") {
  const auto k = lazy_birth_death(30, 0.3, 0.5);
  const auto g = range(0, 29);
  SubsampledDrift<Int> spec;
  spec.W = exp_scale(0.25);
  spec.n = [](const Int& x) { return x / 5 + 1; };
  spec.beta = 0.97;
  spec.b = 3.0;
  spec.C = upto(3);
  const auto cert = verify_subsampled(k, spec, std::span<const Int>(g), EvalMode::exact);
  for (Int x : g) {
    const Int n = x / 5 + 1;
    const Eigen::VectorXd row = matrix_power(k.matrix(), n).row(x);
    double pw = 0.0;
    for (Int y = 0; y < 30; ++y) pw += row(y) * std::exp(0.25 * y);
    const double rhs = 0.97 * std::exp(0.25 * x) + (x <= 3 ? 3.0 : 0.0);
    CHECK(cert.checks[std::size_t(x)].margin == doctest::Approx(rhs - pw).epsilon(1e-10));
  }
  spec.n = [](const Int&) { return Int{0}; };
  CHECK_THROWS_AS(verify_subsampled(k, spec, std::span<const Int>(g), EvalMode::exact), contract_error);
}

TEST_CASE("closed-form subsampled check on the dominating process") {
  DomParams p;
  p.beta = 0.1;
  p.n_star = NStar::power(0.2);
  const DomKernel dk(p);
  const double alpha = 0.3;
  const auto dc = drift_constants(alpha, p);
  SubsampledDrift<DomState> spec;
  spec.W = ScaleFunction<DomState>::from_log([alpha](const DomState& s) { return alpha * std::log(s.z); }, "z^a");
  spec.n = [](const DomState& s) { return s.m; };
  spec.beta = dc.beta_prime;
  spec.b = dc.b_prime;
  spec.C = dk.small_set();
  std::vector<DomState> g;
  for (double z : {1.0, 3.0, 10.0, 50.0, 1e4}) g.push_back(dk.fresh(z));
  const auto cert = verify_subsampled_closed_form<DomState>(
      spec, std::span<const DomState>(g),
      [&](const DomState& s, Int) { return jump_power_moment(s.z, alpha, p); });
  CHECK(cert.verdict == Verdict::pass);
  // exact mode needs finite support
  CHECK_THROWS_AS(verify_subsampled(dk, spec, std::span<const DomState>(g), EvalMode::exact), capability_error);
  McOptions mc;
  mc.master_seed = 9;
  mc.replicates = 20000;
  const auto est = verify_subsampled(dk, spec, std::span<const DomState>(g), EvalMode::mc, mc);
  CHECK(est.verdict != Verdict::fail);
}

TEST_CASE("step budget makes a state inconclusive") {
  const auto k = lazy_birth_death(5, 0.3, 0.5);
  const auto g = range(0, 4);
  SubsampledDrift<Int> spec{exp_scale(0.1), [](const Int&) { return Int{50}; }, 0.9, 5.0, upto(1)};
  McOptions mc;
  mc.step_budget = 10;
  const auto c = verify_subsampled(k, spec, std::span<const Int>(g), EvalMode::mc, mc);
  CHECK(c.verdict == Verdict::inconclusive);
  CHECK(c.inconclusive_states().size() == g.size());
}

TEST_CASE("nested family with equality is certified, with a larger rate it fails") {
  const IdentityKernel<Int> id;
  const auto g = range(1, 6);
  NestedDrift<Int> spec;
  spec.V = [](Int k, const Int& x) { return double(100 - k) * double(x); };
  spec.S_k = [](Int, const Int&) { return 0.0; };
  spec.r = [](Int) { return 1.0; };
  spec.f = [](const Int& x) { return double(x); };
  spec.n = [](const Int& x) { return x; };
  spec.C = StateSet<Int>::none();
  const auto ok = verify_nested_family(id, spec, std::span<const Int>(g), 0, 5, EvalMode::exact);
  CHECK(ok.verdict == Verdict::pass);
  CHECK(ok.checks.size() == 36);
  for (const auto& c : ok.checks) CHECK(c.margin == doctest::Approx(0.0));
  spec.r = [](Int) { return 1.5; };
  CHECK(verify_nested_family(id, spec, std::span<const Int>(g), 0, 5, EvalMode::exact).verdict == Verdict::fail);
  spec.S_k = [](Int, const Int& x) { return double(x * x); };
  spec.C = StateSet<Int>::all();
  CHECK(verify_nested_family(id, spec, std::span<const Int>(g), 0, 5, EvalMode::exact).verdict == Verdict::pass);
}

TEST_CASE("verdict combination") {
  CHECK(combine(Verdict::pass, Verdict::inconclusive) == Verdict::inconclusive);
  CHECK(combine(Verdict::inconclusive, Verdict::fail) == Verdict::fail);
  CHECK(combine(Verdict::pass, Verdict::pass) == Verdict::pass);
  CHECK(std::string(to_string(Verdict::inconclusive)) == "INCONCLUSIVE");
}

TEST_CASE("scale functions below one are rejected") {
  const auto k = lazy_birth_death(5, 0.3, 0.5);
  const auto g = range(0, 4);
  GeometricDrift<Int> spec{ScaleFunction<Int>::constant(0.5), 0.5, 1.0, upto(0)};
  CHECK_THROWS_AS(verify_onestep(k, spec, std::span<const Int>(g), EvalMode::exact), contract_error);
}
