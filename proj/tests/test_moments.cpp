#include <doctest.h>

#include <cmath>

#include "subdrift/kernels.hpp"
#include "subdrift/moments.hpp"
#include "subdrift/planner.hpp"

using namespace subdrift;
using Int = std::int64_t;

namespace {

StateSet<Int> upto(Int c) {
  return {[c](const Int& x) { return x <= c; }, "{x<=c}"};
}

ScaleFunction<Int> poly_scale(double e) {
  return ScaleFunction<Int>::from_log([e](const Int& x) { return e * std::log(double(x) + 1); }, "V");
}

}  // namespace

TEST_CASE("mean return time matches the linear solve") {
  const auto k = lazy_birth_death(20, 0.3, 0.5);
  std::vector<bool> in_c(20, false);
  in_c[0] = true;
  const auto h = hitting_additive_functional(k, in_c, Eigen::VectorXd::Ones(20));
  MomentOptions opt;
  opt.master_seed = 4;
  opt.replicates = 20000;
  for (Int x : {3, 10, 19}) {
    const auto m = estimate_R_moment(k, x, upto(0), RateFn::power(1.0), opt);
    // from outside C the return time is the hitting time sigma_C = h - 1
    CHECK(std::abs(m.truncated.mean - (h(x) - 1)) <= 4 * m.truncated.std_error);
    CHECK(m.censored_fraction == 0.0);
    CHECK_FALSE(m.flagged);
    CHECK(m.mean_tau == doctest::Approx(m.truncated.mean));
  }
  opt.workers = 3;
  const auto a = estimate_R_moment(k, Int{10}, upto(0), RateFn::power(2.0), opt);
  opt.workers = 1;
  const auto b = estimate_R_moment(k, Int{10}, upto(0), RateFn::power(2.0), opt);
  CHECK(a.truncated.mean == b.truncated.mean);
}

TEST_CASE("censoring is flagged and bounded below") {
  const auto k = lazy_birth_death(40, 0.3, 0.5);
  MomentOptions opt;
  opt.replicates = 2000;
  opt.cap = 30;
  const auto m = estimate_R_moment(k, Int{39}, upto(0), RateFn::power(1.0), opt);
  CHECK(m.flagged);
  CHECK(m.censored_fraction == 1.0);
  CHECK(m.censor_lower_bound == doctest::Approx(30.0));
  CHECK_FALSE(m.warnings.empty());
  opt.cap = 60;
  const auto p = estimate_R_moment(k, Int{20}, upto(0), RateFn::power(1.0), opt);
  const double obs = 1.0 - p.censored_fraction;
  const double oracle = obs * (obs > 0 ? p.truncated.mean : 0.0) + p.censored_fraction * 60.0;
  CHECK(p.censor_lower_bound == doctest::Approx(oracle));
  CHECK(p.censor_lower_bound >= p.truncated.mean * obs);
}

TEST_CASE("default caps keep R finite") {
  CHECK(default_cap(RateFn::geometric(2.0)) == 996);
  CHECK(default_cap(RateFn::power(1.0)) == 10000000);
  CHECK(std::isfinite(RateFn::geometric(2.0)(double(default_cap(RateFn::geometric(2.0))))));
}

TEST_CASE("log-log slope") {
  std::vector<double> x{1, 10, 100, 1000};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 0.4));
  CHECK(*loglog_slope(x, y) == doctest::Approx(0.4));
  std::vector<double> one{1.0};
  CHECK_FALSE(loglog_slope(one, one).has_value());
  y[1] = -1.0;  // dropped
  CHECK(*loglog_slope(x, y) == doctest::Approx(0.4));
}

TEST_CASE("report verdicts") {
  MomentReport rep;
  CHECK_NOTHROW(finish_report(rep, 0.25));
  CHECK(rep.verdict == Verdict::inconclusive);
  auto row = [](double w, double ratio, bool flagged) {
    MomentRow r;
    r.W = w;
    r.coordinate = w;
    r.bound_ratio = ratio;
    r.estimate.truncated.mean = ratio * w;
    r.estimate.flagged = flagged;
    return r;
  };
  rep.rows = {row(1, 0.5, false), row(2, 0.6, false), row(4, 0.7, false), row(8, 0.7, false)};
  finish_report(rep, 0.25);
  CHECK(rep.inner_max_ratio == doctest::Approx(0.6));
  CHECK(rep.outer_max_ratio == doctest::Approx(0.7));
  CHECK(rep.verdict == Verdict::pass);
  rep.rows.back().bound_ratio = 2.0;
  finish_report(rep, 0.25);
  CHECK(rep.verdict == Verdict::fail);
  rep.rows.back().bound_ratio = 0.7;
  rep.rows[1].estimate.flagged = true;
  finish_report(rep, 0.25);
  CHECK(rep.verdict == Verdict::inconclusive);
}

TEST_CASE("sweeps refuse inadmissible rates") {
  const BirthDeathKernel k(3, 7);
  const auto v = poly_scale(8.0);
  const auto plan = plan_from_catalog<Int>(PhiFamily::poly, 0.25, v, 0.1, 0.4, 0.5, 1e5, upto(6));
  std::vector<Int> g{10, 20, 40};
  MomentOptions opt;
  opt.replicates = 200;
  CHECK_THROWS_AS(bound_sweep(k, plan, RateFn::power(10.0), std::span<const Int>(g), opt), scope_error);
  CHECK_THROWS_AS(accessible_set_experiment(k, plan, RateFn::geometric(1.1), upto(3), std::span<const Int>(g), opt),
                  scope_error);
}

TEST_CASE("polynomial walk: the bound ratio stabilizes") {
  const BirthDeathKernel k(3, 7);
  const auto v = poly_scale(8.0);
  const auto plan = plan_from_catalog<Int>(PhiFamily::poly, 0.25, v, 0.1, 0.4, 0.5, 1e5, upto(6));
  std::vector<Int> g{10, 20, 40, 80};
  MomentOptions opt;
  opt.master_seed = 12;
  opt.replicates = 2000;
  CheckOptions check;
  check.min_W = 1000;
  const auto rep = bound_sweep(k, plan, make_R({RateFamily::polynomial, 0, 0, 0.25}), std::span<const Int>(g), opt, check);
  CHECK(rep.verdict == Verdict::pass);
  REQUIRE(rep.rows.size() == 4);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) CHECK(rep.rows[i].W > rep.rows[i - 1].W);
  for (const auto& r : rep.rows) {
    CHECK(r.bound_ratio == doctest::Approx(r.estimate.truncated.mean / (r.W + (r.in_C ? 1e5 : 0.0))));
  }
  const auto acc = accessible_set_experiment(k, plan, make_R({RateFamily::polynomial, 0, 0, 0.25}), upto(2),
                                             std::span<const Int>(g), opt, check);
  CHECK(acc.target == "{x<=c}");
  CHECK(acc.rows.size() == 4);
}

TEST_CASE("pathwise chain of inequalities") {
  const auto k = lazy_birth_death(30, 0.3, 0.5);
  SubsamplePlan<Int> plan;
  plan.n = [](const Int& x) { return x / 3 + 1; };
  plan.W = ScaleFunction<Int>::from_log([](const Int& x) { return std::log(double(x / 3 + 1)); }, "n");
  plan.C = upto(1);
  std::vector<Int> starts{0, 5, 15, 29};
  // R(t) = t with W = n: R(tau^{bar tau}) equals the W sum exactly.
  const auto ok = pathwise_subadditivity(k, plan, RateFn::power(1.0), std::span<const Int>(starts), 300, 100000, 3);
  CHECK(ok.paths == 1200);
  CHECK(ok.violations == 0);
  CHECK(std::abs(ok.min_relative_slack) < 1e-12);
  // W = 1 with two steps per skeleton move cannot dominate R(t) = t.
  plan.n = [](const Int&) { return Int{2}; };
  plan.W = ScaleFunction<Int>::constant(1.0);
  const auto bad = pathwise_subadditivity(k, plan, RateFn::power(1.0), std::span<const Int>(starts), 100, 100000, 3);
  CHECK(bad.violations == bad.paths);
  CHECK_FALSE(bad.first_violations.empty());
}
