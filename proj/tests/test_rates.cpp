#include <doctest.h>

#include <cmath>

#include "subdrift/rates.hpp"

using namespace subdrift;
using Int = std::int64_t;

namespace {

Int brute_inverse(const RateSeq& r, double t) {
  if (t <= 0) return 0;
  Int k = 0;
  while (r(k) < t) ++k;
  return k;
}

std::vector<Int> states(Int hi) {
  std::vector<Int> g;
  for (Int x = 0; x <= hi; x = x < 20 ? x + 1 : x * 3 / 2) g.push_back(x);
  return g;
}

ScaleFunction<Int> power_scale(double e, double shift = 1.0) {
  return ScaleFunction<Int>::from_log(
      [e, shift](const Int& x) { return e * std::log(double(x) + shift); }, "(x+s)^e");
}

}  // namespace

TEST_CASE("generalized inverse matches a linear scan") {
  const std::vector<RateSeq> seqs{RateSeq::linear(), RateSeq::linear(2.5), RateSeq::polynomial(0.5),
                                  RateSeq::polynomial(2.0), RateSeq::log_power(1.5)};
  for (const auto& r : seqs) {
    for (double t : {-1.0, 0.0, 0.3, 1.0, 1.0000001, 2.0, 7.5, 40.0, 333.3}) {
      if (r.family() == SeqFamily::log_power && t > 12) continue;
      CHECK_MESSAGE(gen_inverse(r, t) == brute_inverse(r, t), r.label() << " t=" << t);
    }
  }
  CHECK(gen_inverse(RateSeq::log_power(1.0), 5.0) == brute_inverse(RateSeq::log_power(1.0), 5.0));
  CHECK(gen_inverse(RateSeq::constant(3.0), 2.0) == 0);
  CHECK_THROWS_AS(gen_inverse(RateSeq::constant(3.0), 4.0), contract_error);
}

TEST_CASE("rate functions and their inverses") {
  const std::vector<RateFn> rs{RateFn::geometric(2.0), RateFn::subgeometric(0.7, 0.5), RateFn::power(3.0),
                               RateFn::power(0.25), RateFn::logarithmic(2.0)};
  for (const auto& r : rs) {
    for (double t : {0.5, 1.0, 3.0, 17.0, 250.0}) {
      CHECK_MESSAGE(r.inverse(r(t)) == doctest::Approx(t).epsilon(1e-9), r.label());
      CHECK(r.inverse_log(r.log_value(t)) == doctest::Approx(t).epsilon(1e-9));
    }
  }
  CHECK(RateFn::geometric(2.0)(10.0) == doctest::Approx(1024.0));
  CHECK(RateFn::subgeometric(0.7, 0.5)(8.0) == doctest::Approx(std::exp(0.7 * 4.0)));
  CHECK(RateFn::logarithmic(2.0)(3.0) == doctest::Approx(std::pow(std::log(std::exp(1.0) + 3.0), 2.0)));
  // polynomial family by alpha: exponent (1 - alpha)/alpha
  const auto p = make_R({RateFamily::polynomial, 0.0, 0.0, 0.25});
  CHECK(p(2.0) == doctest::Approx(8.0));
  CHECK_THROWS_AS(make_R({RateFamily::polynomial, 0.0, 0.0, 1.5}), contract_error);
  CHECK_THROWS_AS(RateFn::geometric(1.0), contract_error);
  CHECK(RateFn::geometric(1.5).is_subgeometric() == false);
  CHECK(RateFn::power(2.0).is_subgeometric());
  // large arguments stay finite in log space
  CHECK(std::isfinite(RateFn::geometric(10.0).log_value(1e6)));
}

TEST_CASE("shape tests") {
  CheckOptions opt;
  CHECK(ratio_nonincreasing(RateFn::power(0.5), 1, 1e9, opt));
  CHECK(ratio_nonincreasing(RateFn::logarithmic(1.0), 1, 1e9, opt));
  CHECK_FALSE(ratio_nonincreasing(RateFn::power(2.0), 1, 1e9, opt));
  CHECK(convex_logconcave_derivative(RateFn::geometric(3.0), 0.1, 100, opt));
  CHECK(convex_logconcave_derivative(RateFn::power(3.0), 0.1, 100, opt));
  CHECK_FALSE(convex_logconcave_derivative(RateFn::power(0.5), 0.1, 100, opt));
}

TEST_CASE("geometric rate with one-step schedule has zero case (ii) margin") {
  const double beta = 0.25;
  const auto g = states(100000);
  NFn<Int> one = [](const Int&) { return Int{1}; };
  const auto w = power_scale(2.0);
  const auto rep = check_case_ii(RateFn::geometric(1.0 / beta), one, w, beta, std::span<const Int>(g));
  CHECK(rep.pass);
  for (const auto& p : rep.points) CHECK(std::abs(p.margin) < 1e-9);
  // kappa strictly inside (1, 1/beta) leaves slack; beyond 1/beta it fails.
  const auto inner = check_case_ii(RateFn::geometric(2.0), one, w, beta, std::span<const Int>(g));
  CHECK(inner.pass);
  for (const auto& p : inner.points) CHECK(p.margin == doctest::Approx(1.0).epsilon(1e-9));
  const auto outer = check_case_ii(RateFn::geometric(8.0), one, w, beta, std::span<const Int>(g));
  CHECK_FALSE(outer.pass);
  CHECK(outer.violations == g.size());
}

TEST_CASE("polynomial catalog pair passes case (ii) above a threshold") {
  const double alpha = 0.25, beta = 0.5, c_prime = 0.1;
  const auto v = power_scale(2.0);
  const auto pair = catalog_pair_from_phi(PhiFamily::poly, alpha, v, c_prime);
  const auto g = states(10000000);
  CheckOptions opt;
  opt.min_W = 1e4;
  const auto r = make_R({RateFamily::polynomial, 0.0, 0.0, alpha});
  const auto rep = check_case_ii(r, pair.n, pair.W, beta, std::span<const Int>(g), opt);
  CHECK(rep.pass);
  // Oracle: W^{1/3} (1 - beta^{1/3}) - ceil(c' V^{1/4}) with V = (x+1)^2.
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double V = std::pow(double(g[i]) + 1, 2.0);
    const double oracle =
        std::pow(std::pow(V, 0.75), 1.0 / 3.0) * (1 - std::cbrt(beta)) - std::ceil(c_prime * std::pow(V, 0.25) - 1e-9);
    CHECK(rep.points[i].margin == doctest::Approx(oracle).epsilon(1e-8));
  }
  // Below the threshold the ceiling makes it fail.
  opt.min_W = 1.0;
  CHECK_FALSE(check_case_ii(r, pair.n, pair.W, beta, std::span<const Int>(g), opt).pass);
}

TEST_CASE("logarithmic catalog pair passes case (i)") {
  const double alpha = 0.5;
  const auto v = power_scale(2.0, 3.0);
  const auto pair = catalog_pair_from_phi(PhiFamily::log_power, alpha, v, 1.0);
  const auto g = states(10000000);
  const auto rep = check_case_i(RateFn::logarithmic(alpha), pair.n, pair.W, std::span<const Int>(g));
  CHECK(rep.pass);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double lv = 2.0 * std::log(double(g[i]) + 3.0);
    const double n = std::ceil(std::exp(lv) / std::pow(1 + lv, alpha) - 1e-9);
    const double oracle = alpha * std::log(1 + lv) - alpha * std::log(std::log(std::exp(1.0) + n));
    CHECK(rep.points[i].margin == doctest::Approx(oracle).epsilon(1e-9));
  }
  // a rate growing faster than t breaks the shape condition
  CHECK_FALSE(check_case_i(RateFn::power(2.0), pair.n, pair.W, std::span<const Int>(g)).pass);
}

TEST_CASE("catalog pairs") {
  const auto v = power_scale(4.0);
  const auto poly = catalog_pair_from_phi(PhiFamily::poly, 0.25, v, 2.0);
  CHECK(poly.n(Int{15}) == 32);  // 2 (16^4)^{1/4}
  CHECK(poly.W(Int{1}) == doctest::Approx(std::pow(16.0, 0.75)));
  const auto nl = catalog_pair_from_phi(PhiFamily::near_linear, 1.0, v, 1.0);
  const double lv = 4.0 * std::log(10.0);
  CHECK(nl.W(Int{9}) == doctest::Approx(std::exp(lv) / (1 + lv)));
  CHECK(nl.n(Int{9}) == static_cast<Int>(std::ceil(1 + lv)));
  CHECK_THROWS_AS(catalog_pair_from_phi(PhiFamily::poly, 1.0, v), contract_error);
  CHECK_THROWS_AS(catalog_pair_from_phi(PhiFamily::poly, 0.5, v, 0.0), contract_error);
}
