#include <doctest.h>

#include "subdrift/chain.hpp"
#include "subdrift/kernels.hpp"

using namespace subdrift;
using Int = std::int64_t;

namespace {

// Deterministic walk x -> x + 1.
struct Shift {
  using state_type = Int;
  Int sample(Int x, RngStream&) const { return x + 1; }
  bool contains(Int x) const { return x >= 0; }
  std::array<Transition<Int>, 1> transitions(Int x) const { return {Transition<Int>{x + 1, 1.0}}; }
};

struct Escapes {
  using state_type = Int;
  Int sample(Int, RngStream&) const { return -1; }
  bool contains(Int x) const { return x >= 0; }
};

}  // namespace

TEST_CASE("return and hitting times") {
  RngStream rng(1, 0);
  const Shift k;
  auto at5 = [](Int x) { return x == 5; };
  auto h = stopping_time(k, 5, at5, StopKind::hitting_time, 100, rng);
  CHECK(h.value == 0);
  CHECK_FALSE(h.censored);
  auto r = stopping_time(k, 2, at5, StopKind::return_time, 100, rng);
  CHECK(r.value == 3);
  auto ge = [](Int x) { return x >= 0; };
  CHECK(stopping_time(k, 0, ge, StopKind::return_time, 100, rng).value == 1);
  auto c = stopping_time(k, 6, at5, StopKind::return_time, 40, rng);
  CHECK(c.censored);
  CHECK(c.value == 40);
  CHECK_THROWS_AS(stopping_time(k, 0, at5, StopKind::return_time, 0, rng), contract_error);
}

TEST_CASE("paths stay in the state space") {
  RngStream rng(1, 0);
  CHECK(simulate_path(Shift{}, 3, 4, rng).states == std::vector<Int>{3, 4, 5, 6, 7});
  CHECK_THROWS_AS(simulate_path(Escapes{}, 0, 3, rng), state_space_error);
  CHECK_THROWS_AS(simulate_path(Shift{}, -1, 3, rng), contract_error);
}

TEST_CASE("skeleton times follow the schedule") {
  RngStream rng(1, 0);
  NFn<Int> n = [](const Int& x) { return x + 1; };
  const auto pts = subsampled_iterates(Shift{}, 0, n, 4, rng);
  // 0 -> 1 -> 3 -> 7 -> 15
  std::vector<std::uint64_t> times;
  for (const auto& p : pts) {
    times.push_back(p.time);
    CHECK(p.state == static_cast<Int>(p.time));
  }
  CHECK(times == std::vector<std::uint64_t>{0, 1, 3, 7, 15});
  NFn<Int> zero = [](const Int&) { return Int{0}; };
  CHECK_THROWS_AS(subsampled_iterates(Shift{}, 0, zero, 2, rng), contract_error);
}

TEST_CASE("subsampled return is at or after the raw return") {
  RngStream rng(1, 0);
  NFn<Int> three = [](const Int&) { return Int{3}; };
  auto in_c = [](Int x) { return x % 5 == 0; };
  std::vector<Int> visited;
  const auto r = subsampled_return_time(Shift{}, 1, three, in_c, 1000, rng,
                                        [&](const Int& x) { visited.push_back(x); });
  // skeleton 1, 4, 7, 10: returns at k = 3 after 9 steps; raw path hits 5 at t = 4.
  CHECK(r.index.value == 3);
  CHECK(r.steps == 9);
  REQUIRE(r.raw_return);
  CHECK(*r.raw_return == 4);
  CHECK(visited == std::vector<Int>{1, 4, 7});
  const auto c = subsampled_return_time(Shift{}, 1, three, [](Int) { return false; }, 10, rng);
  CHECK(c.censored());
  CHECK(c.index.value == 3);
}

TEST_CASE("exact expectation agrees with matrix powers") {
  Eigen::MatrixXd p(3, 3);
  p << 0.5, 0.5, 0.0, 0.25, 0.5, 0.25, 0.0, 0.5, 0.5;
  const FiniteKernel k(p);
  Eigen::Vector3d f(1.0, 4.0, 9.0);
  const Eigen::MatrixXd p7 = matrix_power(p, 7);
  for (Int x = 0; x < 3; ++x) {
    const double e = exact_expectation(k, x, 7, [&](Int y) { return f(y); });
    CHECK(e == doctest::Approx(p7.row(x).dot(f)).epsilon(1e-13));
  }
  // Running sums: E_0[sum_{j<3} f(X_j)] = sum_j (P^j f)(0)
  const double run = exact_path_expectation(k, Int{0}, 3, [](Int) { return 0.0; },
                                            [&](Int, Int y) { return f(y); });
  double oracle = 0.0;
  for (int j = 0; j < 3; ++j) oracle += matrix_power(p, j).row(0).dot(f);
  CHECK(run == doctest::Approx(oracle).epsilon(1e-13));
}

TEST_CASE("step distribution merges mass") {
  const Shift k;
  Distribution<Int> d{{0, 0.5}, {1, 0.5}};
  const auto n = step_distribution(k, d);
  REQUIRE(n.size() == 2);
  CHECK(n[0].to == 1);
  CHECK(n[1].prob == 0.5);
  const auto lazy = lazy_birth_death(4, 0.5, 0.5);
  const auto m = step_distribution(lazy, Distribution<Int>{{1, 1.0}});
  double total = 0.0;
  for (const auto& t : m) total += t.prob;
  CHECK(total == doctest::Approx(1.0));
}
