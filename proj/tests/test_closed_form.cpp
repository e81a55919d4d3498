#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "hstop/closed_form.hpp"
#include "hstop/fbp_numeric.hpp"
#include "hstop/filter.hpp"
#include "hstop/simulate.hpp"

using namespace hstop;

namespace {

// Textbook formula; fine for these well-conditioned coefficients.
double naive_root(double a, double b, double c) { return (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a); }

template <class F>
double bisect(F f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((f(lo) < 0) == (f(mid) < 0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return out;
}

double fd_slope(const FreeBoundarySolution& s, double phi, double h) {
  return (s.value_phi(phi + h) - s.value_phi(phi - h)) / (2 * h);
}

}  // namespace

TEST_CASE("hiring fixture: golden ratio root and threshold") {
  const auto m = fixtures::hiring();
  const auto s = hiring_solve(m);
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK(*s.gamma_root == doctest::Approx(golden).epsilon(1e-14));
  CHECK(s.upper == doctest::Approx(golden * golden).epsilon(1e-14));
  CHECK(std::abs(*s.gamma_root - 1.618034) < 1e-6);
  CHECK(std::abs(s.upper - 2.618034) < 1e-6);
}

TEST_CASE("hiring root against the naive quadratic formula across parameters") {
  for (double l0 : {0.0, 0.3, 2.0})
    for (double l1 : {0.0, 0.5})
      for (double r : {0.05, 1.0}) {
        auto spec = fixtures::hiring_spec();
        spec.lambda0 = l0;
        spec.lambda1 = l1;
        spec.payoff = HiringPayoff{2.0, 3.0, r};
        const auto m = ValidatedModel::validate(spec);
        const double w2 = 2.0;  // omega^2 for the fixture drift gap and sigma
        const double g = naive_root(w2 / 2, (l0 - l1) - w2 / 2, -(r + l0));
        const auto s = hiring_solve(m);
        CHECK(*s.gamma_root == doctest::Approx(g).epsilon(1e-12));
        CHECK(s.upper == doctest::Approx(2.0 * g / (3.0 * (g - 1.0))).epsilon(1e-12));
      }
}

TEST_CASE("hiring value: continuity, smooth fit, zero at zero, limit of V") {
  const auto m = fixtures::hiring();
  const auto s = hiring_solve(m);
  const double b = s.upper, eps = 1e-7;
  CHECK(s.value_phi(b * (1 - 1e-12)) == doctest::Approx(s.obstacle(b)).epsilon(1e-10));
  CHECK(fd_slope(s, b * (1 - 1e-4), 1e-6) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(s.value_phi(0.0) == 0.0);
  CHECK(value_original(s, m, 0.0) == 0.0);
  CHECK(value_original(s, m, 1e12) == doctest::Approx(1.0).epsilon(1e-9));
  for (double phi : logspace(1e-3, 1e3, 301)) {
    CHECK(s.value_phi(phi) >= s.obstacle(phi) - 1e-12);
    CHECK(s.value_phi(phi + eps * phi) >= s.value_phi(phi));
  }
  CHECK(ode_relative_residual(s, m) < 1e-12);
}

TEST_CASE("hiring X boundary is the level set of the horizon-adjusted ratio") {
  auto spec = fixtures::hiring_spec();
  spec.lambda0 = 0.5;
  spec.lambda1 = 0.2;
  spec.x0 = 0.3;
  const auto m = ValidatedModel::validate(spec);
  const auto s = hiring_solve(m);
  const ExplicitLogRatio ratio(m.dynamics());
  for (double t : {0.0, 0.5, 2.0, 7.0}) {
    const double x = hiring_x_boundary(s, m, t);
    CHECK(ratio.log_phi_circ(t, x) == doctest::Approx(std::log(s.upper)).epsilon(1e-12));
  }
  // On a path the two stopping rules fire on the same step.
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto p = simulate_p0(m.dynamics(), 5.0, 0.01, RngStream{12, i});
    std::ptrdiff_t by_phi = -1, by_x = -1;
    for (std::size_t k = 0; k < p.x.size(); ++k) {
      if (by_phi < 0 && p.phi_circ[k] >= s.upper) by_phi = static_cast<std::ptrdiff_t>(k);
      if (by_x < 0 && p.x[k] >= hiring_x_boundary(s, m, p.t_grid[k])) by_x = static_cast<std::ptrdiff_t>(k);
    }
    CHECK(by_phi == by_x);
  }
  CHECK_THROWS_AS(hiring_x_boundary(short_solve(fixtures::short_position()), m, 0.0), InvalidArgument);
}

TEST_CASE("short position root by bisection and threshold conditions") {
  const auto m = fixtures::short_position();
  const auto s = short_solve(m);
  const double w2 = 0.25;  // (0.1/0.2)^2
  const double g = bisect([&](double x) { return w2 / 2 * x * (x - 1) + (0.1 + 0.1) * x - (0.05 + 0.1); }, 0.0, 1.0);
  CHECK(*s.gamma_root == doctest::Approx(g).epsilon(1e-13));
  const double B = s.upper;
  CHECK(std::abs(B - 1.696485) < 1e-5);
  CHECK(s.value_phi(B * (1 - 1e-12)) == doctest::Approx(1.0 + B).epsilon(1e-10));
  CHECK(fd_slope(s, B * (1 - 1e-4), 1e-6) == doctest::Approx(1.0).epsilon(1e-3));
  for (double phi : logspace(1e-3, 1e3, 301)) CHECK(s.value_phi(phi) <= 1.0 + phi + 1e-12);
  CHECK(ode_relative_residual(s, m) < 1e-12);
  // value at zero: only the recall cost remains
  CHECK(s.value_phi(0.0) == doctest::Approx(0.1 / 0.15));
}

TEST_CASE("short position threshold agrees with the grid solver") {
  const auto m = fixtures::short_position();
  const auto s = short_solve(m);
  const auto n = solve_lcp(build_lcp(m));
  REQUIRE(n.boundary_estimates.size() == 1);
  CHECK(std::abs(std::log(n.boundary_estimates[0] / s.upper)) <= 2 * n.log_step);
  for (double phi : logspace(1e-2, 1e2, 41))
    CHECK(std::abs(n.value_at(phi) - s.value_phi(phi)) <= 1e-3 * std::abs(s.value_phi(phi)));
}

TEST_CASE("sequential test: thresholds, residuals and grid agreement") {
  const auto m = fixtures::seq_testing();
  const auto s = seqtest_solve(m);
  REQUIRE(s.lower);
  CHECK(*s.lower < 1.0);
  CHECK(s.upper > 1.0);
  CHECK(std::abs(*s.lower - 0.105471) < 1e-5);
  CHECK(std::abs(s.upper - 13.5001) < 1e-3);
  CHECK(seqtest_residuals(s).max_abs() < 1e-8);
  CHECK(ode_relative_residual(s, m) < 1e-8);

  const auto n = solve_lcp(build_lcp(m));
  REQUIRE(n.boundary_estimates.size() == 2);
  CHECK(std::abs(std::log(n.boundary_estimates[0] / *s.lower)) <= 2 * n.log_step);
  CHECK(std::abs(std::log(n.boundary_estimates[1] / s.upper)) <= 2 * n.log_step);
}

TEST_CASE("sequential test value is concave and below the obstacle") {
  const auto s = seqtest_solve(fixtures::seq_testing());
  const auto grid = logspace(1e-3, 1e3, 2001);
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double h = 1e-4 * grid[i];
    const double second = s.value_phi(grid[i] + h) - 2 * s.value_phi(grid[i]) + s.value_phi(grid[i] - h);
    CHECK(second <= 1e-12);
    CHECK(s.value_phi(grid[i]) <= std::min(grid[i], 1.0) + 1e-10);
  }
}

TEST_CASE("sequential test: costlier observation narrows the region, huge cost empties it") {
  double prev_a = 0.0, prev_b = 1e9;
  for (double c : {0.1, 1.0, 10.0}) {
    const auto s = seqtest_solve(fixtures::seq_testing(c));
    CHECK(*s.lower > prev_a);
    CHECK(s.upper < prev_b);
    prev_a = *s.lower;
    prev_b = s.upper;
  }
  const auto narrow = seqtest_solve(fixtures::seq_testing(10.0));
  CHECK(narrow.upper / *narrow.lower < 1.05);

  const auto m = fixtures::seq_testing(1e9);
  try {
    seqtest_solve(m);
    FAIL("expected DegenerateRegion");
  } catch (const DegenerateRegion& e) {
    const auto& imm = e.immediate_stop();
    CHECK(imm.degenerate);
    for (double phi : {0.01, 0.5, 1.0, 3.0}) CHECK(imm.value_phi(phi) == std::min(phi, 1.0));
  }
  CHECK_THROWS_AS(solve(m), SolverError);
}

TEST_CASE("policy values never beat the optimum") {
  const auto hm = fixtures::hiring();
  const auto hs = hiring_solve(hm);
  for (double b : {1.0, 2.0, 2.618, 3.5, 8.0})
    for (double phi : {0.2, 1.0, 2.0}) CHECK(threshold_policy_value(hm, std::nullopt, b, phi) <= hs.value_phi(phi) + 1e-12);
  CHECK(threshold_policy_value(hm, std::nullopt, hs.upper, 1.0) == doctest::Approx(hs.value_phi(1.0)).epsilon(1e-13));

  const auto sm = fixtures::short_position();
  const auto ss = short_solve(sm);
  for (double b : {0.5, 1.0, 1.7, 3.0})
    CHECK(threshold_policy_value(sm, std::nullopt, b, 0.25) >= ss.value_phi(0.25) - 1e-12);

  const auto qm = fixtures::seq_testing();
  const auto qs = seqtest_solve(qm);
  CHECK(threshold_policy_value(qm, *qs.lower, qs.upper, 1.0) == doctest::Approx(qs.value_phi(1.0)).epsilon(1e-10));
  CHECK(threshold_policy_value(qm, 0.2, 5.0, 1.0) >= qs.value_phi(1.0) - 1e-12);
  CHECK_THROWS_AS(threshold_policy_value(qm, std::nullopt, 5.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(threshold_policy_value(hm, 0.5, 5.0, 1.0), InvalidArgument);
}

TEST_CASE("quadratic helper rejects the wrong signs") {
  CHECK(positive_root({1.0, 0.0, -4.0}) == doctest::Approx(2.0));
  CHECK(positive_root({1.0, 1e8, -1.0}) == doctest::Approx(1e-8).epsilon(1e-10));
  CHECK_THROWS_AS(positive_root({1.0, 0.0, 4.0}), SolverError);
  CHECK_THROWS_AS(positive_root({-1.0, 0.0, -4.0}), SolverError);
  CHECK_THROWS_AS(hiring_solve(fixtures::seq_testing()), InvalidArgument);
}
