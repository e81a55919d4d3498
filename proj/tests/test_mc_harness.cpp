#include <cmath>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "hstop/closed_form.hpp"
#include "hstop/fbp_numeric.hpp"
#include "hstop/mc_harness.hpp"

using namespace hstop;

namespace {

McConfig small(std::size_t n, double dt = 1e-2, std::uint64_t seed = 1) {
  McConfig c;
  c.n_paths = n;
  c.dt = dt;
  c.seed = seed;
  c.workers = 1;
  return c;
}

double combined_se(const McEstimate& a, const McEstimate& b) { return std::hypot(a.std_error, b.std_error); }

}  // namespace

TEST_CASE("stopping at once is worth pi d - (1 - pi) c") {
  auto spec = fixtures::hiring_spec();
  spec.prior_pi = 0.3;
  spec.payoff = HiringPayoff{1.0, 2.0, 1.0};
  const auto m = ValidatedModel::validate(spec);
  const double exact = 0.3 * 2.0 - 0.7 * 1.0;
  const auto p0 = evaluate_policy_p0(m, StopImmediately{}, small(100));
  CHECK(p0.mean == doctest::Approx(exact).epsilon(1e-14));
  CHECK(p0.std_error < 1e-14);
  CHECK(p0.tail_bound == 0.0);
  const auto full = evaluate_policy_full(m, StopImmediately{}, small(20000));
  CHECK(std::abs(full.mean - exact) < 4 * full.std_error);
}

TEST_CASE("never stopping a hire is worth nothing") {
  const auto m = fixtures::hiring();
  CHECK(evaluate_policy_full(m, NeverStop{}, small(200)).mean == 0.0);
  CHECK(evaluate_policy_p0(m, NeverStop{}, small(200)).mean == 0.0);
}

TEST_CASE("hiring threshold policy reproduces the closed-form value") {
  const auto m = fixtures::hiring();
  const auto s = hiring_solve(m);
  const Policy pol = PhiUpper{s.upper};
  const auto cfg = small(8000, 4e-3);
  const double target = value_original(s, m, m.phi());
  const double slack = discretization_allowance(m, pol, cfg.dt);
  for (const auto& e : {evaluate_policy_full(m, pol, cfg), evaluate_policy_p0(m, pol, cfg)}) {
    CHECK(std::abs(e.mean - target) <= 4 * e.std_error + e.tail_bound + slack);
    CHECK(e.tail_bound <= kDefaultTailBound);
  }
}

TEST_CASE("full-measure and P0 estimates agree for each payoff") {
  const auto seq = fixtures::seq_testing();
  const Policy band = PhiBand{0.2, 5.0};
  const auto a = evaluate_policy_full(seq, band, small(6000));
  const auto b = evaluate_policy_p0(seq, band, small(6000, 1e-2, 2));
  CHECK(std::abs(a.mean - b.mean) < 4 * combined_se(a, b));

  const auto sp = fixtures::short_position();
  const Policy up = PhiUpper{1.0};
  const auto c = evaluate_policy_full(sp, up, small(3000, 2e-2));
  const auto d = evaluate_policy_p0(sp, up, small(3000, 2e-2, 2));
  CHECK(std::abs(c.mean - d.mean) < 4 * combined_se(c, d));
}

TEST_CASE("short position never stopped matches the grid solver with a never-binding obstacle") {
  const auto m = fixtures::short_position();
  auto problem = build_lcp(m, 1e-4, 1e4, 801);
  // stopping costs more than waiting anywhere; only the far-right boundary row sees it
  problem.obstacle = [](double) { return 2.0; };
  const auto n = solve_lcp(problem);
  for (std::size_t i = 0; i + 1 < n.active.size(); ++i) CHECK_FALSE(n.active[i]);
  const double phi = m.phi();
  const double expected = m.spec().x0 * n.value_at(phi) / (1.0 + phi);
  const auto e = evaluate_policy_full(m, NeverStop{}, small(20000, 5e-2));
  CHECK(std::abs(e.mean - expected) <= 4 * e.std_error + e.tail_bound + 1e-3);
}

TEST_CASE("scan at a single threshold equals the direct estimate") {
  const auto m = fixtures::hiring();
  const double b = hiring_solve(m).upper;
  auto cfg = small(3000);
  const auto scan = optimality_scan(m, {b}, cfg);
  REQUIRE(scan.entries.size() == 1);
  const auto direct = evaluate_policy_full(m, PhiUpper{b}, cfg);
  CHECK(scan.entries[0].estimate.mean == doctest::Approx(direct.mean).epsilon(1e-12));
  CHECK(scan.entries[0].gap_to_reference == 0.0);
  CHECK(scan.reference_within_3se);
}

TEST_CASE("scan finds no threshold significantly better than the optimum") {
  const auto m = fixtures::hiring();
  const double b = hiring_solve(m).upper;
  const auto grid = log_grid(b / 4, 4 * b, 9);
  const auto scan = optimality_scan(m, grid, small(6000, 4e-3));
  CHECK(scan.entries.size() == 9);
  CHECK(scan.entries[scan.reference_index].threshold == doctest::Approx(b));
  CHECK(scan.reference_within_3se);
  for (std::size_t j = 1; j < scan.entries.size(); ++j)
    CHECK(scan.entries[j].threshold > scan.entries[j - 1].threshold);
  // the extremes of the grid are clearly worse
  CHECK(scan.entries.front().gap_to_reference < -3 * scan.entries.front().gap_to_reference_se);
  CHECK(scan.entries.back().gap_to_reference < -3 * scan.entries.back().gap_to_reference_se);
  CHECK_THROWS_AS(optimality_scan(m, {}, small(10)), InvalidArgument);
  CHECK_THROWS_AS(optimality_scan(fixtures::seq_testing(), {1.0}, small(10)), InvalidArgument);
}

TEST_CASE("results do not depend on the worker count and are reproducible") {
  const auto m = fixtures::seq_testing();
  const Policy pol = closed_form_policy(m);
  auto one = small(2000);
  auto four = one;
  four.workers = 4;
  const auto a = evaluate_policy_p0(m, pol, one);
  const auto b = evaluate_policy_p0(m, pol, four);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(evaluate_policy_p0(m, pol, one).mean == a.mean);
  auto other = one;
  other.seed = 2;
  CHECK(evaluate_policy_p0(m, pol, other).mean != a.mean);
}

TEST_CASE("an explicit horizon that is too short is rejected with the required one") {
  const auto m = fixtures::hiring();
  auto cfg = small(10, 1e-3);
  cfg.t_max = 1.0;
  cfg.max_tail_bound = 1e-4;
  try {
    evaluate_policy_full(m, PhiUpper{2.0}, cfg);
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("required t_max=9.211") != std::string::npos);
  }
  cfg.max_tail_bound.reset();
  CHECK(evaluate_policy_full(m, PhiUpper{2.0}, cfg).tail_bound == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("tail bounds and the required horizon") {
  const auto m = fixtures::hiring();
  const double t = required_t_max(m, PhiUpper{2.0}, 1e-3, 1e-4);
  CHECK(tail_bound(m, PhiUpper{2.0}, t) <= 1e-4);
  CHECK(tail_bound(m, PhiUpper{2.0}, t - 1e-3) > 1e-4);
  CHECK(std::abs(t / 1e-3 - std::round(t / 1e-3)) < 1e-9);
  CHECK(tail_bound(m, StopImmediately{}, 1.0) == 0.0);

  const auto seq = fixtures::seq_testing();
  const Policy band = closed_form_policy(seq);
  double prev = tail_bound(seq, band, 0.5);
  for (double tt : {1.0, 2.0, 4.0, 8.0}) {
    const double v = tail_bound(seq, band, tt);
    CHECK(v <= prev);
    prev = v;
  }
  CHECK(std::isinf(tail_bound(seq, NeverStop{}, 1.0)));
  CHECK_THROWS_AS(evaluate_policy_full(seq, NeverStop{}, small(10)), InvalidArgument);
}

TEST_CASE("a generic objective reproduces the built-in kernels") {
  const auto h = fixtures::hiring();
  GenericObjective hire;
  hire.g = [](double t, double, int theta) { return std::exp(-t) * (theta == 1 ? 1.0 : -1.0); };
  hire.tail_bound = [](double t) { return std::exp(-t); };
  const Policy up = PhiUpper{2.0};
  const auto cfg = small(1500);
  CHECK(evaluate_policy_full(h, hire, up, cfg).mean == doctest::Approx(evaluate_policy_full(h, up, cfg).mean).epsilon(1e-12));
  CHECK(evaluate_policy_p0(h, hire, up, cfg).mean == doctest::Approx(evaluate_policy_p0(h, up, cfg).mean).epsilon(1e-12));

  const auto sp = fixtures::short_position();
  GenericObjective cover;
  cover.g = [](double t, double x, int) { return x * std::exp(-0.05 * t); };
  cover.h = cover.g;
  cover.force_stop_at_t_max = true;
  cover.tail_bound = [&](double t) { return tail_bound(sp, up, t); };
  const auto scfg = small(500, 2e-2);
  CHECK(evaluate_policy_full(sp, cover, up, scfg).mean ==
        doctest::Approx(evaluate_policy_full(sp, up, scfg).mean).epsilon(1e-12));
  CHECK(evaluate_policy_p0(sp, cover, up, scfg).mean ==
        doctest::Approx(evaluate_policy_p0(sp, up, scfg).mean).epsilon(1e-12));

  GenericObjective empty;
  CHECK_THROWS_AS(evaluate_policy_full(h, empty, up, cfg), InvalidArgument);
  GenericObjective unbounded = hire;
  unbounded.tail_bound = nullptr;
  CHECK_THROWS_AS(evaluate_policy_full(h, unbounded, up, cfg), InvalidArgument);
}

TEST_CASE("X boundary policy matches the equivalent ratio threshold") {
  const auto m = fixtures::hiring();
  const auto s = hiring_solve(m);
  const Policy xb = XBoundary{[&](double t) { return hiring_x_boundary(s, m, t); }};
  const auto cfg = small(2000);
  const auto a = evaluate_policy_full(m, xb, cfg);
  const auto b = evaluate_policy_full(m, PhiUpper{s.upper}, cfg);
  CHECK(std::abs(a.mean - b.mean) <= 2.0 / 2000);
  CHECK_THROWS_AS(evaluate_policy_full(fixtures::short_position(), xb, cfg), InvalidArgument);
  CHECK_THROWS_AS(discretization_allowance(m, xb, 1e-3), InvalidArgument);
}

TEST_CASE("grid monitoring bias shrinks with the step") {
  const auto m = fixtures::hiring();
  const auto s = hiring_solve(m);
  const Policy pol = PhiUpper{s.upper};
  const double target = value_original(s, m, m.phi());
  CHECK(discretization_allowance(m, pol, 2.5e-3) < discretization_allowance(m, pol, 1e-2));
  for (double dt : {4e-2, 1e-2}) {
    const auto e = evaluate_policy_p0(m, pol, small(6000, dt));
    CHECK(std::abs(e.mean - target) <= 4 * e.std_error + e.tail_bound + discretization_allowance(m, pol, dt));
  }
}

TEST_CASE("policy validation") {
  CHECK_THROWS_AS(validate_policy(PhiUpper{0.0}), InvalidArgument);
  CHECK_THROWS_AS(validate_policy(PhiBand{2.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(validate_policy(XBoundary{}), InvalidArgument);
  CHECK(describe(PhiBand{0.5, 2.0}) == "phi_band(0.5,2)");
  CHECK(std::holds_alternative<StopImmediately>(closed_form_policy(fixtures::seq_testing(1e9))));
  CHECK(std::holds_alternative<PhiBand>(closed_form_policy(fixtures::seq_testing())));
  CHECK_THROWS_AS(evaluate_policy_full(fixtures::hiring(), PhiUpper{1.0}, small(0)), InvalidArgument);
  CHECK(log_grid(1.0, 100.0, 3)[1] == doctest::Approx(10.0));
}
