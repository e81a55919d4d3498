#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "hstop/filter.hpp"
#include "hstop/simulate.hpp"

using namespace hstop;

namespace {

PathBundle path_from_x(std::vector<double> x, double dt) {
  PathBundle p;
  p.x = std::move(x);
  for (std::size_t k = 0; k < p.x.size(); ++k) p.t_grid.push_back(dt * static_cast<double>(k));
  return p;
}

// Posterior odds from the product of per-increment Gaussian likelihood ratios.
double discrete_bayes_log_odds(const Dynamics& d, const PathBundle& p, std::size_t upto) {
  double log_odds = std::log(d.prior_pi / (1.0 - d.prior_pi));
  for (std::size_t k = 0; k < upto; ++k) {
    const double dt = p.t_grid[k + 1] - p.t_grid[k];
    const double dy = d.coordinate(p.x[k + 1]) - d.coordinate(p.x[k]);
    const double v = d.sigma * d.sigma * dt;
    const double e1 = dy - d.coordinate_drift(1) * dt;
    const double e0 = dy - d.coordinate_drift(0) * dt;
    log_odds += (e0 * e0 - e1 * e1) / (2.0 * v);
  }
  return log_odds;
}

}  // namespace

TEST_CASE("observations on the midline leave the ratio at one") {
  Dynamics d;
  d.mu0 = -1.0;
  d.mu1 = 3.0;
  d.sigma = 2.0;
  d.prior_pi = 0.5;
  std::vector<double> x;
  for (int k = 0; k <= 50; ++k) x.push_back(1.0 * 0.02 * k);
  const auto f = filter_explicit(d, path_from_x(x, 0.02));
  for (double v : f.phi_t) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("no drift gap means no learning") {
  Dynamics d;
  d.mu0 = d.mu1 = 0.4;
  d.prior_pi = 0.3;
  const auto p = simulate_x_given_theta(d, 0, 1.0, 0.01, RngStream{1, 1});
  const auto f = filter_explicit(d, p);
  const auto s = filter_sde(d, p);
  for (std::size_t k = 0; k < p.x.size(); ++k) {
    CHECK(f.pi_t[k] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(s.pi_t[k] == doctest::Approx(0.3).epsilon(1e-12));
  }
}

TEST_CASE("explicit ratio equals the discrete Bayes update exactly") {
  for (const auto& m : {fixtures::hiring(), fixtures::short_position(), fixtures::seq_testing()}) {
    const auto& d = m.dynamics();
    const auto p = simulate_ppi(d, 3.0, 0.01, RngStream{21, 4});
    const auto f = filter_explicit(d, p);
    for (std::size_t k = 0; k < p.x.size(); k += 37) {
      const double lo = discrete_bayes_log_odds(d, p, k);
      CHECK(std::log(f.phi_t[k]) == doctest::Approx(lo).epsilon(1e-9).scale(1.0));
      CHECK(f.pi_t[k] == doctest::Approx(1.0 / (1.0 + std::exp(-lo))).epsilon(1e-12));
    }
  }
}

TEST_CASE("horizon adjustment identities") {
  const auto m = fixtures::seq_testing();
  const auto& d = m.dynamics();
  const auto p = simulate_ppi(d, 2.0, 0.01, RngStream{2, 9});
  const auto f = filter_explicit(d, p);
  for (std::size_t k = 0; k < p.x.size(); ++k) {
    const double t = p.t_grid[k];
    CHECK(f.phi_circ_t[k] == doctest::Approx(f.phi_t[k] * survival(m, 1, t) / survival(m, 0, t)).epsilon(1e-12));
    CHECK(f.phi_t[k] == doctest::Approx(f.pi_t[k] / (1.0 - f.pi_t[k])).epsilon(1e-10));
    CHECK(f.pi_circ_t[k] == doctest::Approx(f.phi_circ_t[k] / (1.0 + f.phi_circ_t[k])).epsilon(1e-12));
  }
  CHECK(f.pi_t[0] == d.prior_pi);
}

TEST_CASE("Euler filter starts at the prior and converges to the explicit one") {
  const auto m = fixtures::hiring();
  const auto& d = m.dynamics();
  const double fine = 1.0 / 1024.0;
  double err_coarse = 0.0, err_fine = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto p = simulate_x_given_theta(d, static_cast<int>(i % 2), 1.0, fine, RngStream{8, i});
    const double exact = filter_explicit(d, p).pi_t.back();
    auto sub = [&](std::size_t stride) {
      std::vector<double> x;
      for (std::size_t k = 0; k < p.x.size(); k += stride) x.push_back(p.x[k]);
      return filter_sde(d, path_from_x(x, fine * static_cast<double>(stride))).pi_t;
    };
    const auto coarse = sub(64);
    CHECK(coarse.front() == d.prior_pi);
    err_coarse += std::abs(coarse.back() - exact);
    err_fine += std::abs(sub(16).back() - exact);
  }
  // dt ratio 4; strong order 0.4 needs an error ratio of at least 4^0.4
  CHECK(err_coarse / err_fine >= std::pow(4.0, 0.4));
  CHECK(err_fine / 200.0 < 0.05);
}

TEST_CASE("posterior concentrates on the true state") {
  const auto m = fixtures::hiring();
  for (int theta : {0, 1}) {
    const auto p = simulate_x_given_theta(m.dynamics(), theta, 40.0, 0.01, RngStream{6, 1});
    CHECK(std::abs(filter_explicit(m.dynamics(), p).pi_t.back() - theta) < 1e-6);
  }
}

TEST_CASE("change of measure to P0 carries the density (1+Phi_T)/(1+phi)") {
  const auto m = fixtures::seq_testing();
  const auto& d = m.dynamics();
  const double phi = d.phi();
  const double T = 1.0, dt = 0.05;
  const std::uint64_t n = 40000;
  fixtures::Sample direct, weighted, inverted;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto full = simulate_ppi(d, T, dt, RngStream{31, i});
    direct.add(full.x.back() > 0.5 ? 1.0 : 0.0);
    const auto ref = simulate_p0(d, T, dt, RngStream{32, i});
    const double phi_t = ref.phi_circ.back() * std::exp(-d.f_ratio_rate() * T);
    weighted.add((ref.x.back() > 0.5 ? 1.0 : 0.0) * (1.0 + phi_t) / (1.0 + phi));
    inverted.add((1.0 + phi) / (1.0 + phi_t));
  }
  const double se = std::hypot(direct.se(), weighted.se());
  CHECK(std::abs(direct.mean() - weighted.mean()) < 4 * se);
  // the reciprocal density is not a density under P0
  CHECK(inverted.mean() - 1.0 > 6 * inverted.se());
}

TEST_CASE("degenerate priors and malformed paths are rejected") {
  auto s = fixtures::hiring_spec();
  s.prior_pi = 1.0;
  const auto one = ValidatedModel::validate(s);
  const auto p = path_from_x({0.0, 0.1}, 0.1);
  CHECK_THROWS_AS(filter_explicit(one.dynamics(), p), DegeneratePrior);
  s.prior_pi = 0.0;
  CHECK_THROWS_AS(filter_sde(ValidatedModel::validate(s).dynamics(), p), DegeneratePrior);
  PathBundle bad;
  CHECK_THROWS_AS(filter_explicit(fixtures::hiring().dynamics(), bad), InvalidArgument);
}
