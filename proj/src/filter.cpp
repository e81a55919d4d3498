#include "hstop/filter.hpp"

#include <algorithm>
#include <cmath>

namespace hstop {

namespace {

void require_interior_prior(const Dynamics& dyn) {
  if (!(dyn.prior_pi > 0.0 && dyn.prior_pi < 1.0))
    throw DegeneratePrior("filter requires prior_pi in (0,1); the posterior is constant otherwise");
}

void require_path(const PathBundle& path) {
  if (path.x.empty() || path.x.size() != path.t_grid.size())
    throw InvalidArgument("path must have matching, non-empty t and x arrays");
}

FilterPath with_grid(const PathBundle& path) {
  FilterPath out;
  out.t_grid = path.t_grid;
  const std::size_t n = path.t_grid.size();
  out.pi_t.resize(n);
  out.phi_t.resize(n);
  out.phi_circ_t.resize(n);
  out.pi_circ_t.resize(n);
  return out;
}

}  // namespace

ExplicitLogRatio::ExplicitLogRatio(const Dynamics& dyn)
    : log_phi0_(std::log(dyn.phi())),
      y0_(dyn.coordinate(dyn.x0)),
      slope_(dyn.omega() / dyn.sigma),
      decay_(dyn.omega() * (dyn.coordinate_drift(0) + dyn.coordinate_drift(1)) / (2.0 * dyn.sigma)),
      rate_(dyn.f_ratio_rate()) {}

FilterPath filter_explicit(const Dynamics& dyn, const PathBundle& path) {
  require_interior_prior(dyn);
  require_path(path);
  const ExplicitLogRatio ratio(dyn);
  FilterPath out = with_grid(path);
  for (std::size_t k = 0; k < path.x.size(); ++k) {
    const double t = path.t_grid[k];
    const double log_phi = ratio.log_phi(t, dyn.coordinate(path.x[k]));
    const double log_phi_circ = log_phi + dyn.f_ratio_rate() * t;
    out.phi_t[k] = std::exp(log_phi);
    out.pi_t[k] = 1.0 / (1.0 + std::exp(-log_phi));
    out.phi_circ_t[k] = std::exp(log_phi_circ);
    out.pi_circ_t[k] = 1.0 / (1.0 + std::exp(-log_phi_circ));
  }
  out.pi_t[0] = dyn.prior_pi;
  return out;
}

FilterPath filter_sde(const Dynamics& dyn, const PathBundle& path) {
  require_interior_prior(dyn);
  require_path(path);
  const double omega = dyn.omega();
  const double m0 = dyn.coordinate_drift(0);
  const double m1 = dyn.coordinate_drift(1);
  const double rate = dyn.f_ratio_rate();

  FilterPath out = with_grid(path);
  double pi = dyn.prior_pi;
  double y = dyn.coordinate(path.x[0]);
  for (std::size_t k = 0;; ++k) {
    const double t = path.t_grid[k];
    const double phi = pi / (1.0 - pi);
    out.pi_t[k] = pi;
    out.phi_t[k] = phi;
    out.phi_circ_t[k] = std::exp(rate * t) * phi;
    out.pi_circ_t[k] = out.phi_circ_t[k] / (1.0 + out.phi_circ_t[k]);
    if (k + 1 == path.x.size()) break;

    const double dt = path.t_grid[k + 1] - t;
    const double y_next = dyn.coordinate(path.x[k + 1]);
    const double innovation = (y_next - y - (m0 + (m1 - m0) * pi) * dt) / dyn.sigma;
    pi += omega * pi * (1.0 - pi) * innovation;
    pi = std::clamp(pi, kFilterClamp, 1.0 - kFilterClamp);
    y = y_next;
  }
  return out;
}

}  // namespace hstop
