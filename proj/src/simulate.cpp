#include "hstop/simulate.hpp"

#include <string>

namespace hstop {

TimeGrid TimeGrid::make(double t_max, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidArgument("T must be positive");
  const double ratio = t_max / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-6 * std::max(1.0, ratio))
    throw InvalidArgument("T/dt must be an integer (T=" + std::to_string(t_max) + ", dt=" + std::to_string(dt) + ")");
  if (steps < 1.0) throw InvalidArgument("T must be at least one step");
  return TimeGrid{dt, static_cast<std::size_t>(steps)};
}

Nature sample_nature(const Dynamics& dyn, RngStream rng) {
  UniformSource uniform(rng);
  Nature n;
  // uniform() lies in (0,1]; theta = 1 with probability pi exactly.
  n.theta = uniform() <= dyn.prior_pi ? 1 : 0;
  n.gamma = dyn.horizon(n.theta).sample(uniform());
  return n;
}

namespace {

template <class NextNormal>
PathBundle x_path(const Dynamics& dyn, int theta, const TimeGrid& grid, NextNormal&& next) {
  PathBundle out;
  out.measure = Measure::Ppi;
  out.theta = theta;
  out.t_grid.resize(grid.steps + 1);
  out.x.resize(grid.steps + 1);
  out.normals.resize(grid.steps);

  const XStepper stepper(dyn, theta, grid.dt);
  double y = dyn.coordinate(dyn.x0);
  out.t_grid[0] = 0.0;
  out.x[0] = dyn.x0;
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double z = next(k);
    out.normals[k] = z;
    y = stepper.step_coordinate(y, z);
    out.t_grid[k + 1] = grid.time(k + 1);
    out.x[k + 1] = stepper.to_x(y);
  }
  return out;
}

template <class NextNormal>
PathBundle p0_path(const Dynamics& dyn, const TimeGrid& grid, NextNormal&& next) {
  const double phi = dyn.phi();
  PathBundle out = x_path(dyn, 0, grid, next);
  out.measure = Measure::P0;
  out.theta.reset();

  const double omega = dyn.omega();
  const double log_drift = -0.5 * omega * omega * grid.dt;
  const double log_vol = omega * std::sqrt(grid.dt);
  const double rate = dyn.f_ratio_rate();

  out.phi_circ.resize(grid.steps + 1);
  out.phi_circ[0] = phi;
  if (phi == 0.0) return out;  // absorbed at zero
  double log_phi = std::log(phi);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    log_phi += log_drift + log_vol * out.normals[k];
    out.phi_circ[k + 1] = std::exp(log_phi + rate * out.t_grid[k + 1]);
  }
  return out;
}

void require_length(std::span<const double> normals, const TimeGrid& grid) {
  if (normals.size() != grid.steps)
    throw InvalidArgument("expected " + std::to_string(grid.steps) + " normals, got " + std::to_string(normals.size()));
}

}  // namespace

PathBundle simulate_x_given_theta(const Dynamics& dyn, int theta, double t_max, double dt, RngStream rng) {
  if (theta != 0 && theta != 1) throw InvalidArgument("theta must be 0 or 1");
  const auto grid = TimeGrid::make(t_max, dt);
  NormalSource normal(rng);
  return x_path(dyn, theta, grid, [&](std::size_t) { return normal(); });
}

PathBundle simulate_x_given_theta(const Dynamics& dyn, int theta, double t_max, double dt,
                                  std::span<const double> normals) {
  if (theta != 0 && theta != 1) throw InvalidArgument("theta must be 0 or 1");
  const auto grid = TimeGrid::make(t_max, dt);
  require_length(normals, grid);
  return x_path(dyn, theta, grid, [&](std::size_t k) { return normals[k]; });
}

PathBundle simulate_ppi(const Dynamics& dyn, double t_max, double dt, RngStream rng) {
  const Nature nature = sample_nature(dyn, rng);
  PathBundle out = simulate_x_given_theta(dyn, nature.theta, t_max, dt, rng);
  out.gamma = nature.gamma;
  return out;
}

PathBundle simulate_p0(const Dynamics& dyn, double t_max, double dt, RngStream rng) {
  const auto grid = TimeGrid::make(t_max, dt);
  NormalSource normal(rng);
  return p0_path(dyn, grid, [&](std::size_t) { return normal(); });
}

PathBundle simulate_p0(const Dynamics& dyn, double t_max, double dt, std::span<const double> normals) {
  const auto grid = TimeGrid::make(t_max, dt);
  require_length(normals, grid);
  return p0_path(dyn, grid, [&](std::size_t k) { return normals[k]; });
}

}  // namespace hstop
