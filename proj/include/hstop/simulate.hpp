#pragma once

// Sample paths of nature (theta, gamma), of X given theta under P_pi, and of
// the decoupled pair (X, Phi°) under the reference measure P0. All updates are
// exact in distribution at grid times for the constant-coefficient forms.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hstop/model.hpp"
#include "hstop/rng.hpp"

namespace hstop {

enum class Measure { Ppi, P0 };

struct Nature {
  int theta = 0;
  double gamma = 0.0;  // +inf when the horizon is infinite
};

struct PathBundle {
  Measure measure = Measure::Ppi;
  std::vector<double> t_grid;
  std::vector<double> x;
  std::optional<int> theta;
  std::optional<double> gamma;
  std::vector<double> phi_circ;  // P0 paths only
  std::vector<double> normals;   // the standard normals driving each step
};

/// Uniform time grid; validates T > 0, dt > 0 and that T/dt is an integer within rounding.
struct TimeGrid {
  double dt = 1e-3;
  std::size_t steps = 0;

  static TimeGrid make(double t_max, double dt);
  double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
  double horizon() const noexcept { return time(steps); }
};

Nature sample_nature(const Dynamics& dyn, RngStream rng);

PathBundle simulate_x_given_theta(const Dynamics& dyn, int theta, double t_max, double dt, RngStream rng);
/// Same, driven by caller-supplied standard normals (one per step).
PathBundle simulate_x_given_theta(const Dynamics& dyn, int theta, double t_max, double dt,
                                  std::span<const double> normals);

/// Nature draw plus X given the drawn theta: a full P_pi path.
PathBundle simulate_ppi(const Dynamics& dyn, double t_max, double dt, RngStream rng);

/// X with drift mu0 and Phi° = e^{(lambda0-lambda1)t} Phi, both driven by the same increments.
/// Requires prior_pi < 1.
PathBundle simulate_p0(const Dynamics& dyn, double t_max, double dt, RngStream rng);
PathBundle simulate_p0(const Dynamics& dyn, double t_max, double dt, std::span<const double> normals);

/// Exact one-step update of X in the given drift state. Used by the streaming evaluators.
class XStepper {
 public:
  XStepper(const Dynamics& dyn, int drift_state, double dt)
      : geometric_(dyn.drift_form == DriftForm::Geometric),
        drift_(dyn.coordinate_drift(drift_state) * dt),
        vol_(dyn.sigma * std::sqrt(dt)) {}

  /// Advances the filter coordinate (x, or ln x for the geometric form).
  double step_coordinate(double y, double z) const noexcept { return y + drift_ + vol_ * z; }
  double to_x(double y) const noexcept { return geometric_ ? std::exp(y) : y; }

 private:
  bool geometric_;
  double drift_;
  double vol_;
};

}  // namespace hstop
