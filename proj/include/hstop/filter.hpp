#pragma once

// Posterior Pi_t = P(theta=1 | X up to t), ratio Phi = Pi/(1-Pi) and the
// horizon-adjusted ratio Phi° = (F1/F0) Phi computed from an observed path.

#include <vector>

#include "hstop/model.hpp"
#include "hstop/simulate.hpp"

namespace hstop {

struct FilterPath {
  std::vector<double> t_grid;
  std::vector<double> pi_t;
  std::vector<double> phi_t;
  std::vector<double> phi_circ_t;
  std::vector<double> pi_circ_t;  // Phi°/(1+Phi°): posterior given survival of the horizon
};

/// Closed-form log likelihood ratio for constant coefficients:
/// log Phi_t = log phi + (omega/sigma)(y_t - y_0) - omega (m0 + m1)/(2 sigma) t,
/// with y = x or ln x and m_i the drift of y in state i.
class ExplicitLogRatio {
 public:
  explicit ExplicitLogRatio(const Dynamics& dyn);

  double log_phi(double t, double y) const noexcept { return log_phi0_ + slope_ * (y - y0_) - decay_ * t; }
  double log_phi_circ(double t, double y) const noexcept { return log_phi(t, y) + rate_ * t; }

 private:
  double log_phi0_;
  double y0_;
  double slope_;
  double decay_;
  double rate_;
};

/// Production filter: exact formula for the likelihood ratio. Requires prior_pi in (0,1).
FilterPath filter_explicit(const Dynamics& dyn, const PathBundle& path);

/// Euler scheme for dPi = omega Pi (1-Pi) dW^ with innovations rebuilt from the X
/// increments; Pi clamped to [1e-12, 1 - 1e-12]. Requires prior_pi in (0,1).
FilterPath filter_sde(const Dynamics& dyn, const PathBundle& path);

inline constexpr double kFilterClamp = 1e-12;

}  // namespace hstop
