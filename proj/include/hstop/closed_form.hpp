#pragma once

// Exact solutions of the three reduced one-dimensional stopping problems in
// Phi°-space. "Reduced scale" values are v = (1+phi) V; for the short
// position they are additionally normalised by x0 (vbar = v / x0).

#include <optional>

#include "hstop/error.hpp"
#include "hstop/model.hpp"

namespace hstop {

/// a g^2 + b g + c.
struct Quadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double operator()(double g) const noexcept { return (a * g + b) * g + c; }
};

/// Positive root of a quadratic with a > 0 and c < 0, evaluated without cancellation.
double positive_root(const Quadratic& q);

/// (omega^2/2) g(g-1) + (lambda0 - lambda1) g - (r + lambda0).
Quadratic hiring_quadratic(const ValidatedModel& model);
/// (omega^2/2) g(g-1) + (lambda0 + mu1 - mu0) g - (r + lambda0 - mu0).
Quadratic short_quadratic(const ValidatedModel& model);

class FreeBoundarySolution {
 public:
  PayoffKind kind = PayoffKind::Hiring;
  std::optional<double> gamma_root;  // absent for SeqTesting
  std::optional<double> lower;       // A (SeqTesting)
  double upper = 0.0;                // b, B
  std::optional<double> c1, c2;      // SeqTesting ODE coefficients
  bool degenerate = false;           // immediate stopping everywhere (SeqTesting only)

  /// Reduced-scale value and its first two derivatives in phi.
  double value_phi(double phi) const;
  double value_phi_derivative(double phi) const;
  double value_phi_second_derivative(double phi) const;
  /// Stopping payoff in reduced scale (the obstacle).
  double obstacle(double phi) const;
  bool in_continuation(double phi) const;

 private:
  friend FreeBoundarySolution hiring_solve(const ValidatedModel&);
  friend FreeBoundarySolution short_solve(const ValidatedModel&);
  friend FreeBoundarySolution seqtest_solve(const ValidatedModel&);
  friend FreeBoundarySolution seqtest_immediate_stop(const ValidatedModel&);
  friend struct SmoothFitResiduals seqtest_residuals(const FreeBoundarySolution&);

  // Kind-specific constants used by the evaluators.
  double p1_ = 0.0;  // hiring: c      short: lambda0/(r+lambda0-mu0)   seq: lambda
  double p2_ = 0.0;  // hiring: d      short: unused                    seq: omega
  double p3_ = 0.0;  // hiring: unused short: unused                    seq: c
};

/// The continuation region of SeqTesting is empty at search resolution.
class DegenerateRegion : public SolverError {
 public:
  DegenerateRegion(const std::string& what, FreeBoundarySolution immediate)
      : SolverError(what), immediate_(std::move(immediate)) {}
  const char* code() const noexcept override { return "degenerate_region"; }
  /// Immediate-stop solution: value min(phi, 1).
  const FreeBoundarySolution& immediate_stop() const noexcept { return immediate_; }

 private:
  FreeBoundarySolution immediate_;
};

FreeBoundarySolution hiring_solve(const ValidatedModel& model);
FreeBoundarySolution short_solve(const ValidatedModel& model);
FreeBoundarySolution seqtest_solve(const ValidatedModel& model);
FreeBoundarySolution seqtest_immediate_stop(const ValidatedModel& model);

/// Dispatches on the payoff kind.
FreeBoundarySolution solve(const ValidatedModel& model);

/// Time-dependent X threshold whose first crossing is inf{t: Phi°_t >= b}.
double hiring_x_boundary(const FreeBoundarySolution& solution, const ValidatedModel& model, double t);

/// Value on the original scale V = v/(1+phi) (times x0 for the short position).
double value_original(const FreeBoundarySolution& solution, const ValidatedModel& model, double phi);

/// Reduced-scale value of the (continuously monitored) policy that stops when
/// Phi° leaves (lower, upper). lower is required for SeqTesting and must be
/// absent for the one-sided problems.
double threshold_policy_value(const ValidatedModel& model, std::optional<double> lower, double upper, double phi);

/// Residuals of the SeqTesting smooth-fit system at (A, B, C1, C2):
/// v(A)-A, v'(A)-1, v(B)-1, v'(B).
struct SmoothFitResiduals {
  double value_at_a = 0.0;
  double slope_at_a = 0.0;
  double value_at_b = 0.0;
  double slope_at_b = 0.0;
  double max_abs() const noexcept;
};
SmoothFitResiduals seqtest_residuals(const FreeBoundarySolution& solution);

/// max over 1000 interior points of |ODE residual| / (sum of |terms|), for the
/// ODE governing the continuation region of the solution's problem.
double ode_relative_residual(const FreeBoundarySolution& solution, const ValidatedModel& model);

}  // namespace hstop
