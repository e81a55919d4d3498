#pragma once

// Finite-difference oracle for the reduced one-dimensional stopping problems:
// the variational inequality max/min(L v + running, obstacle - v) = 0 on a
// log-uniform phi grid, solved by projected SOR. Uses no closed-form result.

#include <functional>
#include <vector>

#include "hstop/model.hpp"

namespace hstop {

enum class Sense { Max, Min };

struct LcpProblem {
  std::function<double(double)> drift_coeff;  // first-order coefficient in phi
  std::function<double(double)> diff_coeff;   // second-order coefficient, omega^2 phi^2 / 2
  double kill_rate = 0.0;
  std::function<double(double)> obstacle;
  std::function<double(double)> running;
  Sense sense = Sense::Max;
  double phi_min = 1e-4;
  double phi_max = 1e4;
  int nodes = 4001;
};

struct LcpOptions {
  double relaxation = 0.0;  // <= 0 picks the optimal SOR factor from the Jacobi spectral radius
  double tolerance = 1e-10;  // sup-norm update that ends the sweeps
  int max_sweeps = 100000;
};

struct NumericSolution {
  std::vector<double> nodes;
  std::vector<double> values;
  std::vector<double> obstacle;
  std::vector<bool> active;                 // obstacle binds
  std::vector<double> boundary_estimates;   // phi where `active` switches
  double log_step = 0.0;                    // grid spacing in ln phi
  double relaxation = 0.0;
  int sweeps = 0;
  double last_update = 0.0;

  /// Piecewise-linear interpolation in ln phi; phi must lie inside the grid.
  double value_at(double phi) const;
};

/// Reduced generator, obstacle and running term of the model's payoff kind.
LcpProblem build_lcp(const ValidatedModel& model, double phi_min = 1e-4, double phi_max = 1e4, int nodes = 4001);

/// Throws SolverError if the sweeps do not converge.
NumericSolution solve_lcp(const LcpProblem& problem, const LcpOptions& options = {});

/// Discretisation of one interior node: alpha u[i-1] - beta u[i] + gamma u[i+1] + f = 0.
struct NodeStencil {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double f = 0.0;
};
/// Central differences, upwinded when the cell Peclet number exceeds 2.
NodeStencil stencil_at(const LcpProblem& problem, double phi, double log_step);

}  // namespace hstop
