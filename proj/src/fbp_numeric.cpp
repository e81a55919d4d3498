#include "hstop/fbp_numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hstop {

LcpProblem build_lcp(const ValidatedModel& model, double phi_min, double phi_max, int nodes) {
  const auto& s = model.spec();
  const double half_w2 = 0.5 * model.derived().omega * model.derived().omega;

  LcpProblem p;
  p.phi_min = phi_min;
  p.phi_max = phi_max;
  p.nodes = nodes;
  p.diff_coeff = [half_w2](double phi) { return half_w2 * phi * phi; };
  switch (model.kind()) {
    case PayoffKind::Hiring: {
      const auto& h = model.payoff<HiringPayoff>();
      const double drift = s.lambda0 - s.lambda1;
      p.sense = Sense::Max;
      p.kill_rate = h.r + s.lambda0;
      p.drift_coeff = [drift](double phi) { return drift * phi; };
      p.obstacle = [c = h.c, d = h.d](double phi) { return d * phi - c; };
      p.running = [](double) { return 0.0; };
      break;
    }
    case PayoffKind::ShortPosition: {
      const auto& sp = model.payoff<ShortPositionPayoff>();
      const double drift = s.lambda0 + s.mu1 - s.mu0;
      p.sense = Sense::Min;
      p.kill_rate = sp.r + s.lambda0 - s.mu0;
      p.drift_coeff = [drift](double phi) { return drift * phi; };
      p.obstacle = [](double phi) { return 1.0 + phi; };
      // Recall only happens in state 0, so the running cost carries no Phi° term.
      p.running = [l = s.lambda0](double) { return l; };
      break;
    }
    case PayoffKind::SeqTesting: {
      const double lambda = s.lambda0;
      p.sense = Sense::Min;
      p.kill_rate = lambda;
      p.drift_coeff = [lambda](double phi) { return lambda * phi; };
      p.obstacle = [](double phi) { return std::min(phi, 1.0); };
      p.running = [c = model.payoff<SeqTestingPayoff>().c](double phi) { return c * (1.0 + phi); };
      break;
    }
  }
  return p;
}

NodeStencil stencil_at(const LcpProblem& problem, double phi, double h) {
  const double diff = problem.diff_coeff(phi) / (phi * phi);
  const double drift = problem.drift_coeff(phi) / phi - diff;  // drift of ln phi
  NodeStencil st;
  const double d = diff / (h * h);
  if (std::abs(drift) * h > 2.0 * diff) {
    st.alpha = d + (drift < 0.0 ? -drift / h : 0.0);
    st.gamma = d + (drift > 0.0 ? drift / h : 0.0);
  } else {
    st.alpha = d - drift / (2.0 * h);
    st.gamma = d + drift / (2.0 * h);
  }
  st.beta = st.alpha + st.gamma + problem.kill_rate;
  st.f = problem.running(phi);
  return st;
}

double NumericSolution::value_at(double phi) const {
  const double y0 = std::log(nodes.front());
  const double pos = (std::log(phi) - y0) / log_step;
  if (pos < 0.0 || pos > static_cast<double>(nodes.size() - 1)) throw InvalidArgument("value_at: phi outside grid");
  const auto i = std::min(static_cast<std::size_t>(pos), nodes.size() - 2);
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

NumericSolution solve_lcp(const LcpProblem& problem, const LcpOptions& options) {
  if (!(problem.phi_min > 0.0) || !(problem.phi_max > problem.phi_min))
    throw InvalidArgument("lcp domain must satisfy 0 < phi_min < phi_max");
  if (problem.nodes < 3) throw InvalidArgument("lcp needs at least 3 nodes");
  if (!(problem.kill_rate > 0.0)) throw InvalidArgument("lcp kill rate must be positive");

  const int n = problem.nodes;
  const double y0 = std::log(problem.phi_min);
  const double h = (std::log(problem.phi_max) - y0) / (n - 1);
  const bool maximise = problem.sense == Sense::Max;
  auto better = [maximise](double a, double b) { return maximise ? std::max(a, b) : std::min(a, b); };

  NumericSolution out;
  out.log_step = h;
  out.nodes.resize(n);
  out.obstacle.resize(n);
  std::vector<NodeStencil> st(n);
  double jacobi = 0.0;
  for (int i = 0; i < n; ++i) {
    out.nodes[i] = std::exp(y0 + h * i);
    out.obstacle[i] = problem.obstacle(out.nodes[i]);
    st[i] = stencil_at(problem, out.nodes[i], h);
    if (problem.diff_coeff(out.nodes[i]) <= 0.0 && i > 0 && i < n - 1)
      throw InvalidArgument("diffusion coefficient must be positive on the open domain");
    jacobi = std::max(jacobi, 2.0 * std::sqrt(st[i].alpha * st[i].gamma) / st[i].beta);
  }
  jacobi *= std::cos(std::numbers::pi / (n - 1));
  out.relaxation = options.relaxation > 0.0 ? options.relaxation : 2.0 / (1.0 + std::sqrt(1.0 - jacobi * jacobi));

  // Ends: far right the obstacle; far left the better of stopping and never
  // stopping with phi frozen (running/kill), the limit as Phi° is absorbed at 0.
  auto& u = out.values;
  u = out.obstacle;
  u.front() = better(out.obstacle.front(), st.front().f / problem.kill_rate);

  const double w = out.relaxation;
  double update = 0.0;
  int sweep = 0;
  for (; sweep < options.max_sweeps; ++sweep) {
    update = 0.0;
    for (int i = 1; i < n - 1; ++i) {
      const auto& s = st[i];
      const double gs = (s.alpha * u[i - 1] + s.gamma * u[i + 1] + s.f) / s.beta;
      const double next = better(u[i] + w * (gs - u[i]), out.obstacle[i]);
      update = std::max(update, std::abs(next - u[i]));
      u[i] = next;
    }
    if (update < options.tolerance) break;
  }
  out.sweeps = sweep + 1;
  out.last_update = update;
  if (!(update < options.tolerance))
    throw SolverError("PSOR did not converge after " + std::to_string(options.max_sweeps) +
                      " sweeps; last update " + std::to_string(update));

  out.active.resize(n);
  for (int i = 0; i < n; ++i)
    out.active[i] = std::abs(u[i] - out.obstacle[i]) <= 1e-9 * std::max(1.0, std::abs(out.obstacle[i]));
  for (int i = 1; i + 2 < n; ++i)
    if (out.active[i] != out.active[i + 1]) out.boundary_estimates.push_back(std::sqrt(out.nodes[i] * out.nodes[i + 1]));
  return out;
}

}  // namespace hstop
