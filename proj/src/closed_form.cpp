#include "hstop/closed_form.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace hstop {

double positive_root(const Quadratic& q) {
  if (!(q.a > 0.0) || !(q.c < 0.0)) throw SolverError("quadratic has no unique positive root (need a > 0, c < 0)");
  const double disc = q.b * q.b - 4.0 * q.a * q.c;
  // q.c < 0 < q.a makes disc > b^2, so the roots have opposite signs.
  const double s = q.b >= 0.0 ? 1.0 : -1.0;
  const double w = -0.5 * (q.b + s * std::sqrt(disc));
  const double r1 = w / q.a;
  const double r2 = q.c / w;
  return std::max(r1, r2);
}

Quadratic hiring_quadratic(const ValidatedModel& model) {
  const auto& s = model.spec();
  const auto& p = model.payoff<HiringPayoff>();
  const double half_w2 = 0.5 * model.derived().omega * model.derived().omega;
  return {half_w2, (s.lambda0 - s.lambda1) - half_w2, -(p.r + s.lambda0)};
}

Quadratic short_quadratic(const ValidatedModel& model) {
  const auto& s = model.spec();
  const auto& p = model.payoff<ShortPositionPayoff>();
  const double half_w2 = 0.5 * model.derived().omega * model.derived().omega;
  return {half_w2, (s.lambda0 + s.mu1 - s.mu0) - half_w2, -(p.r + s.lambda0 - s.mu0)};
}

namespace {

// SeqTesting ODE: general solution C1 phi^k + C2 phi + c/lambda - alpha phi ln phi.
struct SeqOde {
  double lambda;
  double omega;
  double c;

  double k() const { return -2.0 * lambda / (omega * omega); }
  double alpha() const { return c / (lambda + 0.5 * omega * omega); }

  double value(double phi, double c1, double c2) const {
    return c1 * std::pow(phi, k()) + c2 * phi + c / lambda - alpha() * phi * std::log(phi);
  }
  double slope(double phi, double c1, double c2) const {
    return c1 * k() * std::pow(phi, k() - 1.0) + c2 - alpha() * (std::log(phi) + 1.0);
  }
  double curvature(double phi, double c1) const {
    return c1 * k() * (k() - 1.0) * std::pow(phi, k() - 2.0) - alpha() / phi;
  }

  // (C1, C2) with v(a) = va and v(b) = vb.
  std::array<double, 2> coefficients(double a, double b, double va, double vb) const {
    const double ra = va - c / lambda + alpha() * a * std::log(a);
    const double rb = vb - c / lambda + alpha() * b * std::log(b);
    const double ak = std::pow(a, k());
    const double bk = std::pow(b, k());
    const double det = ak * b - bk * a;
    return {(ra * b - rb * a) / det, (ak * rb - bk * ra) / det};
  }
};

SeqOde seq_ode(const ValidatedModel& model) {
  return {model.spec().lambda0, model.derived().omega, model.payoff<SeqTestingPayoff>().c};
}

}  // namespace

double FreeBoundarySolution::obstacle(double phi) const {
  switch (kind) {
    case PayoffKind::Hiring: return p2_ * phi - p1_;
    case PayoffKind::ShortPosition: return 1.0 + phi;
    case PayoffKind::SeqTesting: return std::min(phi, 1.0);
  }
  return 0.0;
}

bool FreeBoundarySolution::in_continuation(double phi) const {
  if (degenerate) return false;
  if (lower && phi <= *lower) return false;
  return phi < upper;
}

double FreeBoundarySolution::value_phi(double phi) const {
  if (!in_continuation(phi)) return obstacle(phi);
  const double g = gamma_root.value_or(0.0);
  switch (kind) {
    case PayoffKind::Hiring:
      return p2_ * std::pow(upper, 1.0 - g) / g * std::pow(phi, g);
    case PayoffKind::ShortPosition:
      return upper / g * std::pow(phi / upper, g) + p1_;
    case PayoffKind::SeqTesting:
      return SeqOde{p1_, p2_, p3_}.value(phi, *c1, *c2);
  }
  return 0.0;
}

double FreeBoundarySolution::value_phi_derivative(double phi) const {
  if (!in_continuation(phi)) {
    if (kind == PayoffKind::Hiring) return p2_;
    if (kind == PayoffKind::ShortPosition) return 1.0;
    return phi < 1.0 ? 1.0 : 0.0;
  }
  const double g = gamma_root.value_or(0.0);
  switch (kind) {
    case PayoffKind::Hiring:
      return p2_ * std::pow(upper, 1.0 - g) * std::pow(phi, g - 1.0);
    case PayoffKind::ShortPosition:
      return std::pow(phi / upper, g - 1.0);
    case PayoffKind::SeqTesting:
      return SeqOde{p1_, p2_, p3_}.slope(phi, *c1, *c2);
  }
  return 0.0;
}

double FreeBoundarySolution::value_phi_second_derivative(double phi) const {
  if (!in_continuation(phi)) return 0.0;
  const double g = gamma_root.value_or(0.0);
  switch (kind) {
    case PayoffKind::Hiring:
      return p2_ * (g - 1.0) * std::pow(upper, 1.0 - g) * std::pow(phi, g - 2.0);
    case PayoffKind::ShortPosition:
      return (g - 1.0) / upper * std::pow(phi / upper, g - 2.0);
    case PayoffKind::SeqTesting:
      return SeqOde{p1_, p2_, p3_}.curvature(phi, *c1);
  }
  return 0.0;
}

FreeBoundarySolution hiring_solve(const ValidatedModel& model) {
  if (model.kind() != PayoffKind::Hiring) throw InvalidArgument("hiring_solve: payoff kind is not hiring");
  if (!(model.derived().omega > 0.0)) throw SolverError("no learning: omega = 0");
  const auto& p = model.payoff<HiringPayoff>();

  FreeBoundarySolution sol;
  sol.kind = PayoffKind::Hiring;
  const double g = positive_root(hiring_quadratic(model));
  if (!(g > 1.0)) throw SolverError("hiring: positive root not above 1");
  sol.gamma_root = g;
  sol.upper = p.c * g / (p.d * (g - 1.0));
  sol.p1_ = p.c;
  sol.p2_ = p.d;
  return sol;
}

FreeBoundarySolution short_solve(const ValidatedModel& model) {
  if (model.kind() != PayoffKind::ShortPosition)
    throw InvalidArgument("short_solve: payoff kind is not short_position");
  const auto& s = model.spec();
  const auto& p = model.payoff<ShortPositionPayoff>();
  const double rho = p.r + s.lambda0 - s.mu0;

  FreeBoundarySolution sol;
  sol.kind = PayoffKind::ShortPosition;
  const double g = positive_root(short_quadratic(model));
  if (!(g > 0.0 && g < 1.0)) throw SolverError("short_position: root outside (0,1)");
  sol.gamma_root = g;
  // Value matching vbar(B) = 1+B and smooth fit vbar'(B) = 1 with running cost lambda0.
  sol.upper = g * (p.r - s.mu0) / ((1.0 - g) * rho);
  sol.p1_ = s.lambda0 / rho;
  return sol;
}

FreeBoundarySolution seqtest_immediate_stop(const ValidatedModel& model) {
  if (model.kind() != PayoffKind::SeqTesting)
    throw InvalidArgument("seqtest: payoff kind is not seq_testing");
  const SeqOde ode = seq_ode(model);
  FreeBoundarySolution sol;
  sol.kind = PayoffKind::SeqTesting;
  sol.degenerate = true;
  sol.lower = 1.0;
  sol.upper = 1.0;
  sol.p1_ = ode.lambda;
  sol.p2_ = ode.omega;
  sol.p3_ = ode.c;
  return sol;
}

namespace {

constexpr double kSearchMinLogDistance = 1e-6;
constexpr double kSearchMaxLogA = 12.0;
const double kSearchMaxLogB = std::log(50.0);
constexpr int kSearchPoints = 80;

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * i / (n - 1));
  return out;
}

// Remaining residuals (v'(A) - 1, v'(B)) after value matching fixes C1, C2.
std::array<double, 2> slope_residuals(const SeqOde& ode, double log_a, double log_b) {
  const double a = std::exp(log_a), b = std::exp(log_b);
  const auto c = ode.coefficients(a, b, a, 1.0);
  return {ode.slope(a, c[0], c[1]) - 1.0, ode.slope(b, c[0], c[1])};
}

double norm2(const std::array<double, 2>& r) { return r[0] * r[0] + r[1] * r[1]; }

struct Root {
  double log_a;
  double log_b;
  bool converged;
};

Root damped_newton(const SeqOde& ode, double log_a, double log_b) {
  auto r = slope_residuals(ode, log_a, log_b);
  for (int iter = 0; iter < 200; ++iter) {
    if (std::max(std::abs(r[0]), std::abs(r[1])) < 1e-14) return {log_a, log_b, true};

    const double h = 1e-7 * std::max(1.0, std::max(std::abs(log_a), std::abs(log_b)));
    const auto ra_p = slope_residuals(ode, log_a + h, log_b);
    const auto ra_m = slope_residuals(ode, log_a - h, log_b);
    const auto rb_p = slope_residuals(ode, log_a, log_b + h);
    const auto rb_m = slope_residuals(ode, log_a, log_b - h);
    const double j00 = (ra_p[0] - ra_m[0]) / (2 * h), j01 = (rb_p[0] - rb_m[0]) / (2 * h);
    const double j10 = (ra_p[1] - ra_m[1]) / (2 * h), j11 = (rb_p[1] - rb_m[1]) / (2 * h);
    const double det = j00 * j11 - j01 * j10;
    if (!std::isfinite(det) || det == 0.0) break;
    const double da = -(j11 * r[0] - j01 * r[1]) / det;
    const double db = -(-j10 * r[0] + j00 * r[1]) / det;

    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      const double na = log_a + step * da, nb = log_b + step * db;
      if (!(na < 0.0 && nb > 0.0)) continue;  // keep 0 < A < 1 < B
      const auto nr = slope_residuals(ode, na, nb);
      if (std::isfinite(nr[0]) && std::isfinite(nr[1]) && norm2(nr) < norm2(r)) {
        log_a = na;
        log_b = nb;
        r = nr;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (std::abs(step * da) + std::abs(step * db) < 1e-15) break;
  }
  const bool ok = std::max(std::abs(r[0]), std::abs(r[1])) < 1e-10;
  return {log_a, log_b, ok};
}

bool dominated_by_obstacle(const FreeBoundarySolution& sol) {
  for (double phi : log_spaced(1e-3, 1e3, 2001))
    if (sol.value_phi(phi) > std::min(phi, 1.0) + 1e-10) return false;
  return true;
}

}  // namespace

FreeBoundarySolution seqtest_solve(const ValidatedModel& model) {
  FreeBoundarySolution sol = seqtest_immediate_stop(model);
  if (!(model.derived().omega > 0.0)) throw SolverError("no learning: omega = 0");
  const SeqOde ode = seq_ode(model);

  // Coarse search over (A, B) for starting points, ordered by residual norm.
  struct Start {
    double score, log_a, log_b;
  };
  std::vector<Start> starts;
  const auto dist_a = log_spaced(kSearchMinLogDistance, kSearchMaxLogA, kSearchPoints);
  const auto dist_b = log_spaced(kSearchMinLogDistance, kSearchMaxLogB, kSearchPoints);
  for (double da : dist_a)
    for (double db : dist_b) {
      const double score = norm2(slope_residuals(ode, -da, db));
      if (std::isfinite(score)) starts.push_back({score, -da, db});
    }
  std::sort(starts.begin(), starts.end(), [](const Start& x, const Start& y) { return x.score < y.score; });

  const std::size_t tries = std::min<std::size_t>(starts.size(), 16);
  for (std::size_t i = 0; i < tries; ++i) {
    const Root root = damped_newton(ode, starts[i].log_a, starts[i].log_b);
    if (!root.converged) continue;
    // A region narrower than the search resolution is not a usable two-sided policy.
    if (-root.log_a < kSearchMinLogDistance || root.log_b < kSearchMinLogDistance) continue;

    const double a = std::exp(root.log_a), b = std::exp(root.log_b);
    const auto c = ode.coefficients(a, b, a, 1.0);
    FreeBoundarySolution candidate = sol;
    candidate.degenerate = false;
    candidate.lower = a;
    candidate.upper = b;
    candidate.c1 = c[0];
    candidate.c2 = c[1];
    if (seqtest_residuals(candidate).max_abs() >= 1e-8) continue;
    if (ode_relative_residual(candidate, model) >= 1e-8) continue;
    if (!dominated_by_obstacle(candidate)) continue;
    return candidate;
  }
  throw DegenerateRegion("degenerate stopping region: no two-sided continuation region found; immediate stopping is optimal",
                         sol);
}

FreeBoundarySolution solve(const ValidatedModel& model) {
  switch (model.kind()) {
    case PayoffKind::Hiring: return hiring_solve(model);
    case PayoffKind::ShortPosition: return short_solve(model);
    case PayoffKind::SeqTesting: return seqtest_solve(model);
  }
  throw InvalidArgument("unsupported payoff kind");
}

double hiring_x_boundary(const FreeBoundarySolution& solution, const ValidatedModel& model, double t) {
  if (solution.kind != PayoffKind::Hiring) throw InvalidArgument("hiring_x_boundary: not a hiring solution");
  const auto& dyn = model.dynamics();
  const double omega = dyn.omega();
  const double y = dyn.coordinate(dyn.x0) +
                   dyn.sigma / omega * (std::log(solution.upper / model.phi()) - dyn.f_ratio_rate() * t) +
                   0.5 * (dyn.coordinate_drift(0) + dyn.coordinate_drift(1)) * t;
  return dyn.drift_form == DriftForm::Geometric ? std::exp(y) : y;
}

double value_original(const FreeBoundarySolution& solution, const ValidatedModel& model, double phi) {
  if (!(phi >= 0.0)) throw InvalidArgument("value_original: phi must be non-negative");
  const double v = solution.value_phi(phi) / (1.0 + phi);
  return solution.kind == PayoffKind::ShortPosition ? model.spec().x0 * v : v;
}

double threshold_policy_value(const ValidatedModel& model, std::optional<double> lower, double upper, double phi) {
  if (!(upper > 0.0)) throw InvalidArgument("threshold must be positive");
  switch (model.kind()) {
    case PayoffKind::Hiring: {
      if (lower) throw InvalidArgument("hiring policies are one-sided");
      const auto& p = model.payoff<HiringPayoff>();
      if (phi >= upper) return p.d * phi - p.c;
      const double g = positive_root(hiring_quadratic(model));
      return (p.d * upper - p.c) * std::pow(phi / upper, g);
    }
    case PayoffKind::ShortPosition: {
      if (lower) throw InvalidArgument("short_position policies are one-sided");
      if (phi >= upper) return 1.0 + phi;
      const auto& s = model.spec();
      const double q = s.lambda0 / (model.payoff<ShortPositionPayoff>().r + s.lambda0 - s.mu0);
      const double g = positive_root(short_quadratic(model));
      return (1.0 + upper - q) * std::pow(phi / upper, g) + q;
    }
    case PayoffKind::SeqTesting: {
      if (!lower || !(*lower > 0.0 && *lower < upper)) throw InvalidArgument("seq_testing policies need 0 < A < B");
      if (phi <= *lower || phi >= upper) return std::min(phi, 1.0);
      const SeqOde ode = seq_ode(model);
      const auto c = ode.coefficients(*lower, upper, std::min(*lower, 1.0), std::min(upper, 1.0));
      return ode.value(phi, c[0], c[1]);
    }
  }
  throw InvalidArgument("unsupported payoff kind");
}

double SmoothFitResiduals::max_abs() const noexcept {
  return std::max({std::abs(value_at_a), std::abs(slope_at_a), std::abs(value_at_b), std::abs(slope_at_b)});
}

SmoothFitResiduals seqtest_residuals(const FreeBoundarySolution& s) {
  if (s.kind != PayoffKind::SeqTesting || s.degenerate || !s.c1)
    throw InvalidArgument("seqtest_residuals: needs a non-degenerate seq_testing solution");
  const SeqOde ode{s.p1_, s.p2_, s.p3_};
  const double a = *s.lower, b = s.upper;
  return {ode.value(a, *s.c1, *s.c2) - a, ode.slope(a, *s.c1, *s.c2) - 1.0, ode.value(b, *s.c1, *s.c2) - 1.0,
          ode.slope(b, *s.c1, *s.c2)};
}

double ode_relative_residual(const FreeBoundarySolution& sol, const ValidatedModel& model) {
  if (sol.degenerate) return 0.0;
  const auto& s = model.spec();
  const double w2 = model.derived().omega * model.derived().omega;
  double drift = 0.0, kill = 0.0;
  double lo = 0.0, hi = sol.upper;
  std::function<double(double)> running;
  switch (sol.kind) {
    case PayoffKind::Hiring:
      drift = s.lambda0 - s.lambda1;
      kill = model.payoff<HiringPayoff>().r + s.lambda0;
      running = [](double) { return 0.0; };
      lo = sol.upper * 1e-3;
      break;
    case PayoffKind::ShortPosition:
      drift = s.lambda0 + s.mu1 - s.mu0;
      kill = model.payoff<ShortPositionPayoff>().r + s.lambda0 - s.mu0;
      running = [l = s.lambda0](double) { return l; };
      lo = sol.upper * 1e-3;
      break;
    case PayoffKind::SeqTesting:
      drift = s.lambda0;
      kill = s.lambda0;
      running = [c = model.payoff<SeqTestingPayoff>().c](double phi) { return c * (1.0 + phi); };
      lo = *sol.lower;
      break;
  }
  double worst = 0.0;
  const int n = 1000;
  const double la = std::log(lo), lb = std::log(hi);
  for (int i = 1; i <= n; ++i) {
    const double phi = std::exp(la + (lb - la) * i / (n + 1));
    const double t2 = 0.5 * w2 * phi * phi * sol.value_phi_second_derivative(phi);
    const double t1 = drift * phi * sol.value_phi_derivative(phi);
    const double t0 = -kill * sol.value_phi(phi);
    const double f = running(phi);
    const double scale = std::abs(t2) + std::abs(t1) + std::abs(t0) + std::abs(f);
    if (scale > 0.0) worst = std::max(worst, std::abs(t2 + t1 + t0 + f) / scale);
  }
  return worst;
}

}  // namespace hstop
