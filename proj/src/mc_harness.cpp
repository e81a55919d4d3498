#include "hstop/mc_harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "hstop/closed_form.hpp"
#include "hstop/rng.hpp"
#include "hstop/simulate.hpp"

namespace hstop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Expected overshoot of a grid-monitored Brownian motion, in units of sd per step.
constexpr double kOvershoot = 0.5826;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// log Phi°_t as a function of (t, y). Works with log phi = -inf (pi = 0) and +inf (pi = 1).
struct LogPhiCirc {
  double log_phi0 = 0.0;
  double y0 = 0.0;
  double slope = 0.0;
  double decay = 0.0;
  double rate = 0.0;

  explicit LogPhiCirc(const Dynamics& dyn)
      : log_phi0(dyn.prior_pi >= 1.0 ? kInf : std::log(dyn.prior_pi / (1.0 - dyn.prior_pi))),
        y0(dyn.coordinate(dyn.x0)),
        slope(dyn.omega() / dyn.sigma),
        decay(dyn.omega() * (dyn.coordinate_drift(0) + dyn.coordinate_drift(1)) / (2.0 * dyn.sigma)),
        rate(dyn.f_ratio_rate()) {}

  double operator()(double t, double y) const noexcept { return log_phi0 + slope * (y - y0) + (rate - decay) * t; }
};

// ---- stopping rules ----

struct UpperRule {
  double log_b;
  bool operator()(double, double lpc, double) const noexcept { return lpc >= log_b; }
};
struct BandRule {
  double log_a, log_b;
  bool operator()(double, double lpc, double) const noexcept { return lpc <= log_a || lpc >= log_b; }
};
struct XRule {
  const std::function<double(double)>* boundary;
  bool geometric;
  bool operator()(double t, double, double y) const {
    return (geometric ? std::exp(y) : y) >= (*boundary)(t);
  }
};
struct AlwaysRule {
  bool operator()(double, double, double) const noexcept { return true; }
};
struct NeverRule {
  bool operator()(double, double, double) const noexcept { return false; }
};

template <class F>
decltype(auto) with_rule(const Policy& policy, bool geometric, F&& f) {
  return std::visit(
      [&](const auto& p) -> decltype(auto) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PhiUpper>) return f(UpperRule{std::log(p.b)});
        else if constexpr (std::is_same_v<P, PhiBand>) return f(BandRule{std::log(p.a), std::log(p.b)});
        else if constexpr (std::is_same_v<P, XBoundary>) return f(XRule{&p.boundary, geometric});
        else if constexpr (std::is_same_v<P, StopImmediately>) return f(AlwaysRule{});
        else return f(NeverRule{});
      },
      policy);
}

// ---- payoff kernels ----
// g: stopping value, h: value when the horizon ends the problem inside a step,
// running: rate accrued per step while alive and not stopped.
// p0_flow: the P0 weight of running and horizon terms over one step,
//   dt (F0 l0 + F0 Phi° l1) + (F0 - F0') h0 + (F1 - F1') Phi h1, where F1 Phi = F0 Phi°.

struct FlowRates {
  double dt;
  double l0;  // lambda0
  double p0;  // 1 - exp(-lambda0 dt)
  double p1;  // 1 - exp(-lambda1 dt)
};

struct HiringKernel {
  static constexpr bool kRunning = false;
  static constexpr bool kHorizon = false;
  static constexpr bool kFlow = false;
  double c, d, r;
  bool force_stop = false;
  double g(int theta, double t, double, double) const noexcept { return std::exp(-r * t) * (theta == 1 ? d : -c); }
  double h(int, double, double) const noexcept { return 0.0; }
  double running(int, double, double) const noexcept { return 0.0; }
  double p0_flow(const FlowRates&, double, double, double) const noexcept { return 0.0; }
};

struct ShortKernel {
  static constexpr bool kRunning = false;
  static constexpr bool kHorizon = true;
  static constexpr bool kFlow = true;
  double r;
  bool force_stop = true;
  // geometric coordinate: x = e^y
  double g(int, double t, double y, double) const noexcept { return std::exp(y - r * t); }
  double h(int, double t, double y) const noexcept { return std::exp(y - r * t); }
  double running(int, double, double) const noexcept { return 0.0; }
  double p0_flow(const FlowRates& f, double t, double y, double lpc) const noexcept {
    const double v = f.p0 * std::exp(y - (r + f.l0) * t);
    return f.p1 > 0.0 ? v + f.p1 * std::exp(lpc + y - (r + f.l0) * t) : v;
  }
};

struct SeqKernel {
  static constexpr bool kRunning = true;
  static constexpr bool kHorizon = false;
  static constexpr bool kFlow = true;
  double c;
  bool force_stop = true;
  // decide theta = 1 iff Phi° >= 1
  double g(int theta, double, double, double lpc) const noexcept {
    return (lpc >= 0.0) == (theta == 1) ? 0.0 : 1.0;
  }
  double h(int, double, double) const noexcept { return 0.0; }
  double running(int, double, double) const noexcept { return c; }
  double p0_flow(const FlowRates& f, double t, double, double lpc) const noexcept {
    return f.dt * c * std::exp(-f.l0 * t) * (1.0 + std::exp(lpc));
  }
};

struct GenericKernel {
  static constexpr bool kRunning = true;
  static constexpr bool kHorizon = true;
  static constexpr bool kFlow = true;
  const GenericObjective* obj;
  bool geometric;
  bool force_stop;
  double x(double y) const noexcept { return geometric ? std::exp(y) : y; }
  double g(int theta, double t, double y, double) const { return obj->g(t, x(y), theta); }
  double h(int theta, double t, double y) const { return obj->h ? obj->h(t, x(y), theta) : 0.0; }
  double running(int theta, double t, double y) const { return obj->running ? obj->running(t, x(y), theta) : 0.0; }
  double p0_flow(const FlowRates& f, double t, double y, double lpc) const {
    const double f0 = std::exp(-f.l0 * t);
    const double f1phi = std::exp(lpc - f.l0 * t);
    double v = f.dt * (f0 * running(0, t, y) + f1phi * running(1, t, y));
    if (f.p0 > 0.0) v += f0 * f.p0 * h(0, t, y);
    if (f.p1 > 0.0) v += f1phi * f.p1 * h(1, t, y);
    return v;
  }
};

template <class F>
decltype(auto) with_model_kernel(const ValidatedModel& model, F&& f) {
  switch (model.kind()) {
    case PayoffKind::Hiring: {
      const auto& p = model.payoff<HiringPayoff>();
      return f(HiringKernel{p.c, p.d, p.r});
    }
    case PayoffKind::ShortPosition:
      return f(ShortKernel{model.payoff<ShortPositionPayoff>().r});
    case PayoffKind::SeqTesting:
      return f(SeqKernel{model.payoff<SeqTestingPayoff>().c});
  }
  throw InvalidArgument("unsupported payoff kind");
}

// ---- per-path evaluators ----

struct PathSetup {
  const Dynamics* dyn;
  LogPhiCirc lpc;
  double dt;
  std::size_t steps;
  std::uint64_t seed;
};

template <class K, class R>
double full_path(const PathSetup& s, const K& k, const R& rule, bool force, std::uint64_t index) {
  const RngStream stream{s.seed, index};
  const Nature nature = sample_nature(*s.dyn, stream);
  NormalSource normal(stream);
  const XStepper step(*s.dyn, nature.theta, s.dt);
  const int theta = nature.theta;
  double y = s.lpc.y0;
  double acc = 0.0;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * s.dt;
    const double lpc = s.lpc(t, y);
    if (rule(t, lpc, y)) return acc + k.g(theta, t, y, lpc);
    if (i == s.steps) return force ? acc + k.g(theta, t, y, lpc) : acc;
    if constexpr (K::kRunning) acc += s.dt * k.running(theta, t, y);
    if (nature.gamma <= static_cast<double>(i + 1) * s.dt) {
      if constexpr (K::kHorizon) acc += k.h(theta, t, y);
      return acc;
    }
    y = step.step_coordinate(y, normal());
  }
}

// Reduced-scale integrand under P0 divided by (1 + phi).
template <class K, class R>
double p0_path(const PathSetup& s, const K& k, const R& rule, bool force, std::uint64_t index) {
  const RngStream stream{s.seed, index};
  NormalSource normal(stream);
  const XStepper step(*s.dyn, 0, s.dt);
  const double l0 = s.dyn->horizon0.rate();
  const FlowRates rates{s.dt, l0, -std::expm1(-l0 * s.dt), -std::expm1(-s.dyn->horizon1.rate() * s.dt)};
  const double norm = 1.0 + std::exp(s.lpc.log_phi0);

  // F0(t) g0 + F1(t) Phi_t g1, with F1 Phi = F0 Phi°.
  auto stop_value = [&](double t, double y, double lpc) {
    const double f0 = std::exp(-l0 * t);
    const double f1phi = std::exp(lpc - l0 * t);
    return f0 * k.g(0, t, y, lpc) + f1phi * k.g(1, t, y, lpc);
  };

  double y = s.lpc.y0;
  double acc = 0.0;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * s.dt;
    const double lpc = s.lpc(t, y);
    if (rule(t, lpc, y)) return (acc + stop_value(t, y, lpc)) / norm;
    if (i == s.steps) return (force ? acc + stop_value(t, y, lpc) : acc) / norm;
    if constexpr (K::kFlow) acc += k.p0_flow(rates, t, y, lpc);
    y = step.step_coordinate(y, normal());
  }
}

// ---- parallel driver ----

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// fn(index, out) fills `width` values per path. Output layout is independent of the worker count.
template <class Fn>
std::vector<double> run_paths(std::size_t n, std::size_t width, unsigned workers, Fn&& fn) {
  std::vector<double> out(n * width);
  workers = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, out.data() + i * width);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) fn(i, out.data() + i * width);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Mean and standard error of column j, summed in path order.
std::pair<double, double> column_stats(const std::vector<double>& v, std::size_t n, std::size_t width, std::size_t j) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += v[i * width + j];
  const double mean = sum / static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = v[i * width + j] - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

void validate_config(const McConfig& c) {
  if (c.n_paths == 0) throw InvalidArgument("n_paths must be positive");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw InvalidArgument("dt must be positive");
  if (c.max_tail_bound && !(*c.max_tail_bound > 0.0)) throw InvalidArgument("max_tail_bound must be positive");
}

double required_t_max_for(const std::function<double(double)>& tail, double dt, double bound) {
  if (!(bound > 0.0)) throw InvalidArgument("tail bound target must be positive");
  if (tail(dt) <= bound) return dt;
  double hi = dt;
  while (!(tail(hi) <= bound)) {
    hi *= 2.0;
    if (hi > 1e7) throw InvalidArgument("no finite t_max achieves tail bound " + std::to_string(bound));
  }
  double lo = hi / 2.0;
  for (int i = 0; i < 200 && hi - lo > 0.25 * dt; ++i) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) <= bound ? hi : lo) = mid;
  }
  double steps = std::ceil(hi / dt - 1e-9);
  while (tail(steps * dt) > bound) steps += 1.0;
  return steps * dt;
}

// Resolves t_max and its tail bound; throws when an explicit t_max misses the requested bound.
std::pair<double, double> resolve_horizon(const McConfig& c, const std::function<double(double)>& tail) {
  if (c.t_max) {
    TimeGrid::make(*c.t_max, c.dt);
    const double tb = tail(*c.t_max);
    if (c.max_tail_bound && tb > *c.max_tail_bound) {
      std::ostringstream msg;
      msg << "t_max=" << *c.t_max << " gives tail bound " << tb << " > " << *c.max_tail_bound
          << "; required t_max=" << required_t_max_for(tail, c.dt, *c.max_tail_bound);
      throw InvalidArgument(msg.str());
    }
    return {*c.t_max, tb};
  }
  const double t = required_t_max_for(tail, c.dt, c.max_tail_bound.value_or(kDefaultTailBound));
  return {t, tail(t)};
}

PathSetup make_setup(const Dynamics& dyn, double dt, double t_max, std::uint64_t seed) {
  const TimeGrid grid = TimeGrid::make(t_max, dt);
  return PathSetup{&dyn, LogPhiCirc(dyn), dt, grid.steps, seed};
}

McEstimate package(const std::vector<double>& values, const McConfig& c, double t_max, double tb) {
  const auto [mean, se] = column_stats(values, c.n_paths, 1, 0);
  return McEstimate{mean, se, c.n_paths, c.dt, t_max, c.seed, tb};
}

void require_supported(const ValidatedModel& model, const Policy& policy) {
  validate_policy(policy);
  if (std::holds_alternative<XBoundary>(policy) && model.kind() != PayoffKind::Hiring)
    throw InvalidArgument("XBoundary policies are supported for hiring models only");
  if (std::holds_alternative<NeverStop>(policy) && model.kind() == PayoffKind::SeqTesting)
    throw InvalidArgument("seq_testing has infinite expected cost under NeverStop");
}

template <bool P0>
McEstimate evaluate_model(const ValidatedModel& model, const Policy& policy, const McConfig& config) {
  validate_config(config);
  require_supported(model, policy);
  if constexpr (P0) model.phi();  // P0 needs pi < 1
  const auto [t_max, tb] =
      resolve_horizon(config, [&](double t) { return tail_bound(model, policy, t); });
  const PathSetup setup = make_setup(model.dynamics(), config.dt, t_max, config.seed);
  const bool geometric = model.dynamics().drift_form == DriftForm::Geometric;
  const bool never = std::holds_alternative<NeverStop>(policy);
  const auto values = with_model_kernel(model, [&](auto kernel) {
    return with_rule(policy, geometric, [&](auto rule) {
      const bool force = kernel.force_stop && !never;
      return run_paths(config.n_paths, 1, config.workers, [&](std::size_t i, double* out) {
        *out = P0 ? p0_path(setup, kernel, rule, force, i) : full_path(setup, kernel, rule, force, i);
      });
    });
  });
  return package(values, config, t_max, tb);
}

template <bool P0>
McEstimate evaluate_generic(const ValidatedModel& model, const GenericObjective& obj, const Policy& policy,
                            const McConfig& config) {
  validate_config(config);
  validate_policy(policy);
  if (!obj.g) throw InvalidArgument("generic objective needs a stopping payoff g");
  if constexpr (P0) model.phi();
  const std::function<double(double)> tail = [&](double t) {
    if (std::holds_alternative<StopImmediately>(policy)) return 0.0;
    return obj.tail_bound ? obj.tail_bound(t) : kInf;
  };
  const auto [t_max, tb] = resolve_horizon(config, tail);
  const PathSetup setup = make_setup(model.dynamics(), config.dt, t_max, config.seed);
  const bool geometric = model.dynamics().drift_form == DriftForm::Geometric;
  const GenericKernel kernel{&obj, geometric, obj.force_stop_at_t_max && !std::holds_alternative<NeverStop>(policy)};
  const auto values = with_rule(policy, geometric, [&](auto rule) {
    return run_paths(config.n_paths, 1, config.workers, [&](std::size_t i, double* out) {
      *out = P0 ? p0_path(setup, kernel, rule, kernel.force_stop, i)
                : full_path(setup, kernel, rule, kernel.force_stop, i);
    });
  });
  return package(values, config, t_max, tb);
}

// All thresholds (ascending, in log) on one full-measure path.
template <class K>
void scan_path(const PathSetup& s, const K& k, const std::vector<double>& log_b, std::uint64_t index, double* out) {
  const RngStream stream{s.seed, index};
  const Nature nature = sample_nature(*s.dyn, stream);
  NormalSource normal(stream);
  const XStepper step(*s.dyn, nature.theta, s.dt);
  const int theta = nature.theta;
  const std::size_t m = log_b.size();
  std::size_t next = 0;
  double y = s.lpc.y0;
  double acc = 0.0;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * s.dt;
    const double lpc = s.lpc(t, y);
    while (next < m && lpc >= log_b[next]) out[next++] = acc + k.g(theta, t, y, lpc);
    if (next == m) return;
    if (i == s.steps) {
      const double v = k.force_stop ? acc + k.g(theta, t, y, lpc) : acc;
      while (next < m) out[next++] = v;
      return;
    }
    if constexpr (K::kRunning) acc += s.dt * k.running(theta, t, y);
    if (nature.gamma <= static_cast<double>(i + 1) * s.dt) {
      if constexpr (K::kHorizon) acc += k.h(theta, t, y);
      while (next < m) out[next++] = acc;
      return;
    }
    y = step.step_coordinate(y, normal());
  }
}

}  // namespace

void validate_policy(const Policy& policy) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PhiUpper>) {
          if (!(p.b > 0.0) || !std::isfinite(p.b)) throw InvalidArgument("threshold must be positive and finite");
        } else if constexpr (std::is_same_v<P, PhiBand>) {
          if (!(p.a > 0.0) || !std::isfinite(p.b)) throw InvalidArgument("band thresholds must be positive and finite");
          if (!(p.a < p.b)) throw InvalidArgument("band requires a < b");
        } else if constexpr (std::is_same_v<P, XBoundary>) {
          if (!p.boundary) throw InvalidArgument("XBoundary needs a boundary function");
        }
      },
      policy);
}

std::string describe(const Policy& policy) {
  std::ostringstream s;
  s.precision(17);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PhiUpper>) s << "phi_upper(" << p.b << ")";
        else if constexpr (std::is_same_v<P, PhiBand>) s << "phi_band(" << p.a << "," << p.b << ")";
        else if constexpr (std::is_same_v<P, XBoundary>) s << "x_boundary";
        else if constexpr (std::is_same_v<P, StopImmediately>) s << "stop_immediately";
        else s << "never_stop";
      },
      policy);
  return s.str();
}

Policy closed_form_policy(const ValidatedModel& model) {
  try {
    const FreeBoundarySolution s = solve(model);
    if (s.lower) return PhiBand{*s.lower, s.upper};
    return PhiUpper{s.upper};
  } catch (const DegenerateRegion&) {
    return StopImmediately{};
  }
}

double tail_bound(const ValidatedModel& model, const Policy& policy, double t) {
  if (!(t > 0.0)) throw InvalidArgument("t_max must be positive");
  if (std::holds_alternative<StopImmediately>(policy)) return 0.0;
  const auto& s = model.spec();
  const double omega = model.derived().omega;
  const double pi = s.prior_pi;
  const double one_plus_phi = pi >= 1.0 ? kInf : 1.0 / (1.0 - pi);
  const double log_phi = pi >= 1.0 ? kInf : std::log(pi / (1.0 - pi));
  const double* upper = nullptr;
  const double* lower = nullptr;
  if (const auto* u = std::get_if<PhiUpper>(&policy)) upper = &u->b;
  if (const auto* b = std::get_if<PhiBand>(&policy)) {
    upper = &b->b;
    lower = &b->a;
  }
  // P(log(phi) + m T + omega sqrt(T) Z < log(level))
  auto below = [&](double level, double m) { return normal_cdf((std::log(level) - log_phi - m * t) / (omega * std::sqrt(t))); };

  switch (model.kind()) {
    case PayoffKind::Hiring: {
      const auto& p = model.payoff<HiringPayoff>();
      return std::max(p.c, p.d) * std::exp(-(p.r + std::min(s.lambda0, s.lambda1)) * t);
    }
    case PayoffKind::ShortPosition: {
      const double rho = model.payoff<ShortPositionPayoff>().r + s.lambda0 - s.mu0;
      const double q = s.lambda0 / rho;
      if (pi >= 1.0) return 0.0;
      if (!upper) {
        if (std::holds_alternative<NeverStop>(policy)) return s.x0 * q * std::exp(-rho * t) / one_plus_phi;
        throw InvalidArgument("no tail bound for this short_position policy");
      }
      // Under the X-numeraire measure log Phi° drifts at (lambda0 + mu1 - mu0) - omega^2/2.
      const double m = s.lambda0 + s.mu1 - s.mu0 - 0.5 * omega * omega;
      return s.x0 * (1.0 + *upper + q) * std::exp(-rho * t) * below(*upper, m) / one_plus_phi;
    }
    case PayoffKind::SeqTesting: {
      if (!upper) return kInf;
      if (pi >= 1.0) return 0.0;
      const double lambda = s.lambda0;
      const double c = model.payoff<SeqTestingPayoff>().c;
      const double m = s.lambda0 - s.lambda1 - 0.5 * omega * omega;
      const double alive = below(*upper, m) - (lower ? below(*lower, m) : 0.0);
      return std::exp(-lambda * t) * (1.0 + c * (1.0 + *upper) / lambda) * std::max(alive, 0.0) / one_plus_phi;
    }
  }
  throw InvalidArgument("unsupported payoff kind");
}

double required_t_max(const ValidatedModel& model, const Policy& policy, double dt, double bound) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  return required_t_max_for([&](double t) { return tail_bound(model, policy, t); }, dt, bound);
}

double discretization_allowance(const ValidatedModel& model, const Policy& policy, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (std::holds_alternative<StopImmediately>(policy) || std::holds_alternative<NeverStop>(policy)) return 0.0;
  if (std::holds_alternative<XBoundary>(policy))
    throw InvalidArgument("no discretization allowance for XBoundary; use the equivalent PhiUpper policy");
  const double phi = model.phi();
  const double shift = std::exp(2.0 * kOvershoot * model.derived().omega * std::sqrt(dt));
  double reduced = 0.0;
  if (const auto* u = std::get_if<PhiUpper>(&policy)) {
    reduced = std::abs(threshold_policy_value(model, std::nullopt, u->b * shift, phi) -
                       threshold_policy_value(model, std::nullopt, u->b, phi));
  } else {
    const auto& b = std::get<PhiBand>(policy);
    reduced = std::abs(threshold_policy_value(model, b.a / shift, b.b * shift, phi) -
                       threshold_policy_value(model, b.a, b.b, phi));
  }
  const double scale = model.kind() == PayoffKind::ShortPosition ? model.spec().x0 : 1.0;
  return scale * reduced / (1.0 + phi);
}

McEstimate evaluate_policy_full(const ValidatedModel& model, const Policy& policy, const McConfig& config) {
  return evaluate_model<false>(model, policy, config);
}

McEstimate evaluate_policy_p0(const ValidatedModel& model, const Policy& policy, const McConfig& config) {
  return evaluate_model<true>(model, policy, config);
}

McEstimate evaluate_policy_full(const ValidatedModel& model, const GenericObjective& objective, const Policy& policy,
                                const McConfig& config) {
  return evaluate_generic<false>(model, objective, policy, config);
}

McEstimate evaluate_policy_p0(const ValidatedModel& model, const GenericObjective& objective, const Policy& policy,
                              const McConfig& config) {
  return evaluate_generic<true>(model, objective, policy, config);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw InvalidArgument("log_grid needs 0 < lo <= hi and n > 0");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), step = (std::log(hi) - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

ScanResult optimality_scan(const ValidatedModel& model, const std::vector<double>& grid, const McConfig& config,
                           std::optional<double> reference) {
  validate_config(config);
  if (grid.empty()) throw InvalidArgument("optimality_scan needs a non-empty threshold grid");
  if (model.kind() == PayoffKind::SeqTesting) throw InvalidArgument("optimality_scan covers single-threshold problems");
  const double ref = reference ? *reference : solve(model).upper;

  std::vector<double> thresholds = grid;
  for (double b : thresholds)
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("thresholds must be positive and finite");
  if (!(ref > 0.0) || !std::isfinite(ref)) throw InvalidArgument("reference threshold must be positive and finite");
  const bool present = std::any_of(thresholds.begin(), thresholds.end(),
                                   [&](double b) { return std::abs(b - ref) <= 1e-12 * ref; });
  if (!present) thresholds.push_back(ref);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const std::size_t m = thresholds.size();

  // The widest truncation need among the candidates.
  auto worst_tail = [&](double t) {
    double w = 0.0;
    for (double b : thresholds) w = std::max(w, tail_bound(model, PhiUpper{b}, t));
    return w;
  };
  const auto [t_max, tb] = resolve_horizon(config, worst_tail);
  (void)tb;
  const PathSetup setup = make_setup(model.dynamics(), config.dt, t_max, config.seed);
  std::vector<double> log_b(m);
  for (std::size_t j = 0; j < m; ++j) log_b[j] = std::log(thresholds[j]);

  const auto values = with_model_kernel(model, [&](auto kernel) {
    return run_paths(config.n_paths, m, config.workers,
                     [&](std::size_t i, double* out) { scan_path(setup, kernel, log_b, i, out); });
  });

  ScanResult result;
  const double sign = model.kind() == PayoffKind::Hiring ? 1.0 : -1.0;
  for (std::size_t j = 0; j < m; ++j) {
    const auto [mean, se] = column_stats(values, config.n_paths, m, j);
    ScanEntry e;
    e.threshold = thresholds[j];
    e.estimate = McEstimate{mean, se, config.n_paths, config.dt, t_max, config.seed,
                            tail_bound(model, PhiUpper{thresholds[j]}, t_max)};
    result.entries.push_back(e);
    if (std::abs(thresholds[j] - ref) <= 1e-12 * ref) result.reference_index = j;
  }
  for (std::size_t j = 1; j < m; ++j)
    if (sign * result.entries[j].estimate.mean > sign * result.entries[result.best_index].estimate.mean)
      result.best_index = j;

  // Paired differences against the reference, path by path.
  std::vector<double> diff(config.n_paths);
  const std::size_t r = result.reference_index;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < config.n_paths; ++i) diff[i] = sign * (values[i * m + j] - values[i * m + r]);
    const auto [mean, se] = column_stats(diff, config.n_paths, 1, 0);
    result.entries[j].gap_to_reference = mean;
    result.entries[j].gap_to_reference_se = se;
  }
  const auto& best = result.entries[result.best_index];
  result.reference_within_3se = best.gap_to_reference <= 3.0 * best.gap_to_reference_se;
  return result;
}

}  // namespace hstop
