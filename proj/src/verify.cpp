#include "hstop/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hstop/closed_form.hpp"
#include "hstop/fbp_numeric.hpp"
#include "hstop/mc_harness.hpp"

namespace hstop {

namespace {

// Evaluates the continuation branch just inside a threshold.
double inside(double threshold, bool from_below) {
  return std::nextafter(threshold, from_below ? 0.0 : std::numeric_limits<double>::infinity());
}

struct Suite {
  VerifyReport report;

  void add(std::string name, double estimate, double reference, double tolerance, bool pass,
           Json detail = Json::object()) {
    report.checks.push_back({std::move(name), estimate, reference, tolerance, pass, std::move(detail)});
  }
  // |estimate - reference| <= tolerance
  void near(std::string name, double estimate, double reference, double tolerance, Json detail = Json::object()) {
    add(std::move(name), estimate, reference, tolerance, std::abs(estimate - reference) <= tolerance,
        std::move(detail));
  }
};

void closed_form_checks(Suite& s, const ValidatedModel& model, const FreeBoundarySolution& sol) {
  switch (model.kind()) {
    case PayoffKind::Hiring: {
      const auto& p = model.payoff<HiringPayoff>();
      const double b = sol.upper;
      s.near("quadratic_residual", hiring_quadratic(model)(*sol.gamma_root), 0.0, 1e-12);
      s.near("value_matching", sol.value_phi(inside(b, true)), p.d * b - p.c, 1e-12);
      s.near("smooth_fit", sol.value_phi_derivative(inside(b, true)), p.d, 1e-10);
      break;
    }
    case PayoffKind::ShortPosition: {
      const double b = sol.upper;
      s.near("quadratic_residual", short_quadratic(model)(*sol.gamma_root), 0.0, 1e-12);
      s.near("value_matching", sol.value_phi(inside(b, true)), 1.0 + b, 1e-10);
      s.near("smooth_fit", sol.value_phi_derivative(inside(b, true)), 1.0, 1e-10);
      break;
    }
    case PayoffKind::SeqTesting: {
      if (sol.degenerate) {
        s.add("degenerate_region", 1.0, 1.0, 0.0, true, Json{{"note", "immediate stopping is optimal"}});
        return;
      }
      const double a = *sol.lower, b = sol.upper;
      s.add("threshold_order", a, b, 0.0, 0.0 < a && a < 1.0 && 1.0 < b, Json{{"A", a}, {"B", b}});
      s.near("smooth_fit", seqtest_residuals(sol).max_abs(), 0.0, 1e-8);
      break;
    }
  }
  s.near("ode_residual", ode_relative_residual(sol, model), 0.0, 1e-8);

  // Obstacle side: v >= obstacle when maximising, v <= obstacle when minimising.
  const double sign = model.kind() == PayoffKind::Hiring ? -1.0 : 1.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (double phi : log_grid(1e-3, 1e3, 2001)) worst = std::max(worst, sign * (sol.value_phi(phi) - sol.obstacle(phi)));
  s.add("obstacle", worst, 0.0, 1e-10, worst <= 1e-10);
}

void lcp_checks(Suite& s, const ValidatedModel& model, const FreeBoundarySolution& sol, const VerifyConfig& cfg) {
  LcpOptions opts;
  opts.relaxation = cfg.relaxation;
  const NumericSolution num = solve_lcp(build_lcp(model, cfg.phi_min, cfg.phi_max, cfg.grid_n), opts);

  double gap = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < num.nodes.size(); ++i) {
    const double phi = num.nodes[i];
    if (phi < 1e-2 || phi > 1e2) continue;
    gap = std::max(gap, std::abs(num.values[i] - sol.value_phi(phi)));
    scale = std::max(scale, std::abs(sol.value_phi(phi)));
  }
  const double rel = scale > 0.0 ? gap / scale : gap;
  s.add("lcp_value_gap", rel, 0.0, 1e-3, rel <= 1e-3,
        Json{{"grid_n", cfg.grid_n}, {"sweeps", num.sweeps}, {"relaxation", num.relaxation}});

  std::vector<double> thresholds;
  if (!sol.degenerate) {
    if (sol.lower) thresholds.push_back(*sol.lower);
    thresholds.push_back(sol.upper);
  }
  double worst = 0.0;
  for (double t : thresholds) {
    double nearest = std::numeric_limits<double>::infinity();
    for (double e : num.boundary_estimates) nearest = std::min(nearest, std::abs(std::log(e / t)));
    worst = std::max(worst, nearest);
  }
  const bool count_ok = num.boundary_estimates.size() == thresholds.size();
  Json est = Json::array();
  for (double e : num.boundary_estimates) est.push_back(e);
  s.add("lcp_boundary", worst, 0.0, 2.0 * num.log_step, count_ok && worst <= 2.0 * num.log_step,
        Json{{"estimates", est}, {"log_step", num.log_step}});
}

void mc_checks(Suite& s, const ValidatedModel& model, const FreeBoundarySolution& sol, const VerifyConfig& cfg) {
  McConfig mc;
  mc.n_paths = cfg.n_paths;
  mc.dt = cfg.dt;
  mc.t_max = cfg.t_max;
  mc.seed = cfg.seed;
  mc.workers = cfg.workers;
  mc.max_tail_bound = cfg.max_tail_bound;

  struct Named {
    std::string label;
    Policy policy;
  };
  std::vector<Named> policies{{"stop_immediately", StopImmediately{}}};
  const Policy optimal = closed_form_policy(model);
  if (!sol.degenerate) {
    policies.push_back({"closed_form", optimal});
    if (const auto* u = std::get_if<PhiUpper>(&optimal)) {
      policies.push_back({"off_threshold", PhiUpper{u->b * cfg.off_threshold}});
    } else if (const auto* b = std::get_if<PhiBand>(&optimal)) {
      const PhiBand off{b->a / cfg.off_threshold, b->b * cfg.off_threshold};
      if (off.a < off.b) policies.push_back({"off_threshold", off});
    }
  }

  // Same seed would reuse the Brownian increments in both estimators; the
  // combined SE below assumes independent samples.
  McConfig mc_p0 = mc;
  mc_p0.seed = mc.seed + 1;

  for (const auto& [label, policy] : policies) {
    const McEstimate full = evaluate_policy_full(model, policy, mc);
    const McEstimate p0 = evaluate_policy_p0(model, policy, mc_p0);
    const double tol = 3.0 * std::hypot(full.std_error, p0.std_error);
    s.near("identity." + label, full.mean - p0.mean, 0.0, tol,
           Json{{"policy", to_json(policy)}, {"full", to_json(full)}, {"p0", to_json(p0)}});
    if (label == "closed_form") {
      const double value = value_original(sol, model, model.phi());
      const double allowance = discretization_allowance(model, policy, cfg.dt);
      s.near("value_reproduction", full.mean, value, 3.0 * full.std_error + full.tail_bound + allowance,
             Json{{"allowance", allowance}, {"tail_bound", full.tail_bound}, {"stderr", full.std_error}});
    }
  }

  if (model.kind() == PayoffKind::SeqTesting) return;
  const double b = sol.upper;
  const double reference = b * cfg.perturb_threshold;
  const ScanResult scan = optimality_scan(model, log_grid(b / 4.0, 4.0 * b, cfg.scan_points), mc, reference);
  Json table = Json::array();
  for (const auto& e : scan.entries)
    table.push_back(Json{{"threshold", e.threshold},
                         {"mean", e.estimate.mean},
                         {"stderr", e.estimate.std_error},
                         {"gap", e.gap_to_reference},
                         {"gap_stderr", e.gap_to_reference_se}});
  const auto& best = scan.entries[scan.best_index];
  s.add("optimality_scan", best.gap_to_reference, 0.0, 3.0 * best.gap_to_reference_se, scan.reference_within_3se,
        Json{{"reference_threshold", reference},
             {"best_threshold", best.threshold},
             {"sense", model.kind() == PayoffKind::Hiring ? "max" : "min"},
             {"candidates", table}});
}

}  // namespace

bool VerifyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const char* tool_version() noexcept { return HSTOP_VERSION_STRING; }

VerifyConfig verify_config_from_json(const Json& o) {
  if (!o.is_object()) throw InvalidArgument("verify config must be a JSON object");
  VerifyConfig c;
  for (const auto& [key, v] : o.items()) {
    auto number = [&]() {
      if (!v.is_number()) throw InvalidArgument("verify config: " + key + " must be a number");
      return v.get<double>();
    };
    auto count = [&]() {
      if (!v.is_number_integer() || v.get<long long>() < 0)
        throw InvalidArgument("verify config: " + key + " must be a non-negative integer");
      return v.get<unsigned long long>();
    };
    if (key == "n_paths") c.n_paths = count();
    else if (key == "dt") c.dt = number();
    else if (key == "t_max") c.t_max = v.is_null() ? std::nullopt : std::optional<double>(number());
    else if (key == "seed") c.seed = count();
    else if (key == "workers") c.workers = static_cast<unsigned>(count());
    else if (key == "max_tail_bound") c.max_tail_bound = number();
    else if (key == "grid_n") c.grid_n = static_cast<int>(count());
    else if (key == "phi_min") c.phi_min = number();
    else if (key == "phi_max") c.phi_max = number();
    else if (key == "relaxation") c.relaxation = number();
    else if (key == "perturb_threshold") c.perturb_threshold = number();
    else if (key == "off_threshold") c.off_threshold = number();
    else if (key == "scan_points") c.scan_points = count();
    else throw InvalidArgument("verify config: unknown key " + key);
  }
  if (!(c.dt > 0.0)) throw InvalidArgument("verify config: dt must be positive");
  if (!(c.perturb_threshold > 0.0) || !(c.off_threshold > 0.0))
    throw InvalidArgument("verify config: threshold factors must be positive");
  if (c.scan_points == 0) throw InvalidArgument("verify config: scan_points must be positive");
  return c;
}

Json to_json(const VerifyConfig& c) {
  return Json{{"n_paths", c.n_paths},
              {"dt", c.dt},
              {"t_max", c.t_max ? Json(*c.t_max) : Json(nullptr)},
              {"seed", c.seed},
              {"max_tail_bound", c.max_tail_bound},
              {"grid_n", c.grid_n},
              {"phi_min", c.phi_min},
              {"phi_max", c.phi_max},
              {"relaxation", c.relaxation},
              {"perturb_threshold", c.perturb_threshold},
              {"off_threshold", c.off_threshold},
              {"scan_points", c.scan_points}};
}

VerifyReport run_verify(const ValidatedModel& model, const VerifyConfig& cfg) {
  if (!(model.spec().prior_pi < 1.0)) throw InvalidArgument("verify needs prior_pi < 1");
  Suite s;
  FreeBoundarySolution sol;
  try {
    sol = solve(model);
  } catch (const DegenerateRegion& e) {
    sol = e.immediate_stop();
  }
  closed_form_checks(s, model, sol);
  if (cfg.grid_n > 0) lcp_checks(s, model, sol, cfg);
  if (cfg.n_paths > 0) mc_checks(s, model, sol, cfg);
  return s.report;
}

Json report_json(const ValidatedModel& model, const Json& overrides, const VerifyConfig& config,
                 const VerifyReport& report) {
  Json checks = Json::array();
  for (const auto& c : report.checks)
    checks.push_back(Json{{"name", c.name},
                          {"estimate", c.estimate},
                          {"reference", c.reference},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass},
                          {"detail", c.detail}});
  return Json{{"tool_version", tool_version()},
              {"model", to_json(model.spec())},
              {"overrides", overrides},
              {"seed", config.seed},
              {"config", to_json(config)},
              {"checks", checks},
              {"all_pass", report.all_pass()}};
}

}  // namespace hstop
