#include "hstop/hstop.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hstop/closed_form.hpp"
#include "hstop/fbp_numeric.hpp"
#include "hstop/filter.hpp"
#include "hstop/mc_harness.hpp"
#include "hstop/serialize.hpp"
#include "hstop/simulate.hpp"
#include "hstop/verify.hpp"

struct hstop_model {
  hstop::ValidatedModel model;
};

struct hstop_solution {
  hstop::FreeBoundarySolution solution;
  hstop::ValidatedModel model;
};

namespace {

using hstop::Json;

thread_local std::string last_error = "{}";

hstop_status fail(hstop_status status, const char* code, const std::string& message, Json extra = Json::object()) {
  Json j{{"error", code}, {"message", message}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  last_error = j.dump();
  return status;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Json parse_options(const char* text) {
  if (!text || !*text) return Json::object();
  Json j = Json::parse(text);
  if (!j.is_object()) throw hstop::InvalidArgument("options must be a JSON object");
  return j;
}

template <class F>
hstop_status guarded(F&& body) {
  last_error = "{}";
  try {
    return body();
  } catch (const hstop::ValidationError& e) {
    Json v = Json::array();
    for (const auto& x : e.violations()) v.push_back(Json{{"field", x.field}, {"reason", x.reason}});
    return fail(HSTOP_ERR_VALIDATION, e.code(), e.what(), Json{{"violations", v}});
  } catch (const hstop::DegeneratePrior& e) {
    return fail(HSTOP_ERR_VALIDATION, e.code(), e.what());
  } catch (const hstop::SolverError& e) {
    return fail(HSTOP_ERR_SOLVER, e.code(), e.what());
  } catch (const hstop::Error& e) {
    return fail(HSTOP_ERR_INVALID_ARGUMENT, e.code(), e.what());
  } catch (const Json::exception& e) {
    return fail(HSTOP_ERR_INVALID_ARGUMENT, "invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail(HSTOP_ERR_INTERNAL, "internal", e.what());
  } catch (...) {
    return fail(HSTOP_ERR_INTERNAL, "internal", "unknown exception");
  }
}

#define HSTOP_REQUIRE(ptr)                                                                     \
  do {                                                                                         \
    if (!(ptr)) return fail(HSTOP_ERR_INVALID_ARGUMENT, "invalid_argument", #ptr " is null"); \
  } while (0)

double number_or(const Json& j, const char* key, double fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  if (!j[key].is_number()) throw hstop::InvalidArgument(std::string(key) + " must be a number");
  return j[key].get<double>();
}

std::uint64_t count_or(const Json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  if (!j[key].is_number_integer() || j[key].get<long long>() < 0)
    throw hstop::InvalidArgument(std::string(key) + " must be a non-negative integer");
  return j[key].get<std::uint64_t>();
}

hstop::Measure measure_of(const Json& j) {
  const std::string m = j.value("measure", std::string("ppi"));
  if (m == "ppi") return hstop::Measure::Ppi;
  if (m == "p0") return hstop::Measure::P0;
  throw hstop::InvalidArgument("measure must be \"ppi\" or \"p0\"");
}

}  // namespace

extern "C" {

const char* hstop_version(void) { return hstop::tool_version(); }

const char* hstop_last_error(void) { return last_error.c_str(); }

void hstop_free_string(char* s) { std::free(s); }

hstop_status hstop_model_parse(const char* json, hstop_model** out) {
  HSTOP_REQUIRE(json);
  HSTOP_REQUIRE(out);
  return guarded([&] {
    *out = new hstop_model{hstop::parse_model_text(json)};
    return HSTOP_OK;
  });
}

hstop_status hstop_model_load(const char* path, hstop_model** out) {
  HSTOP_REQUIRE(path);
  HSTOP_REQUIRE(out);
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(HSTOP_ERR_NOT_FOUND, "model_not_found", std::string("cannot open ") + path);
  std::ostringstream text;
  text << in.rdbuf();
  return hstop_model_parse(text.str().c_str(), out);
}

void hstop_model_free(hstop_model* model) { delete model; }

hstop_status hstop_model_json(const hstop_model* model, char** out) {
  HSTOP_REQUIRE(model);
  HSTOP_REQUIRE(out);
  return guarded([&] {
    *out = copy_string(hstop::to_json(model->model.spec()).dump());
    return HSTOP_OK;
  });
}

hstop_status hstop_model_phi(const hstop_model* model, double* out) {
  HSTOP_REQUIRE(model);
  HSTOP_REQUIRE(out);
  return guarded([&] {
    *out = model->model.phi();
    return HSTOP_OK;
  });
}

hstop_status hstop_model_survival(const hstop_model* model, int state, double t, double* out) {
  HSTOP_REQUIRE(model);
  HSTOP_REQUIRE(out);
  return guarded([&] {
    *out = model->model.survival(state, t);
    return HSTOP_OK;
  });
}

hstop_status hstop_solve(const hstop_model* model, hstop_solution** out) {
  HSTOP_REQUIRE(model);
  HSTOP_REQUIRE(out);
  return guarded([&] {
    *out = new hstop_solution{hstop::solve(model->model), model->model};
    return HSTOP_OK;
  });
}

void hstop_solution_free(hstop_solution* solution) { delete solution; }

hstop_status hstop_solution_json(const hstop_solution* solution, char** out) {
  HSTOP_REQUIRE(solution);
  HSTOP_REQUIRE(out);
  return guarded([&] {
    *out = copy_string(hstop::to_json(solution->solution).dump());
    return HSTOP_OK;
  });
}

hstop_status hstop_solution_value(const hstop_solution* solution, double phi, double* v, double* V) {
  HSTOP_REQUIRE(solution);
  return guarded([&] {
    if (!(phi >= 0.0)) throw hstop::InvalidArgument("phi must be non-negative");
    if (v) *v = solution->solution.value_phi(phi);
    if (V) *V = hstop::value_original(solution->solution, solution->model, phi);
    return HSTOP_OK;
  });
}

hstop_status hstop_value_table_csv(const hstop_solution* solution, double phi_min, double phi_max, size_t n,
                                   char** out) {
  HSTOP_REQUIRE(solution);
  HSTOP_REQUIRE(out);
  return guarded([&] {
    const auto phis = hstop::log_grid(phi_min, phi_max, n);
    *out = copy_string(hstop::value_table_csv(solution->solution, solution->model, phis));
    return HSTOP_OK;
  });
}

hstop_status hstop_simulate_path_csv(const hstop_model* model, const char* options_json, uint64_t path_index,
                                     int64_t path_id, int include_header, char** out) {
  HSTOP_REQUIRE(model);
  HSTOP_REQUIRE(out);
  return guarded([&] {
    const Json opts = parse_options(options_json);
    const double t_max = number_or(opts, "t_max", 1.0);
    const double dt = number_or(opts, "dt", 1e-3);
    const hstop::RngStream stream{count_or(opts, "seed", 0), path_index};
    const bool with_filter = opts.value("filter", false);
    const auto& dyn = model->model.dynamics();
    const hstop::PathBundle path = measure_of(opts) == hstop::Measure::P0
                                       ? hstop::simulate_p0(dyn, t_max, dt, stream)
                                       : hstop::simulate_ppi(dyn, t_max, dt, stream);
    std::optional<hstop::FilterPath> filter;
    if (with_filter) filter = hstop::filter_explicit(dyn, path);
    const std::optional<std::size_t> id =
        path_id >= 0 ? std::optional<std::size_t>(static_cast<std::size_t>(path_id)) : std::nullopt;
    *out = copy_string(hstop::path_csv(path, filter ? &*filter : nullptr, id, include_header != 0));
    return HSTOP_OK;
  });
}

hstop_status hstop_boundary(const hstop_model* model, const char* options_json, char** csv, char** json) {
  HSTOP_REQUIRE(model);
  return guarded([&] {
    const Json opts = parse_options(options_json);
    hstop::LcpOptions lcp;
    lcp.relaxation = number_or(opts, "relaxation", 0.0);
    const auto problem = hstop::build_lcp(model->model, number_or(opts, "phi_min", 1e-4),
                                          number_or(opts, "phi_max", 1e4),
                                          static_cast<int>(count_or(opts, "grid_n", 4001)));
    const hstop::NumericSolution num = hstop::solve_lcp(problem, lcp);
    if (csv) *csv = copy_string(hstop::boundary_csv(num));
    if (json) {
      Json est = Json::array();
      for (double b : num.boundary_estimates) est.push_back(b);
      *json = copy_string(Json{{"boundary_estimates", est},
                               {"sweeps", num.sweeps},
                               {"relaxation", num.relaxation},
                               {"log_step", num.log_step},
                               {"last_update", num.last_update}}
                              .dump());
    }
    return HSTOP_OK;
  });
}

hstop_status hstop_verify(const hstop_model* model, const char* config_json, char** report, int* all_pass) {
  HSTOP_REQUIRE(model);
  HSTOP_REQUIRE(report);
  return guarded([&] {
    const Json overrides = parse_options(config_json);
    const hstop::VerifyConfig config = hstop::verify_config_from_json(overrides);
    const hstop::VerifyReport result = hstop::run_verify(model->model, config);
    *report = copy_string(hstop::report_json(model->model, overrides, config, result).dump(2) + "\n");
    const bool ok = result.all_pass();
    if (all_pass) *all_pass = ok ? 1 : 0;
    if (!ok) return fail(HSTOP_ERR_VERIFICATION, "verification_failed", "one or more checks failed");
    return HSTOP_OK;
  });
}

hstop_status hstop_evaluate_policy(const hstop_model* model, const char* request_json, char** out) {
  HSTOP_REQUIRE(model);
  HSTOP_REQUIRE(out);
  return guarded([&] {
    const Json req = parse_options(request_json);
    if (!req.contains("policy")) throw hstop::InvalidArgument("request needs a policy");
    const hstop::Policy policy = hstop::policy_from_json(req["policy"]);
    hstop::McConfig config;
    config.n_paths = count_or(req, "n_paths", config.n_paths);
    config.dt = number_or(req, "dt", config.dt);
    if (req.contains("t_max") && !req["t_max"].is_null()) config.t_max = number_or(req, "t_max", 0.0);
    config.seed = count_or(req, "seed", 0);
    config.workers = static_cast<unsigned>(count_or(req, "workers", 0));
    if (req.contains("max_tail_bound")) config.max_tail_bound = number_or(req, "max_tail_bound", 0.0);
    const hstop::McEstimate e = measure_of(req) == hstop::Measure::P0
                                    ? hstop::evaluate_policy_p0(model->model, policy, config)
                                    : hstop::evaluate_policy_full(model->model, policy, config);
    *out = copy_string(hstop::to_json(e).dump());
    return HSTOP_OK;
  });
}

}  // extern "C"
