#ifndef HSTOP_HSTOP_H
#define HSTOP_HSTOP_H

/* C interface of libhstop: optimal stopping with a hidden drift and a random
 * horizon. Objects are opaque handles; every call returns a status code and
 * leaves a JSON error document in hstop_last_error() on failure. Strings
 * returned through char** are owned by the caller and released with
 * hstop_free_string(). */

#include <stddef.h>
#include <stdint.h>

#if defined(HSTOP_BUILDING_LIBRARY)
#define HSTOP_API __attribute__((visibility("default")))
#else
#define HSTOP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hstop_status {
  HSTOP_OK = 0,
  HSTOP_ERR_VALIDATION = 1,       /* model or config rejected */
  HSTOP_ERR_SOLVER = 2,           /* numerical failure, degenerate region */
  HSTOP_ERR_VERIFICATION = 3,     /* a verify check failed (report still produced) */
  HSTOP_ERR_INVALID_ARGUMENT = 4, /* null pointer, bad option value */
  HSTOP_ERR_NOT_FOUND = 5,        /* model file missing or unreadable */
  HSTOP_ERR_INTERNAL = 6
} hstop_status;

typedef struct hstop_model hstop_model;
typedef struct hstop_solution hstop_solution;

HSTOP_API const char* hstop_version(void);

/* {"error": code, "message": text[, "violations": [{field, reason}]]} for the
 * last failing call on this thread; "{}" if none. Owned by the library. */
HSTOP_API const char* hstop_last_error(void);
HSTOP_API void hstop_free_string(char* s);

/* Model documents: drift_form, mu0, mu1, sigma, lambda0, lambda1, prior_pi, x0, payoff. */
HSTOP_API hstop_status hstop_model_parse(const char* json, hstop_model** out);
HSTOP_API hstop_status hstop_model_load(const char* path, hstop_model** out);
HSTOP_API void hstop_model_free(hstop_model* model);
/* Resolved model (defaults filled in). */
HSTOP_API hstop_status hstop_model_json(const hstop_model* model, char** out);
HSTOP_API hstop_status hstop_model_phi(const hstop_model* model, double* out);
HSTOP_API hstop_status hstop_model_survival(const hstop_model* model, int state, double t, double* out);

/* Closed-form solution. A seq_testing model without a continuation region gives
 * HSTOP_ERR_SOLVER with error code "degenerate_region". */
HSTOP_API hstop_status hstop_solve(const hstop_model* model, hstop_solution** out);
HSTOP_API void hstop_solution_free(hstop_solution* solution);
/* {kind, gamma, thresholds, coefficients, degenerate} */
HSTOP_API hstop_status hstop_solution_json(const hstop_solution* solution, char** out);
/* Reduced-scale value v(phi) and original-scale value V(phi). */
HSTOP_API hstop_status hstop_solution_value(const hstop_solution* solution, double phi, double* v, double* V);
/* CSV phi,v,V on n log-spaced points in [phi_min, phi_max]. */
HSTOP_API hstop_status hstop_value_table_csv(const hstop_solution* solution, double phi_min, double phi_max,
                                             size_t n, char** out);

/* One simulated path as CSV. options: {"measure": "ppi"|"p0", "t_max", "dt", "seed",
 * "filter": bool}. path_id >= 0 adds a leading path_id column; include_header
 * emits the header row. */
HSTOP_API hstop_status hstop_simulate_path_csv(const hstop_model* model, const char* options_json,
                                               uint64_t path_index, int64_t path_id, int include_header,
                                               char** out);

/* Finite-difference solve. options: {"phi_min", "phi_max", "grid_n", "relaxation"}.
 * csv: phi,value,obstacle,active. json: {boundary_estimates, sweeps, relaxation, log_step}. */
HSTOP_API hstop_status hstop_boundary(const hstop_model* model, const char* options_json, char** csv,
                                      char** json);

/* Runs the check suite. config holds the overrides (n_paths, dt, t_max, seed,
 * workers, ...). The report is written even when a check fails; the status is
 * then HSTOP_ERR_VERIFICATION and *all_pass is 0. */
HSTOP_API hstop_status hstop_verify(const hstop_model* model, const char* config_json, char** report,
                                    int* all_pass);

/* Monte Carlo value of one policy. request: {"policy": {...}, "measure": "ppi"|"p0",
 * "n_paths", "dt", "t_max", "seed", "workers", "max_tail_bound"}. out: McEstimate JSON. */
HSTOP_API hstop_status hstop_evaluate_policy(const hstop_model* model, const char* request_json, char** out);

#ifdef __cplusplus
}
#endif

#endif /* HSTOP_HSTOP_H */
