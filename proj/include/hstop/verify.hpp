#pragma once

// The model-level check suite behind `hstop verify`: closed-form residuals,
// finite-difference oracle agreement and Monte Carlo identity, value and
// optimality checks. Reports carry no timestamps so equal inputs give equal bytes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hstop/model.hpp"
#include "hstop/serialize.hpp"

namespace hstop {

struct VerifyConfig {
  std::size_t n_paths = 20000;  // 0 skips the Monte Carlo checks
  double dt = 1e-3;
  std::optional<double> t_max;  // per policy from max_tail_bound when absent
  std::uint64_t seed = 0;
  unsigned workers = 0;
  double max_tail_bound = 1e-4;
  int grid_n = 4001;
  double phi_min = 1e-4;
  double phi_max = 1e4;
  double relaxation = 0.0;         // PSOR factor, 0 = automatic
  double perturb_threshold = 1.0;  // scales the reference threshold of the optimality check
  double off_threshold = 0.5;      // scales the closed-form upper threshold for the off-policy checks
  std::size_t scan_points = 9;
};

/// Reads the keys of VerifyConfig from an object; unknown keys are an InvalidArgument.
VerifyConfig verify_config_from_json(const Json& overrides);
Json to_json(const VerifyConfig& config);

struct CheckResult {
  std::string name;
  double estimate = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  Json detail = Json::object();
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

VerifyReport run_verify(const ValidatedModel& model, const VerifyConfig& config);

/// {tool_version, model, overrides, seed, config, checks, all_pass}.
Json report_json(const ValidatedModel& model, const Json& overrides, const VerifyConfig& config,
                 const VerifyReport& report);

const char* tool_version() noexcept;

}  // namespace hstop
