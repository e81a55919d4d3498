#pragma once

// Monte Carlo valuation of stopping policies under the original measure and
// under the reference measure P0, plus a common-random-numbers threshold scan.
// Hitting times are read at grid points; no bridge correction.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hstop/model.hpp"

namespace hstop {

/// Stop when Phi° >= b.
struct PhiUpper {
  double b = 1.0;
};
/// Stop when Phi° <= a or Phi° >= b.
struct PhiBand {
  double a = 0.5;
  double b = 2.0;
};
/// Stop when X_t >= boundary(t). Hiring only.
struct XBoundary {
  std::function<double(double)> boundary;
};
struct StopImmediately {};
struct NeverStop {};

using Policy = std::variant<PhiUpper, PhiBand, XBoundary, StopImmediately, NeverStop>;

/// Throws InvalidArgument for non-positive thresholds, a >= b or an empty boundary.
void validate_policy(const Policy& policy);
std::string describe(const Policy& policy);

/// The closed-form optimal policy of the model (thresholds on Phi°).
Policy closed_form_policy(const ValidatedModel& model);

/// Arbitrary payoff: stopping reward g, horizon payoff h, running rate on the
/// left-rectangle grid. All take (t, x, theta).
struct GenericObjective {
  std::function<double(double, double, int)> g;
  std::function<double(double, double, int)> h;        // empty means h = 0
  std::function<double(double, double, int)> running;  // empty means 0
  bool force_stop_at_t_max = false;  // otherwise paths alive at t_max forfeit
  std::function<double(double)> tail_bound;  // original-scale bound as a function of t_max; empty = unknown
};

struct McConfig {
  std::size_t n_paths = 100000;
  double dt = 1e-3;
  std::optional<double> t_max;           // chosen from max_tail_bound when absent
  std::uint64_t seed = 0;
  unsigned workers = 0;                  // 0 = hardware concurrency
  std::optional<double> max_tail_bound;  // default 1e-4 when t_max is absent
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(n_paths)
  std::size_t n_paths = 0;
  double dt = 0.0;
  double t_max = 0.0;
  std::uint64_t master_seed = 0;
  double tail_bound = 0.0;
};

inline constexpr double kDefaultTailBound = 1e-4;

/// Analytic bound on |value truncated at t_max - value|, original scale.
/// +inf when no bound is available (SeqTesting NeverStop).
double tail_bound(const ValidatedModel& model, const Policy& policy, double t_max);
/// Smallest multiple of dt whose tail bound is <= bound. Throws InvalidArgument if none exists.
double required_t_max(const ValidatedModel& model, const Policy& policy, double dt, double bound);

/// Hitting-time bias allowance for grid monitoring: the change of the continuously
/// monitored policy value when thresholds move outward by a factor exp(2 * 0.5826 * omega * sqrt(dt)).
/// Original scale; zero for policies without thresholds.
double discretization_allowance(const ValidatedModel& model, const Policy& policy, double dt);

McEstimate evaluate_policy_full(const ValidatedModel& model, const Policy& policy, const McConfig& config);
McEstimate evaluate_policy_p0(const ValidatedModel& model, const Policy& policy, const McConfig& config);

McEstimate evaluate_policy_full(const ValidatedModel& model, const GenericObjective& objective, const Policy& policy,
                                const McConfig& config);
McEstimate evaluate_policy_p0(const ValidatedModel& model, const GenericObjective& objective, const Policy& policy,
                              const McConfig& config);

struct ScanEntry {
  double threshold = 0.0;
  McEstimate estimate;
  double gap_to_reference = 0.0;     // sign-adjusted: best-sense value minus reference, per path mean
  double gap_to_reference_se = 0.0;  // paired standard error of that mean
};

struct ScanResult {
  std::vector<ScanEntry> entries;  // sorted by threshold
  std::size_t best_index = 0;
  std::size_t reference_index = 0;
  /// best's gap to the reference within 3 paired standard errors
  bool reference_within_3se = false;
};

/// Full-measure values of PhiUpper(b) for every b in the grid and the reference
/// threshold (closed-form one when absent), all from the same paths. Hiring is
/// maximised, ShortPosition minimised. Throws InvalidArgument for an empty grid
/// or a SeqTesting model.
ScanResult optimality_scan(const ValidatedModel& model, const std::vector<double>& grid, const McConfig& config,
                           std::optional<double> reference = std::nullopt);

/// n log-uniform points in [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace hstop
