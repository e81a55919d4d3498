#pragma once

// Problem data: hidden two-state drift, state-dependent exponential horizon,
// the three supported payoff families and the prior on the hidden state.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hstop/error.hpp"

namespace hstop {

enum class DriftForm {
  Arithmetic,  // mu_i(x) = mu_i, sigma(x) = sigma
  Geometric,   // mu_i(x) = mu_i x, sigma(x) = sigma x
};

/// Hire (payoff d if theta=1, -c if theta=0) discounted at r; lost at the horizon.
struct HiringPayoff {
  double c = 1.0;
  double d = 1.0;
  double r = 1.0;
};

/// Close a short position: cost x e^{-rt} at the stop or at the recall time.
struct ShortPositionPayoff {
  double r = 0.0;
};

/// Bayesian test of the drift with observation cost c per unit time.
struct SeqTestingPayoff {
  double c = 0.1;
};

using PayoffSpec = std::variant<HiringPayoff, ShortPositionPayoff, SeqTestingPayoff>;

enum class PayoffKind { Hiring, ShortPosition, SeqTesting };

PayoffKind payoff_kind(const PayoffSpec& payoff) noexcept;
const char* to_string(PayoffKind kind) noexcept;
const char* to_string(DriftForm form) noexcept;

/// Exponential survival law P(gamma > t | theta = i) = exp(-rate t); rate 0 is an infinite horizon.
class SurvivalLaw {
 public:
  explicit SurvivalLaw(double rate = 0.0) : rate_(rate) {}

  double rate() const noexcept { return rate_; }
  double survival(double t) const noexcept { return std::exp(-rate_ * t); }
  double log_survival(double t) const noexcept { return -rate_ * t; }
  /// Inverse-CDF draw from u in (0, 1]; +inf when the rate is zero.
  double sample(double u) const noexcept {
    if (rate_ == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(u) / rate_;
  }

 private:
  double rate_;
};

/// The observation dynamics and horizon laws, without the payoff.
struct Dynamics {
  DriftForm drift_form = DriftForm::Arithmetic;
  double mu0 = 0.0;
  double mu1 = 1.0;
  double sigma = 1.0;
  SurvivalLaw horizon0{};
  SurvivalLaw horizon1{};
  double prior_pi = 0.5;
  double x0 = 0.0;

  double omega() const noexcept { return (mu1 - mu0) / sigma; }
  /// Drift of the filter coordinate y = x (arithmetic) or y = ln x (geometric) in state i.
  double coordinate_drift(int state) const noexcept;
  /// Filter coordinate of an observation.
  double coordinate(double x) const noexcept {
    return drift_form == DriftForm::Geometric ? std::log(x) : x;
  }
  /// d/dt log(F1/F0); lambda0 - lambda1 for exponential laws.
  double f_ratio_rate() const noexcept { return horizon0.rate() - horizon1.rate(); }
  const SurvivalLaw& horizon(int state) const noexcept { return state == 0 ? horizon0 : horizon1; }
  /// phi = pi / (1 - pi). Throws DegeneratePrior when pi = 1.
  double phi() const;
};

/// Checks sigma, rates, prior and x0; returns every violation found.
std::vector<Violation> check_dynamics(const Dynamics& dyn);
/// Throws ValidationError unless check_dynamics is empty.
void validate_dynamics(const Dynamics& dyn);

struct ModelSpec {
  double mu0 = 0.0;
  double mu1 = 1.0;
  DriftForm drift_form = DriftForm::Arithmetic;
  double sigma = 1.0;
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double prior_pi = 0.5;
  PayoffSpec payoff = HiringPayoff{};
  double x0 = 0.0;
};

struct DerivedConstants {
  double omega = 0.0;
  std::optional<double> phi0;  // absent when prior_pi = 1
  double f_ratio_rate = 0.0;
};

/// Every invariant violation of a spec, payoff-specific ones included.
std::vector<Violation> check(const ModelSpec& spec);

/// A ModelSpec whose invariants hold. Immutable.
class ValidatedModel {
 public:
  /// Throws ValidationError listing every violated invariant.
  static ValidatedModel validate(const ModelSpec& spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  const Dynamics& dynamics() const noexcept { return dynamics_; }
  const DerivedConstants& derived() const noexcept { return derived_; }
  PayoffKind kind() const noexcept { return payoff_kind(spec_.payoff); }

  /// phi = pi/(1-pi); throws DegeneratePrior when prior_pi = 1.
  double phi() const;
  /// exp(-lambda_state t). Throws InvalidArgument for t < 0 or state not in {0,1}.
  double survival(int state, double t) const;

  template <class P>
  const P& payoff() const {
    return std::get<P>(spec_.payoff);
  }

 private:
  ValidatedModel(ModelSpec spec, Dynamics dyn, DerivedConstants derived)
      : spec_(std::move(spec)), dynamics_(dyn), derived_(derived) {}

  ModelSpec spec_;
  Dynamics dynamics_;
  DerivedConstants derived_;
};

Dynamics to_dynamics(const ModelSpec& spec) noexcept;

/// Free-function form of ValidatedModel::survival.
double survival(const ValidatedModel& model, int state, double t);

}  // namespace hstop
