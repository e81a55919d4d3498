#include "hstop/model.hpp"

#include <sstream>

namespace hstop {

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].field << ": " << violations[i].reason;
  }
  return os.str();
}

void require_finite(std::vector<Violation>& out, const char* field, double value) {
  if (!std::isfinite(value)) out.push_back({field, "must be finite"});
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

PayoffKind payoff_kind(const PayoffSpec& payoff) noexcept {
  switch (payoff.index()) {
    case 0: return PayoffKind::Hiring;
    case 1: return PayoffKind::ShortPosition;
    default: return PayoffKind::SeqTesting;
  }
}

const char* to_string(PayoffKind kind) noexcept {
  switch (kind) {
    case PayoffKind::Hiring: return "hiring";
    case PayoffKind::ShortPosition: return "short_position";
    case PayoffKind::SeqTesting: return "seq_testing";
  }
  return "unknown";
}

const char* to_string(DriftForm form) noexcept {
  return form == DriftForm::Geometric ? "geometric" : "arithmetic";
}

double Dynamics::coordinate_drift(int state) const noexcept {
  const double mu = state == 0 ? mu0 : mu1;
  return drift_form == DriftForm::Geometric ? mu - 0.5 * sigma * sigma : mu;
}

double Dynamics::phi() const {
  if (prior_pi >= 1.0) throw DegeneratePrior("prior_pi = 1: likelihood ratio phi is infinite");
  return prior_pi / (1.0 - prior_pi);
}

std::vector<Violation> check_dynamics(const Dynamics& dyn) {
  std::vector<Violation> out;
  require_finite(out, "mu0", dyn.mu0);
  require_finite(out, "mu1", dyn.mu1);
  require_finite(out, "x0", dyn.x0);
  if (!(dyn.sigma > 0.0) || !std::isfinite(dyn.sigma)) out.push_back({"sigma", "sigma must be positive"});
  if (!(dyn.horizon0.rate() >= 0.0) || !std::isfinite(dyn.horizon0.rate()))
    out.push_back({"lambda0", "lambda0 must be non-negative"});
  if (!(dyn.horizon1.rate() >= 0.0) || !std::isfinite(dyn.horizon1.rate()))
    out.push_back({"lambda1", "lambda1 must be non-negative"});
  if (!(dyn.prior_pi >= 0.0 && dyn.prior_pi <= 1.0))
    out.push_back({"prior_pi", "prior_pi must lie in [0,1]"});
  if (dyn.drift_form == DriftForm::Geometric && !(dyn.x0 > 0.0))
    out.push_back({"x0", "geometric drift requires x0 > 0"});
  return out;
}

void validate_dynamics(const Dynamics& dyn) {
  auto violations = check_dynamics(dyn);
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

Dynamics to_dynamics(const ModelSpec& spec) noexcept {
  Dynamics dyn;
  dyn.drift_form = spec.drift_form;
  dyn.mu0 = spec.mu0;
  dyn.mu1 = spec.mu1;
  dyn.sigma = spec.sigma;
  dyn.horizon0 = SurvivalLaw(spec.lambda0);
  dyn.horizon1 = SurvivalLaw(spec.lambda1);
  dyn.prior_pi = spec.prior_pi;
  dyn.x0 = spec.x0;
  return dyn;
}

std::vector<Violation> check(const ModelSpec& spec) {
  auto out = check_dynamics(to_dynamics(spec));

  struct PayoffChecker {
    const ModelSpec& s;
    std::vector<Violation>& out;

    void operator()(const HiringPayoff& p) const {
      if (!(s.mu0 < s.mu1)) out.push_back({"mu1", "hiring requires mu0 < mu1"});
      if (!(p.c > 0.0) || !std::isfinite(p.c)) out.push_back({"payoff.c", "c must be positive"});
      if (!(p.d > 0.0) || !std::isfinite(p.d)) out.push_back({"payoff.d", "d must be positive"});
      if (!(p.r > 0.0) || !std::isfinite(p.r)) out.push_back({"payoff.r", "r must be positive"});
    }
    void operator()(const ShortPositionPayoff& p) const {
      if (s.drift_form != DriftForm::Geometric)
        out.push_back({"drift_form", "short_position requires geometric drift"});
      if (!(s.mu0 < p.r && p.r < s.mu1)) out.push_back({"payoff.r", "r not in (mu0,mu1)"});
      if (s.lambda1 != 0.0) out.push_back({"lambda1", "short_position requires lambda1 = 0"});
      if (!(s.lambda0 > 0.0)) out.push_back({"lambda0", "short_position requires lambda0 > 0"});
    }
    void operator()(const SeqTestingPayoff& p) const {
      if (!(s.mu0 < s.mu1)) out.push_back({"mu1", "seq_testing requires mu0 < mu1"});
      if (!(p.c > 0.0) || !std::isfinite(p.c)) out.push_back({"payoff.c", "c must be positive"});
      if (s.lambda1 != 0.0) out.push_back({"lambda1", "seq_testing requires lambda1 = 0"});
      if (!(s.lambda0 > 0.0)) out.push_back({"lambda0", "seq_testing requires lambda0 > 0"});
    }
  };
  std::visit(PayoffChecker{spec, out}, spec.payoff);
  return out;
}

ValidatedModel ValidatedModel::validate(const ModelSpec& spec) {
  auto violations = check(spec);
  if (!violations.empty()) throw ValidationError(std::move(violations));

  Dynamics dyn = to_dynamics(spec);
  DerivedConstants derived;
  derived.omega = dyn.omega();
  if (spec.prior_pi < 1.0) derived.phi0 = spec.prior_pi / (1.0 - spec.prior_pi);
  derived.f_ratio_rate = dyn.f_ratio_rate();
  return ValidatedModel(spec, dyn, derived);
}

double ValidatedModel::phi() const {
  if (!derived_.phi0) throw DegeneratePrior("prior_pi = 1: likelihood ratio phi is infinite");
  return *derived_.phi0;
}

double ValidatedModel::survival(int state, double t) const {
  if (state != 0 && state != 1) throw InvalidArgument("state must be 0 or 1");
  if (!(t >= 0.0)) throw InvalidArgument("survival: t must be non-negative");
  return dynamics_.horizon(state).survival(t);
}

double survival(const ValidatedModel& model, int state, double t) { return model.survival(state, t); }

}  // namespace hstop
