#include "hstop/serialize.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace hstop {

namespace {

class Reader {
 public:
  Reader(const Json& doc, std::string prefix, std::vector<Violation>& out)
      : doc_(doc), prefix_(std::move(prefix)), out_(out) {}

  std::optional<double> number(const char* key, bool required) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) {
      if (required) out_.push_back({field(key), "missing"});
      return std::nullopt;
    }
    if (!it->is_number()) {
      out_.push_back({field(key), "must be a number"});
      return std::nullopt;
    }
    return it->get<double>();
  }

  std::optional<std::string> string(const char* key, bool required) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) {
      if (required) out_.push_back({field(key), "missing"});
      return std::nullopt;
    }
    if (!it->is_string()) {
      out_.push_back({field(key), "must be a string"});
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  const Json* object(const char* key) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) {
      out_.push_back({field(key), "missing"});
      return nullptr;
    }
    if (!it->is_object()) {
      out_.push_back({field(key), "must be an object"});
      return nullptr;
    }
    return &*it;
  }

  void reject_unknown() {
    for (const auto& [key, value] : doc_.items())
      if (!seen_.count(key)) out_.push_back({field(key.c_str()), "unknown key"});
  }

 private:
  std::string field(const char* key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const Json& doc_;
  std::string prefix_;
  std::vector<Violation>& out_;
  std::set<std::string> seen_;
};

std::string bool_cell(bool v) { return v ? "1" : "0"; }

}  // namespace

ModelSpec model_from_json(const Json& doc) {
  std::vector<Violation> errors;
  if (!doc.is_object()) throw ValidationError(std::vector<Violation>{{"$", "model must be a JSON object"}});
  ModelSpec spec;
  Reader r(doc, "", errors);

  if (auto form = r.string("drift_form", false)) {
    if (*form == "arithmetic") spec.drift_form = DriftForm::Arithmetic;
    else if (*form == "geometric") spec.drift_form = DriftForm::Geometric;
    else errors.push_back({"drift_form", "must be \"arithmetic\" or \"geometric\""});
  }
  if (auto v = r.number("mu0", true)) spec.mu0 = *v;
  if (auto v = r.number("mu1", true)) spec.mu1 = *v;
  if (auto v = r.number("sigma", true)) spec.sigma = *v;
  spec.lambda0 = r.number("lambda0", false).value_or(0.0);
  spec.lambda1 = r.number("lambda1", false).value_or(0.0);
  if (auto v = r.number("prior_pi", true)) spec.prior_pi = *v;
  spec.x0 = r.number("x0", false).value_or(spec.drift_form == DriftForm::Geometric ? 1.0 : 0.0);

  if (const Json* p = r.object("payoff")) {
    Reader pr(*p, "payoff", errors);
    const auto kind = pr.string("kind", true);
    if (kind == "hiring") {
      HiringPayoff h;
      if (auto v = pr.number("c", true)) h.c = *v;
      if (auto v = pr.number("d", true)) h.d = *v;
      if (auto v = pr.number("r", true)) h.r = *v;
      spec.payoff = h;
    } else if (kind == "short_position") {
      ShortPositionPayoff s;
      if (auto v = pr.number("r", true)) s.r = *v;
      spec.payoff = s;
    } else if (kind == "seq_testing") {
      SeqTestingPayoff s;
      if (auto v = pr.number("c", true)) s.c = *v;
      spec.payoff = s;
    } else if (kind) {
      errors.push_back({"payoff.kind", "must be one of hiring, short_position, seq_testing"});
    }
    if (kind) pr.reject_unknown();
  }
  r.reject_unknown();
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return spec;
}

ValidatedModel parse_model(const Json& doc) { return ValidatedModel::validate(model_from_json(doc)); }

ValidatedModel parse_model_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::vector<Violation>{{"$", std::string("malformed JSON: ") + e.what()}});
  }
  return parse_model(doc);
}

Json to_json(const ModelSpec& spec) {
  Json j;
  j["drift_form"] = to_string(spec.drift_form);
  j["mu0"] = spec.mu0;
  j["mu1"] = spec.mu1;
  j["sigma"] = spec.sigma;
  j["lambda0"] = spec.lambda0;
  j["lambda1"] = spec.lambda1;
  j["prior_pi"] = spec.prior_pi;
  j["x0"] = spec.x0;
  Json p;
  p["kind"] = to_string(payoff_kind(spec.payoff));
  std::visit(
      [&](const auto& v) {
        using P = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<P, HiringPayoff>) {
          p["c"] = v.c;
          p["d"] = v.d;
          p["r"] = v.r;
        } else if constexpr (std::is_same_v<P, ShortPositionPayoff>) {
          p["r"] = v.r;
        } else {
          p["c"] = v.c;
        }
      },
      spec.payoff);
  j["payoff"] = p;
  return j;
}

Json to_json(const FreeBoundarySolution& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  j["gamma"] = s.gamma_root ? Json(*s.gamma_root) : Json(nullptr);
  Json th = Json::object();
  switch (s.kind) {
    case PayoffKind::Hiring: th["b"] = s.upper; break;
    case PayoffKind::ShortPosition: th["B"] = s.upper; break;
    case PayoffKind::SeqTesting:
      if (!s.degenerate) {
        th["A"] = *s.lower;
        th["B"] = s.upper;
      }
      break;
  }
  j["thresholds"] = th;
  Json co = Json::object();
  if (s.c1) co["C1"] = *s.c1;
  if (s.c2) co["C2"] = *s.c2;
  j["coefficients"] = co;
  j["degenerate"] = s.degenerate;
  return j;
}

Json to_json(const McEstimate& e) {
  Json j;
  j["mean"] = e.mean;
  j["stderr"] = e.std_error;
  j["n_paths"] = e.n_paths;
  j["dt"] = e.dt;
  j["t_max"] = e.t_max;
  j["master_seed"] = e.master_seed;
  j["tail_bound"] = e.tail_bound;
  return j;
}

Policy policy_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
    throw InvalidArgument("policy must be an object with a string \"kind\"");
  const auto kind = doc["kind"].get<std::string>();
  auto num = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_number()) throw InvalidArgument(std::string("policy needs numeric ") + key);
    return doc[key].get<double>();
  };
  Policy p;
  if (kind == "phi_upper") p = PhiUpper{num("b")};
  else if (kind == "phi_band") p = PhiBand{num("a"), num("b")};
  else if (kind == "stop_immediately") p = StopImmediately{};
  else if (kind == "never_stop") p = NeverStop{};
  else throw InvalidArgument("unknown policy kind: " + kind);
  validate_policy(p);
  return p;
}

Json to_json(const Policy& policy) {
  Json j;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PhiUpper>) {
          j["kind"] = "phi_upper";
          j["b"] = p.b;
        } else if constexpr (std::is_same_v<P, PhiBand>) {
          j["kind"] = "phi_band";
          j["a"] = p.a;
          j["b"] = p.b;
        } else if constexpr (std::is_same_v<P, XBoundary>) {
          j["kind"] = "x_boundary";
        } else if constexpr (std::is_same_v<P, StopImmediately>) {
          j["kind"] = "stop_immediately";
        } else {
          j["kind"] = "never_stop";
        }
      },
      policy);
  return j;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string value_table_csv(const FreeBoundarySolution& solution, const ValidatedModel& model,
                            const std::vector<double>& phis) {
  std::string out = "phi,v,V\n";
  for (double phi : phis) {
    out += format_double(phi) + ',' + format_double(solution.value_phi(phi)) + ',' +
           format_double(value_original(solution, model, phi)) + '\n';
  }
  return out;
}

std::string boundary_csv(const NumericSolution& s) {
  std::string out = "phi,value,obstacle,active\n";
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    out += format_double(s.nodes[i]) + ',' + format_double(s.values[i]) + ',' + format_double(s.obstacle[i]) + ',' +
           bool_cell(s.active[i]) + '\n';
  }
  return out;
}

std::string path_csv(const PathBundle& path, const FilterPath* filter, std::optional<std::size_t> path_id,
                     bool header) {
  const bool p0 = path.measure == Measure::P0;
  const bool nature = path.theta.has_value();
  std::string out;
  if (header) {
    if (path_id) out += "path_id,";
    out += "t,x";
    if (p0) out += ",phi_circ";
    if (nature) out += ",theta,gamma";
    if (filter) out += p0 ? ",pi,phi" : ",pi,phi,phi_circ";
    out += '\n';
  }
  const std::string id = path_id ? std::to_string(*path_id) + "," : "";
  const std::string nat =
      nature ? "," + std::to_string(*path.theta) + "," + format_double(path.gamma.value_or(INFINITY)) : "";
  for (std::size_t k = 0; k < path.x.size(); ++k) {
    out += id;
    out += format_double(path.t_grid[k]);
    out += ',';
    out += format_double(path.x[k]);
    if (p0) out += ',' + format_double(path.phi_circ[k]);
    out += nat;
    if (filter) {
      out += ',' + format_double(filter->pi_t[k]) + ',' + format_double(filter->phi_t[k]);
      if (!p0) out += ',' + format_double(filter->phi_circ_t[k]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace hstop
