#pragma once

// JSON and CSV forms of models, solutions, estimates and paths. CSV numbers
// use the shortest round-trip representation and never depend on the locale.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hstop/closed_form.hpp"
#include "hstop/fbp_numeric.hpp"
#include "hstop/filter.hpp"
#include "hstop/mc_harness.hpp"
#include "hstop/model.hpp"
#include "hstop/simulate.hpp"

namespace hstop {

using Json = nlohmann::ordered_json;

/// Reads a model document. Unknown keys, missing fields and wrong types are all
/// reported together as one ValidationError. x0 defaults to 0 (arithmetic) or 1 (geometric).
ModelSpec model_from_json(const Json& doc);
/// model_from_json followed by ValidatedModel::validate.
ValidatedModel parse_model(const Json& doc);
/// Parses text; malformed JSON is a ValidationError on field "$".
ValidatedModel parse_model_text(std::string_view text);

Json to_json(const ModelSpec& spec);
Json to_json(const FreeBoundarySolution& solution);
Json to_json(const McEstimate& estimate);

/// {"kind": "phi_upper", "b": ...}, {"kind": "phi_band", "a": ..., "b": ...},
/// {"kind": "stop_immediately"}, {"kind": "never_stop"}.
Policy policy_from_json(const Json& doc);
Json to_json(const Policy& policy);

/// Shortest decimal that reads back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_double(double v);

/// Header phi,v,V.
std::string value_table_csv(const FreeBoundarySolution& solution, const ValidatedModel& model,
                            const std::vector<double>& phis);
/// Header phi,value,obstacle,active.
std::string boundary_csv(const NumericSolution& solution);

/// Header t,x[,phi_circ][,theta,gamma][,pi,phi[,phi_circ]] with a leading path_id column when
/// path_id is set. theta and gamma repeat on every row of a P_pi path.
std::string path_csv(const PathBundle& path, const FilterPath* filter, std::optional<std::size_t> path_id,
                     bool header);

}  // namespace hstop
