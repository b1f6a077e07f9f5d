#pragma once

#include "mpk/types.hpp"

#include "json.hpp"

#include <string>

namespace mpk {

/// Parses and validates a model document. Field names are fixed:
///   { "states": [..], "mode": "ctmc"|"dtmc",
///     "generator": [[..]] (ctmc) | "kernel": [[..]] (dtmc),
///     "measure": [..], "functions": { name: [..] } }
/// Throws SchemaError on malformed documents and InvariantViolation (naming
/// the offending entry) when the data fails the model invariants at 1e-12.
MarkovModel load_model(const nlohmann::json& doc);

MarkovModel load_model_file(const std::string& path);

/// Re-checks every model invariant at the given tolerance.
void validate_model(const MarkovModel& model, double tol = 1e-12);

}  // namespace mpk
