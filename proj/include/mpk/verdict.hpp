#pragma once

#include "mpk/types.hpp"

#include "json.hpp"

#include <string>

namespace mpk {

struct Witness {
  std::string state;        // label of the worst state, empty if none
  double parameter = 0.0;   // time or rate at which the worst value occurred
};

/// Structured pass/fail report. Every check that the library performs ends in
/// one of these, carrying the achieved residual and the tolerance it was held
/// against.
struct Verdict {
  std::string property;
  bool pass = false;
  double worst_violation = 0.0;  // signed: <= 0 means the inequality held
  Witness witness;
  double tolerance = 0.0;
  nlohmann::json details;  // optional extra diagnostics, null when unused

  static Verdict passing(std::string property, double tolerance);
};

nlohmann::json to_json(const Verdict& v);

/// Eigen vector rendered as a JSON array of numbers.
nlohmann::json vector_json(const StateFunction& v);

}  // namespace mpk
