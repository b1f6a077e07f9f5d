#include "mpk/verdict.hpp"

namespace mpk {

Verdict Verdict::passing(std::string property, double tolerance) {
  Verdict v;
  v.property = std::move(property);
  v.pass = true;
  v.tolerance = tolerance;
  return v;
}

nlohmann::json to_json(const Verdict& v) {
  nlohmann::json j{
      {"property", v.property},
      {"pass", v.pass},
      {"worst_violation", v.worst_violation},
      {"witness", {{"state", v.witness.state}, {"parameter", v.witness.parameter}}},
      {"tolerance", v.tolerance},
  };
  if (!v.details.is_null()) j["details"] = v.details;
  return j;
}

nlohmann::json vector_json(const StateFunction& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace mpk
