#include "mpk/report.hpp"

#include <cstdio>

namespace mpk {

std::string content_digest(const std::string& bytes) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

bool RunReport::all_pass() const {
  for (const auto& v : verdicts) {
    if (!v.pass) return false;
  }
  return true;
}

nlohmann::json to_json(const RunReport& report) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : report.verdicts) verdicts.push_back(to_json(v));
  nlohmann::json j{
      {"command", report.command},
      {"model_digest", report.model_digest},
      {"tool_version", report.tool_version},
      {"verdicts", verdicts},
      {"pass", report.all_pass()},
  };
  if (report.seed) j["seed"] = *report.seed;
  if (!report.sections.is_null()) j["sections"] = report.sections;
  return j;
}

}  // namespace mpk
