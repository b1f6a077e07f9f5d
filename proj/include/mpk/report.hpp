#pragma once

#include "mpk/verdict.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mpk {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit content hash, reported as 16 hex digits. Stable across reads
/// of the same bytes.
std::string content_digest(const std::string& bytes);

struct RunReport {
  std::string command;
  std::string model_digest;
  std::string tool_version = kToolVersion;
  std::optional<uint64_t> seed;
  std::vector<Verdict> verdicts;
  nlohmann::json sections;  // per-subcommand payloads

  bool all_pass() const;
};

/// Deterministic JSON rendering; wall time is deliberately not part of the
/// document so repeated runs are byte-identical.
nlohmann::json to_json(const RunReport& report);

}  // namespace mpk
