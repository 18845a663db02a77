#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace nertag {

inline constexpr std::string_view kToolName = "nertag";
inline constexpr std::string_view kToolVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
std::string digest_file(const std::string& path);  // "fnv1a64:<hex>"

// Written next to every report so a run can be reproduced exactly:
// identical manifests (up to duration) imply byte-identical reports.
struct RunManifest {
  std::string tool{kToolName};
  std::string version{kToolVersion};
  std::string subcommand;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;  // path -> digest
  double duration_ms = 0.0;

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

}  // namespace nertag
