#include "nertag/manifest.hpp"

#include <fstream>
#include <sstream>

#include "nertag/errors.hpp"

namespace nertag {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  static const char* digits = "0123456789abcdef";
  const std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = digits[(h >> (4 * i)) & 0xF];
  return out;
}

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open '" + path + "' for digest");
  std::ostringstream buf;
  buf << in.rdbuf();
  return "fnv1a64:" + fnv1a64_hex(buf.str());
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = tool;
  j["version"] = version;
  j["subcommand"] = subcommand;
  j["config"] = config;
  j["seed"] = seed;
  j["inputs"] = input_digests;
  j["duration_ms"] = duration_ms;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.tool = j.at("tool").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.subcommand = j.at("subcommand").get<std::string>();
  m.config = j.at("config");
  m.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("inputs")) {
    for (const auto& [path, digest] : j.at("inputs").items())
      m.input_digests[path] = digest.get<std::string>();
  }
  m.duration_ms = j.at("duration_ms").get<double>();
  return m;
}

void RunManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot open '" + path + "' for writing");
  out << to_json().dump(2) << '\n';
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("SchemaError",
                "manifest '" + path + "': invalid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace nertag
