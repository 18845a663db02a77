#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nertag/decode.hpp"
#include "nertag/metrics.hpp"

namespace nertag {

// Stable JSON renderings of the report structs. Key order and float
// formatting are fixed so that reruns with the same seed are
// byte-identical and snapshots can be diffed.
nlohmann::ordered_json report_to_json(const EvalReport& report);
nlohmann::ordered_json seq_length_to_json(const SeqLengthReport& report);
nlohmann::ordered_json sweep_to_json(const std::vector<BiasSweepPoint>& points,
                                     const Normalizer& norm,
                                     std::size_t n_records);

void save_json(const nlohmann::ordered_json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

}  // namespace nertag
