#pragma once

#include <string>

#include <json.hpp>

namespace nertag {

enum class PlotKind { PrCurve, SeqLength };

// Renders a static SVG chart from a report JSON document: the
// precision-recall curve of a sweep report, or grouped per-scheme bars of
// a sequence-length report. Throws MissingSeries when the report lacks
// the required series.
void emit_plot(const nlohmann::json& report, PlotKind kind,
               const std::string& path);

}  // namespace nertag
