#include "nertag/report_io.hpp"

#include <fstream>

#include "nertag/errors.hpp"

namespace nertag {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json normalizer_json(const Normalizer& n) {
  ordered_json j;
  j["lowercase"] = n.lowercase;
  j["strip_punctuation"] = n.strip_punctuation;
  j["collapse_whitespace"] = n.collapse_whitespace;
  return j;
}

ordered_json prf_json(const PrfCounts& c) {
  ordered_json j;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  j["precision"] = c.precision;
  j["recall"] = c.recall;
  j["f1"] = c.f1;
  j["zero_denominator"] = c.zero_denominator;
  return j;
}

ordered_json stats_json(const SeqLengthStats& s) {
  ordered_json j;
  j["n"] = s.n;
  j["mean"] = s.mean;
  j["median"] = s.median;
  j["max"] = s.max;
  return j;
}

}  // namespace

ordered_json report_to_json(const EvalReport& report) {
  ordered_json j;
  j["schema_version"] = report.schema_version;
  j["n_samples"] = report.n_samples;
  j["parse_failures"] = report.parse_failures;
  j["normalizer"] = normalizer_json(report.normalizer);
  ordered_json wer;
  wer["substitutions"] = report.wer.substitutions;
  wer["deletions"] = report.wer.deletions;
  wer["insertions"] = report.wer.insertions;
  wer["ref_words"] = report.wer.ref_words;
  wer["wer"] = report.wer.wer();
  j["wer"] = std::move(wer);
  j["micro"] = prf_json(report.micro);
  ordered_json per_type = ordered_json::object();
  for (const auto& [label, counts] : report.per_type)
    per_type[label] = prf_json(counts);
  j["per_type"] = std::move(per_type);
  ordered_json hall;
  hall["predicted_entities"] = report.predicted_entities;
  hall["off_prompt_entities"] = report.off_prompt_entities;
  hall["rate"] = report.hallucination_rate;
  j["hallucination"] = std::move(hall);
  return j;
}

ordered_json seq_length_to_json(const SeqLengthReport& report) {
  ordered_json j;
  j["schema_version"] = 1;
  ordered_json summary;
  summary["plain"] = stats_json(report.plain);
  summary["span"] = stats_json(report.span);
  summary["bio"] = stats_json(report.bio);
  summary["span_overhead"] = report.span_overhead;
  summary["bio_overhead"] = report.bio_overhead;
  j["summary"] = std::move(summary);
  ordered_json rows = ordered_json::array();
  for (const SeqLengthRow& r : report.rows) {
    ordered_json row;
    row["id"] = r.id;
    row["plain"] = r.plain;
    row["span"] = r.span;
    if (r.bio) {
      row["bio"] = *r.bio;
    } else {
      row["bio"] = nullptr;
    }
    rows.push_back(std::move(row));
  }
  j["records"] = std::move(rows);
  return j;
}

ordered_json sweep_to_json(const std::vector<BiasSweepPoint>& points,
                           const Normalizer& norm, std::size_t n_records) {
  ordered_json j;
  j["schema_version"] = 1;
  j["n_records"] = n_records;
  j["normalizer"] = normalizer_json(norm);
  ordered_json pts = ordered_json::array();
  for (const BiasSweepPoint& p : points) {
    ordered_json pj;
    pj["bias"] = p.bias;
    pj["precision"] = p.precision;
    pj["recall"] = p.recall;
    pj["f1"] = p.f1;
    pts.push_back(std::move(pj));
  }
  j["points"] = std::move(pts);
  return j;
}

void save_json(const nlohmann::ordered_json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("IoError", "failed writing '" + path + "'");
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("SchemaError", "'" + path + "': invalid JSON: " + e.what());
  }
  return j;
}

}  // namespace nertag
