#include "nertag/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nertag/codec.hpp"
#include "nertag/errors.hpp"

namespace nertag {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void schema_error(std::size_t line, const std::string& field,
                               const std::string& what) {
  throw Error("SchemaError", "line " + std::to_string(line) + ": field '" +
                                 field + "': " + what);
}

std::string require_string(const nlohmann::json& obj, const char* field,
                           std::size_t line) {
  if (!obj.contains(field)) schema_error(line, field, "missing");
  if (!obj[field].is_string()) schema_error(line, field, "must be a string");
  return obj[field].get<std::string>();
}

}  // namespace

std::vector<std::string> DatasetRecord::gold_labels() const {
  std::set<std::string> labels;
  for (const EntitySpan& e : entities) labels.insert(e.label);
  return {labels.begin(), labels.end()};
}

void Dataset::recount() {
  type_inventory.clear();
  for (const DatasetRecord& r : records) {
    for (const EntitySpan& e : r.entities) ++type_inventory[e.label];
  }
}

Dataset load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open '" + path + "' for reading");

  Dataset d;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("SchemaError", "line " + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) schema_error(line_no, "<record>", "must be an object");

    DatasetRecord r;
    r.id = require_string(obj, "id", line_no);
    r.text = require_string(obj, "text", line_no);
    if (!seen_ids.insert(r.id).second) {
      throw Error("DuplicateId", "line " + std::to_string(line_no) +
                                     ": duplicate record id '" + r.id + "'");
    }
    if (obj.contains("entities")) {
      if (!obj["entities"].is_array())
        schema_error(line_no, "entities", "must be an array");
      for (const auto& ej : obj["entities"]) {
        EntitySpan e;
        if (!ej.is_object() || !ej.contains("start_char") ||
            !ej.contains("end_char") || !ej.contains("label")) {
          schema_error(line_no, "entities",
                       "each entry needs start_char, end_char, label");
        }
        if (!ej["start_char"].is_number_integer() ||
            !ej["end_char"].is_number_integer()) {
          schema_error(line_no, "entities", "offsets must be integers");
        }
        const auto start = ej["start_char"].get<std::int64_t>();
        const auto end = ej["end_char"].get<std::int64_t>();
        if (start < 0 || end < 0)
          schema_error(line_no, "entities", "offsets must be non-negative");
        e.start_char = static_cast<std::size_t>(start);
        e.end_char = static_cast<std::size_t>(end);
        if (!ej["label"].is_string())
          schema_error(line_no, "entities", "label must be a string");
        e.label = ej["label"].get<std::string>();
        if (e.end_char > r.text.size())
          schema_error(line_no, "end_char", "exceeds text length");
        e.surface = r.text.substr(e.start_char, e.end_char - e.start_char);
        r.entities.push_back(std::move(e));
      }
    }
    if (obj.contains("audio_path")) {
      if (!obj["audio_path"].is_string())
        schema_error(line_no, "audio_path", "must be a string");
      r.audio_path = obj["audio_path"].get<std::string>();
    }
    if (obj.contains("language")) {
      if (!obj["language"].is_string())
        schema_error(line_no, "language", "must be a string");
      r.language = obj["language"].get<std::string>();
    }
    try {
      validate_transcript({r.text, r.entities});
    } catch (const Error& e) {
      throw Error("SchemaError",
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    d.records.push_back(std::move(r));
  }
  d.recount();
  return d;
}

namespace {

ordered_json record_to_json(const DatasetRecord& r) {
  ordered_json obj;
  obj["id"] = r.id;
  obj["text"] = r.text;
  obj["entities"] = ordered_json::array();
  for (const EntitySpan& e : r.entities) {
    ordered_json ej;
    ej["start_char"] = e.start_char;
    ej["end_char"] = e.end_char;
    ej["label"] = e.label;
    obj["entities"].push_back(std::move(ej));
  }
  if (r.audio_path) obj["audio_path"] = *r.audio_path;
  if (r.language) obj["language"] = *r.language;
  return obj;
}

}  // namespace

void save_jsonl(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot open '" + path + "' for writing");
  for (const DatasetRecord& r : d.records) {
    out << record_to_json(r).dump() << '\n';
  }
  if (!out) throw Error("IoError", "failed writing '" + path + "'");
}

namespace {

struct BioSentence {
  std::vector<std::string> words;
  std::vector<std::string> tags;
};

[[noreturn]] void malformed_row(std::size_t line, const std::string& what) {
  throw Error("MalformedRow", "line " + std::to_string(line) + ": " + what);
}

DatasetRecord sentence_to_record(const BioSentence& s, const std::string& id,
                                 std::size_t line_hint) {
  DatasetRecord r;
  r.id = id;

  struct Run {
    std::string label;
    std::size_t start = 0;
  };
  std::optional<Run> run;
  auto close = [&](std::size_t end) {
    if (!run) return;
    EntitySpan e;
    e.start_char = run->start;
    e.end_char = end;
    e.label = run->label;
    e.surface = r.text.substr(e.start_char, e.end_char - e.start_char);
    r.entities.push_back(std::move(e));
    run.reset();
  };

  for (std::size_t w = 0; w < s.words.size(); ++w) {
    if (w > 0) r.text += ' ';
    const std::size_t start = r.text.size();
    r.text += s.words[w];
    const std::string& tag = s.tags[w];
    if (tag == "O") {
      close(start > 0 ? start - 1 : 0);
      continue;
    }
    if (tag.size() < 2 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') {
      throw Error("UnknownTagPrefix",
                  "line " + std::to_string(line_hint) + ": tag '" + tag +
                      "' is not O, B-label or I-label");
    }
    const std::string label = tag.substr(2);
    if (!valid_label(label)) {
      malformed_row(line_hint, "tag '" + tag + "' carries an invalid label");
    }
    if (tag[0] == 'I' && run && run->label == label) continue;  // extend
    // B-, or an I- run that has to start fresh (orphan repaired to B).
    close(start > 0 ? start - 1 : 0);
    run = Run{label, start};
  }
  close(r.text.size());
  return r;
}

}  // namespace

Dataset import_bio_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open '" + path + "' for reading");

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }

  // Layout detection: a `word TAG` pair line has internal whitespace,
  // an alternating-layout line does not.
  bool pairs = true;
  for (const std::string& l : lines) {
    if (l.find_first_not_of(" \t") == std::string::npos) continue;
    pairs = l.find_first_of(" \t") != std::string::npos;
    break;
  }

  const std::string stem = std::filesystem::path(path).stem().string();
  Dataset d;
  BioSentence sent;
  std::size_t sent_start_line = 1;
  std::optional<std::string> pending_word;  // alternating layout

  auto flush = [&]() {
    if (sent.words.empty()) return;
    d.records.push_back(sentence_to_record(
        sent, stem + "-" + std::to_string(d.records.size()), sent_start_line));
    sent = BioSentence{};
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string& l = lines[i];
    if (l.find_first_not_of(" \t") == std::string::npos) {
      if (pending_word)
        malformed_row(line_no, "word '" + *pending_word + "' has no tag line");
      flush();
      sent_start_line = line_no + 1;
      continue;
    }
    if (pairs) {
      const std::size_t sep = l.find_first_of(" \t");
      if (sep == std::string::npos)
        malformed_row(line_no, "expected `word TAG` columns");
      const std::string word = l.substr(0, sep);
      const std::size_t tag_start = l.find_first_not_of(" \t", sep);
      if (tag_start == std::string::npos)
        malformed_row(line_no, "empty tag column");
      std::string tag = l.substr(tag_start);
      while (!tag.empty() && (tag.back() == ' ' || tag.back() == '\t'))
        tag.pop_back();
      if (tag.empty()) malformed_row(line_no, "empty tag column");
      sent.words.push_back(word);
      sent.tags.push_back(tag);
    } else {
      std::string value = l;
      if (!pending_word) {
        pending_word = value;
      } else {
        sent.words.push_back(*pending_word);
        sent.tags.push_back(value);
        pending_word.reset();
      }
    }
  }
  if (pending_word)
    malformed_row(lines.size(), "word '" + *pending_word + "' has no tag line");
  flush();
  d.recount();
  return d;
}

InventoryStats inventory_stats(const Dataset& d) {
  InventoryStats s;
  s.records = d.records.size();
  for (const DatasetRecord& r : d.records) {
    s.total_entities += r.entities.size();
    ++s.entities_per_record[r.entities.size()];
    for (const EntitySpan& e : r.entities) ++s.type_frequencies[e.label];
  }
  s.unique_types = s.type_frequencies.size();
  return s;
}

}  // namespace nertag
