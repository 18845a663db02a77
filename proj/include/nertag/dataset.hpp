#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nertag/span.hpp"

namespace nertag {

// One annotated sample: reference transcript plus gold entity spans.
// Audio is referenced by path only and never decoded here.
struct DatasetRecord {
  std::string id;
  std::string text;
  std::vector<EntitySpan> entities;
  std::optional<std::string> audio_path;
  std::optional<std::string> language;

  bool operator==(const DatasetRecord&) const = default;

  // Sorted unique entity-type labels of the gold spans.
  std::vector<std::string> gold_labels() const;
};

struct Dataset {
  std::vector<DatasetRecord> records;
  std::map<std::string, std::size_t> type_inventory;  // label -> span count

  bool operator==(const Dataset&) const = default;

  // Recompute type_inventory from the records.
  void recount();
};

// JSONL, one record object per line:
//   {"id": str, "text": str,
//    "entities": [{"start_char": int, "end_char": int, "label": str}],
//    "audio_path": str?, "language": str?}
// Surfaces are reconstructed from the text, so they are not stored.
Dataset load_jsonl(const std::string& path);
void save_jsonl(const Dataset& d, const std::string& path);

// Column-format BIO corpora (MIT-Movie / MIT-Restaurant style). Two
// layouts are auto-detected from the first non-blank line: `word TAG`
// pairs per line, or word and tag on alternating lines. Blank lines
// separate sentences. Record ids are `<file stem>-<index>` (0-based).
Dataset import_bio_corpus(const std::string& path);

struct InventoryStats {
  std::size_t records = 0;
  std::size_t total_entities = 0;
  std::size_t unique_types = 0;
  std::map<std::string, std::size_t> type_frequencies;
  std::map<std::size_t, std::size_t> entities_per_record;  // count -> records
};

InventoryStats inventory_stats(const Dataset& d);

}  // namespace nertag
