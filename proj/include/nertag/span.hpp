#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace nertag {

// One tagged region of a transcript. Offsets are byte positions into the
// plain (untagged) text, start inclusive, end exclusive. `surface` always
// equals the text sliced at those offsets.
struct EntitySpan {
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::string label;
  std::string surface;

  bool operator==(const EntitySpan&) const = default;
};

// A plain transcript plus its non-overlapping entity spans, sorted by
// start offset. Canonical internal form behind both surface grammars.
struct TaggedTranscript {
  std::string text;
  std::vector<EntitySpan> entities;

  bool operator==(const TaggedTranscript&) const = default;
};

enum class TagScheme { SpanMarker, BIO };

}  // namespace nertag
