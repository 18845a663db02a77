#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nertag/span.hpp"

namespace nertag {

// Labels may contain spaces ("Political Role") but none of < > ( ) \,
// which are structural in one or both grammars.
bool valid_label(std::string_view label);

// Throws InvalidSpan / OverlappingSpans / UnescapableLabel when `t`
// violates the TaggedTranscript invariants.
void validate_transcript(const TaggedTranscript& t);

// Entities sorted by start offset; text untouched.
TaggedTranscript canonical(TaggedTranscript t);

// [start, end) byte ranges of the whitespace-separated words of `text`.
std::vector<std::pair<std::size_t, std::size_t>> word_boundaries(
    std::string_view text);

// Backslash-escapes \ < > so plain text can never be mistaken for markup.
std::string escape_plain(std::string_view raw);

// Inline grammar: surface wrapped as <label>surface<label>>, everything
// else emitted with escape_plain.
std::string serialize_span_marker(const TaggedTranscript& t);

// Strict inverse of serialize_span_marker. Throws UnclosedEntity,
// MismatchedLabel, NestedEntity, StrayCloser, MalformedTag, EmptySpan.
TaggedTranscript parse_span_marker(std::string_view s);

// Never throws: ill-formed markup degrades to literal text, unclosed
// entities are dropped. Used to score raw model output.
TaggedTranscript parse_span_marker_lenient(std::string_view s);

// Word-level grammar: one `word(TAG)` unit per whitespace token of the
// text, TAG in {O, B-label, I-label}. Requires every entity to start and
// end on word boundaries (SpanNotTokenAligned otherwise).
std::string serialize_bio(const TaggedTranscript& t);

// Inverse of serialize_bio over single-space-joined text. With `repair`
// (the default), an I- tag with no live B-/I- run of the same label opens
// a fresh entity; without it, such tags are rejected.
TaggedTranscript parse_bio(std::string_view s, bool repair = true);

std::string serialize(const TaggedTranscript& t, TagScheme scheme);
TaggedTranscript parse(std::string_view s, TagScheme scheme);

// Parse under `from`, reserialize under `to`. Entity surfaces and labels
// are preserved exactly; parse and alignment errors propagate.
std::string convert(std::string_view s, TagScheme from, TagScheme to);

TagScheme tag_scheme_from_name(std::string_view name);  // "span" | "bio"
std::string_view tag_scheme_name(TagScheme scheme);

}  // namespace nertag
