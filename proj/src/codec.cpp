#include "nertag/codec.hpp"

#include <algorithm>
#include <optional>

#include "nertag/errors.hpp"

namespace nertag {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string byte_pos(std::size_t i) {
  return " at byte " + std::to_string(i);
}

}  // namespace

bool valid_label(std::string_view label) {
  if (label.empty()) return false;
  for (char c : label) {
    if (c == '<' || c == '>' || c == '(' || c == ')' || c == '\\') return false;
  }
  return true;
}

TaggedTranscript canonical(TaggedTranscript t) {
  std::stable_sort(t.entities.begin(), t.entities.end(),
                   [](const EntitySpan& a, const EntitySpan& b) {
                     return a.start_char < b.start_char;
                   });
  return t;
}

void validate_transcript(const TaggedTranscript& t) {
  const TaggedTranscript c = canonical(t);
  std::size_t prev_end = 0;
  bool first = true;
  for (const EntitySpan& e : c.entities) {
    if (!valid_label(e.label)) {
      throw Error("UnescapableLabel",
                  "entity label '" + e.label +
                      "' is empty or contains a reserved character");
    }
    if (e.start_char >= e.end_char || e.end_char > c.text.size()) {
      throw Error("InvalidSpan",
                  "span [" + std::to_string(e.start_char) + ", " +
                      std::to_string(e.end_char) + ") is empty or out of range");
    }
    if (c.text.compare(e.start_char, e.end_char - e.start_char, e.surface) !=
        0) {
      throw Error("InvalidSpan",
                  "surface '" + e.surface + "' does not match the text at [" +
                      std::to_string(e.start_char) + ", " +
                      std::to_string(e.end_char) + ")");
    }
    if (!first && e.start_char < prev_end) {
      throw Error("OverlappingSpans",
                  "span starting at " + std::to_string(e.start_char) +
                      " overlaps the previous span");
    }
    prev_end = e.end_char;
    first = false;
  }
}

std::vector<std::pair<std::size_t, std::size_t>> word_boundaries(
    std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    out.emplace_back(start, i);
  }
  return out;
}

std::string escape_plain(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (c == '\\' || c == '<' || c == '>') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string serialize_span_marker(const TaggedTranscript& t) {
  validate_transcript(t);
  const TaggedTranscript c = canonical(t);
  std::string out;
  out.reserve(c.text.size() + 8 * c.entities.size());
  std::size_t pos = 0;
  for (const EntitySpan& e : c.entities) {
    out += escape_plain(
        std::string_view(c.text).substr(pos, e.start_char - pos));
    out += '<';
    out += e.label;
    out += '>';
    out += escape_plain(
        std::string_view(c.text).substr(e.start_char, e.end_char - e.start_char));
    out += '<';
    out += e.label;
    out += ">>";
    pos = e.end_char;
  }
  out += escape_plain(std::string_view(c.text).substr(pos));
  return out;
}

namespace {

struct OpenEntity {
  std::string label;
  std::size_t start = 0;
};

TaggedTranscript parse_span_marker_impl(std::string_view s, bool lenient) {
  TaggedTranscript out;
  std::optional<OpenEntity> open;
  std::size_t i = 0;

  // In lenient mode a marker-level problem turns the '<' into literal
  // text and scanning resumes one byte later.
  auto reject = [&](const char* code, const std::string& msg) -> bool {
    if (!lenient) throw Error(code, msg);
    out.text.push_back('<');
    ++i;
    return false;
  };

  while (i < s.size()) {
    const char c = s[i];
    if (c == '\\') {
      if (i + 1 < s.size()) {
        out.text.push_back(s[i + 1]);
        i += 2;
      } else {
        out.text.push_back('\\');  // dangling escape kept literal
        ++i;
      }
      continue;
    }
    if (c != '<') {
      out.text.push_back(c);
      ++i;
      continue;
    }

    std::size_t j = i + 1;
    while (j < s.size() && s[j] != '>' && s[j] != '<') ++j;
    if (j >= s.size() || s[j] == '<') {
      if (!reject("UnclosedEntity", "unterminated marker" + byte_pos(i))) continue;
    }
    const std::string label(s.substr(i + 1, j - i - 1));
    if (!valid_label(label)) {
      if (!reject("MalformedTag",
                  "marker label '" + label + "' is empty or reserved" +
                      byte_pos(i)))
        continue;
    }
    const bool closer = j + 1 < s.size() && s[j + 1] == '>';
    if (closer) {
      if (!open) {
        if (!reject("StrayCloser",
                    "close marker <" + label + ">> without an open entity" +
                        byte_pos(i)))
          continue;
      }
      if (open->label != label) {
        if (!reject("MismatchedLabel", "close marker <" + label +
                                           ">> does not match open entity <" +
                                           open->label + ">" + byte_pos(i)))
          continue;
      }
      if (out.text.size() == open->start) {
        if (lenient) {
          open.reset();  // zero-width entity dropped
          i = j + 2;
          continue;
        }
        throw Error("EmptySpan", "entity <" + label + "> has empty surface" +
                                     byte_pos(i));
      }
      EntitySpan e;
      e.start_char = open->start;
      e.end_char = out.text.size();
      e.label = open->label;
      e.surface = out.text.substr(e.start_char, e.end_char - e.start_char);
      out.entities.push_back(std::move(e));
      open.reset();
      i = j + 2;
    } else {
      if (open) {
        if (!reject("NestedEntity", "open marker <" + label +
                                        "> inside entity <" + open->label +
                                        ">" + byte_pos(i)))
          continue;
      }
      open = OpenEntity{label, out.text.size()};
      i = j + 1;
    }
  }
  if (open && !lenient) {
    throw Error("UnclosedEntity",
                "entity <" + open->label + "> is never closed");
  }
  return out;
}

}  // namespace

TaggedTranscript parse_span_marker(std::string_view s) {
  return parse_span_marker_impl(s, false);
}

TaggedTranscript parse_span_marker_lenient(std::string_view s) {
  return parse_span_marker_impl(s, true);
}

std::string serialize_bio(const TaggedTranscript& t) {
  validate_transcript(t);
  const TaggedTranscript c = canonical(t);
  const auto words = word_boundaries(c.text);

  // Map each entity onto a contiguous run of whole words.
  std::vector<std::string> tags(words.size(), "O");
  for (const EntitySpan& e : c.entities) {
    std::size_t first = words.size();
    std::size_t last = words.size();
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (words[w].first == e.start_char) first = w;
      if (words[w].second == e.end_char) last = w;
    }
    if (first == words.size() || last == words.size() || last < first) {
      throw Error("SpanNotTokenAligned",
                  "entity '" + e.surface + "' [" +
                      std::to_string(e.start_char) + ", " +
                      std::to_string(e.end_char) +
                      ") does not start and end on word boundaries");
    }
    tags[first] = "B-" + e.label;
    for (std::size_t w = first + 1; w <= last; ++w) tags[w] = "I-" + e.label;
  }

  std::string out;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w > 0) out += ' ';
    out.append(c.text, words[w].first, words[w].second - words[w].first);
    out += '(';
    out += tags[w];
    out += ')';
  }
  return out;
}

TaggedTranscript parse_bio(std::string_view s, bool repair) {
  // Whitespace-split, then merge units whose (TAG) group contains spaces:
  // a unit stays open while it has a '(' but no trailing ')'.
  std::vector<std::string> units;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    if (i >= s.size()) break;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    std::string tok(s.substr(start, i - start));
    const bool mergeable = !units.empty() &&
                           units.back().find('(') != std::string::npos &&
                           units.back().back() != ')';
    if (mergeable) {
      units.back() += ' ';
      units.back() += tok;
    } else {
      units.push_back(std::move(tok));
    }
  }

  struct Word {
    std::string word;
    char kind = 'O';  // O, B, I
    std::string label;
  };
  std::vector<Word> parsed;
  parsed.reserve(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    const std::string& unit = units[u];
    const std::size_t open = unit.rfind('(');
    if (unit.back() != ')' || open == std::string::npos) {
      throw Error("MissingTag",
                  "token '" + unit + "' (unit " + std::to_string(u + 1) +
                      ") lacks a (TAG) suffix");
    }
    Word w;
    w.word = unit.substr(0, open);
    const std::string tag = unit.substr(open + 1, unit.size() - open - 2);
    if (w.word.empty()) {
      throw Error("MalformedTag", "unit '" + unit + "' has an empty word");
    }
    if (tag == "O") {
      w.kind = 'O';
    } else if (tag.rfind("B-", 0) == 0 || tag.rfind("I-", 0) == 0) {
      w.kind = tag[0];
      w.label = tag.substr(2);
      if (!valid_label(w.label)) {
        throw Error("MalformedTag",
                    "tag '" + tag + "' has an empty or reserved label");
      }
    } else {
      throw Error("MalformedTag", "tag '" + tag +
                                      "' is not O, B-label or I-label (unit " +
                                      std::to_string(u + 1) + ")");
    }
    parsed.push_back(std::move(w));
  }

  TaggedTranscript out;
  std::optional<OpenEntity> run;
  auto close_run = [&](std::size_t end) {
    if (!run) return;
    EntitySpan e;
    e.start_char = run->start;
    e.end_char = end;
    e.label = run->label;
    e.surface = out.text.substr(e.start_char, e.end_char - e.start_char);
    out.entities.push_back(std::move(e));
    run.reset();
  };

  for (std::size_t w = 0; w < parsed.size(); ++w) {
    if (w > 0) out.text += ' ';
    const std::size_t start = out.text.size();
    out.text += parsed[w].word;

    switch (parsed[w].kind) {
      case 'O':
        close_run(start > 0 ? start - 1 : 0);
        break;
      case 'B':
        close_run(start > 0 ? start - 1 : 0);
        run = OpenEntity{parsed[w].label, start};
        break;
      case 'I':
        if (run && run->label == parsed[w].label) break;  // extend
        if (!repair) {
          throw Error("MalformedTag", "I-" + parsed[w].label +
                                          " without a preceding B-" +
                                          parsed[w].label + " (unit " +
                                          std::to_string(w + 1) + ")");
        }
        close_run(start > 0 ? start - 1 : 0);
        run = OpenEntity{parsed[w].label, start};  // repaired to B
        break;
    }
  }
  close_run(out.text.size());
  return out;
}

std::string serialize(const TaggedTranscript& t, TagScheme scheme) {
  return scheme == TagScheme::SpanMarker ? serialize_span_marker(t)
                                         : serialize_bio(t);
}

TaggedTranscript parse(std::string_view s, TagScheme scheme) {
  return scheme == TagScheme::SpanMarker ? parse_span_marker(s) : parse_bio(s);
}

std::string convert(std::string_view s, TagScheme from, TagScheme to) {
  return serialize(parse(s, from), to);
}

TagScheme tag_scheme_from_name(std::string_view name) {
  if (name == "span") return TagScheme::SpanMarker;
  if (name == "bio") return TagScheme::BIO;
  throw Error("UnknownScheme",
              "unknown tag scheme '" + std::string(name) + "' (span|bio)");
}

std::string_view tag_scheme_name(TagScheme scheme) {
  return scheme == TagScheme::SpanMarker ? "span" : "bio";
}

}  // namespace nertag
