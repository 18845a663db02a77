#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nertag/augment.hpp"
#include "nertag/dataset.hpp"
#include "nertag/span.hpp"

namespace nertag {

// Text normalization applied before WER word splitting and entity surface
// matching. ASCII-only by construction; every flag combination is
// idempotent. Defaults follow the evaluation configuration recorded in
// each report.
struct Normalizer {
  bool lowercase = true;
  bool strip_punctuation = true;
  bool collapse_whitespace = true;

  std::string apply(std::string_view s) const;
  std::vector<std::string> words(std::string_view s) const;

  bool operator==(const Normalizer&) const = default;
};

struct WerBreakdown {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_words = 0;

  std::size_t edits() const { return substitutions + deletions + insertions; }
  double wer() const {
    return ref_words == 0 ? 0.0
                          : static_cast<double>(edits()) /
                                static_cast<double>(ref_words);
  }

  bool operator==(const WerBreakdown&) const = default;
};

// Minimal-cost word-level alignment with unit costs. When several edit
// scripts are optimal, the backtrace prefers substitution over insertion
// over deletion, so the S/D/I decomposition is deterministic.
WerBreakdown wer_align(const std::vector<std::string>& ref,
                       const std::vector<std::string>& hyp);

// Throws DegenerateReference when the reference has no words left after
// normalization.
WerBreakdown wer(std::string_view reference, std::string_view hypothesis,
                 const Normalizer& norm);

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  bool operator==(const MatchCounts&) const = default;
};

// Strict matching: a prediction scores only when its normalized surface
// AND its label both match a gold entity. Duplicates match with
// multiplicity (multisets, not sets).
std::map<std::string, MatchCounts> entity_f1(const TaggedTranscript& gold,
                                             const TaggedTranscript& pred,
                                             const Normalizer& norm);

// Fraction of predicted entities whose label is absent from the prompt
// (either polarity); 0 when there are no predictions.
double hallucination_rate(const TaggedTranscript& pred,
                          const PromptSpec& prompt);

struct PrfCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool zero_denominator = false;

  static PrfCounts from(std::size_t tp, std::size_t fp, std::size_t fn);
};

struct EvalReport {
  int schema_version = 1;
  std::size_t n_samples = 0;
  std::size_t parse_failures = 0;
  Normalizer normalizer;
  WerBreakdown wer;
  PrfCounts micro;
  std::map<std::string, PrfCounts> per_type;
  std::size_t predicted_entities = 0;
  std::size_t off_prompt_entities = 0;
  double hallucination_rate = 0.0;
};

// Scores `pred_lines[i]` against `gold.records[i]`. Unparseable lines are
// scored as empty predictions and tallied; WER is pooled corpus-level
// (sum of edit costs over sum of reference words). Records lacking a
// prompt were given their gold labels as positives at load time.
EvalReport evaluate_corpus(const PromptedDataset& gold,
                           const std::vector<std::string>& pred_lines,
                           TagScheme scheme, const Normalizer& norm,
                           unsigned jobs = 1);

// Token counter over one serialized line (or plain text): whitespace
// units + 1 per embedded marker group + 1 per (TAG) suffix. Under this
// rule a record with T words and E entities counts T plain, T+2E
// span-marker, and 2T BIO tokens.
std::size_t default_token_count(std::string_view serialized);

using TokenCounter = std::function<std::size_t(std::string_view)>;

struct SeqLengthRow {
  std::string id;
  std::size_t plain = 0;
  std::size_t span = 0;
  std::optional<std::size_t> bio;  // absent for non-token-aligned records
};

struct SeqLengthStats {
  double mean = 0.0;
  double median = 0.0;
  std::size_t max = 0;
  std::size_t n = 0;
};

struct SeqLengthReport {
  std::vector<SeqLengthRow> rows;
  SeqLengthStats plain;
  SeqLengthStats span;
  SeqLengthStats bio;              // over token-aligned records only
  double span_overhead = 0.0;      // mean(span) / mean(plain)
  double bio_overhead = 0.0;       // over the aligned subset
};

SeqLengthReport sequence_length_report(const Dataset& d,
                                       const TokenCounter& counter = {});

}  // namespace nertag
