#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nertag/dataset.hpp"
#include "nertag/span.hpp"

namespace nertag {

enum class Polarity { Positive, Negative };

struct PromptEntry {
  std::string label;
  Polarity polarity = Polarity::Positive;

  bool operator==(const PromptEntry&) const = default;
};

// Ordered entity-type labels conditioning a decode or training example.
// Positive labels occur in the source record's gold spans; negatives do
// not occur in the utterance at all. The seed that produced the prompt
// is kept so any derived file can be reproduced.
struct PromptSpec {
  std::vector<PromptEntry> entries;
  std::uint64_t seed = 0;

  bool operator==(const PromptSpec&) const = default;

  bool contains(std::string_view label) const;
  bool contains_positive(std::string_view label) const;
  std::vector<std::string> labels() const;  // entry order
};

using SimilarityFn =
    std::function<double(const DatasetRecord&, const DatasetRecord&)>;

// Character 3-gram Jaccard similarity over the record texts; the default
// scorer for hard-negative donor selection. Texts shorter than 3 bytes
// contribute themselves as a single gram.
double trigram_jaccard(std::string_view a, std::string_view b);

struct NegativeStrategy {
  enum class Kind { RandomType, RandomSample, HardNegative };
  Kind kind = Kind::RandomSample;
  std::size_t k = 0;
  SimilarityFn similarity;  // HardNegative only; empty = trigram_jaccard

  static NegativeStrategy random_type(std::size_t k) {
    return {Kind::RandomType, k, {}};
  }
  static NegativeStrategy random_sample(std::size_t k) {
    return {Kind::RandomSample, k, {}};
  }
  static NegativeStrategy hard_negative(std::size_t k, SimilarityFn sim = {}) {
    return {Kind::HardNegative, k, std::move(sim)};
  }
};

// Positives are the record's sorted unique gold labels; negatives come
// from the pool per the strategy, deduplicated against the positives and
// listed in sorted order. Draw procedure is documented in docs/formats.md.
PromptSpec sample_negatives(const DatasetRecord& record, const Dataset& pool,
                            const NegativeStrategy& strategy,
                            std::uint64_t seed);

struct DropoutResult {
  PromptSpec prompt;
  TaggedTranscript target;
};

// Per-type Bernoulli dropout: prompt labels are visited in sorted order
// and each is dropped with probability `rate`; dropped labels disappear
// from the prompt and all target spans with that label are stripped.
// With `positives_only`, negative labels are never considered (and
// consume no draws).
DropoutResult apply_type_dropout(const PromptSpec& prompt,
                                 const TaggedTranscript& target, double rate,
                                 std::uint64_t seed,
                                 bool positives_only = false);

// Uniform Fisher-Yates permutation of the entries.
PromptSpec shuffle_prompt(PromptSpec prompt, std::uint64_t seed);

struct PromptedRecord {
  DatasetRecord record;
  PromptSpec prompt;
  std::optional<std::string> target;

  bool operator==(const PromptedRecord&) const = default;
};

struct PromptedDataset {
  std::vector<PromptedRecord> records;

  bool operator==(const PromptedDataset&) const = default;
};

// Per record, attaches exactly |positives| negative labels drawn without
// replacement from the pool inventory minus the record's gold labels.
// Record i uses derive_seed(seed, i).
PromptedDataset build_balanced_eval(const Dataset& d, const Dataset& pool,
                                    std::uint64_t seed);

struct RenderedPair {
  std::string prompt_text;
  std::string target_text;
};

// prompt_text joins the labels in entry order with `separator`;
// target_text is the scheme serialization of `target`.
RenderedPair render_training_pair(const TaggedTranscript& target,
                                  const PromptSpec& prompt, TagScheme scheme,
                                  std::string_view separator = ", ");

// Dataset JSONL extended per record with
//   "prompt": [{"label": str, "polarity": "pos"|"neg"}] and "target": str?.
// Records without a prompt field get one synthesized from their gold
// labels (all positive) so plain datasets stay usable as eval gold.
PromptedDataset load_prompted_jsonl(const std::string& path);
void save_prompted_jsonl(const PromptedDataset& d, const std::string& path);

}  // namespace nertag
