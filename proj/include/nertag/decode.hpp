#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nertag/augment.hpp"
#include "nertag/metrics.hpp"
#include "nertag/span.hpp"

namespace nertag {

// Autoregressive next-token-logits provider. The vocabulary is a list of
// literal strings (plain concatenation of emitted tokens yields the
// output text) and must contain the designated entity-start token "<".
class TokenModel {
 public:
  virtual ~TokenModel() = default;

  virtual const std::vector<std::string>& vocab() const = 0;
  virtual std::size_t start_index() const = 0;
  virtual std::optional<std::size_t> eos_index() const = 0;

  // One finite logit per vocabulary entry for the next position.
  virtual std::vector<double> next_logits(
      std::span<const std::size_t> context, const PromptSpec& prompt) const = 0;

  // Decode cap; 0 means unspecified (the harness picks one).
  virtual std::size_t max_steps() const { return 0; }

  // Whether next_logits may be queried from several threads at once.
  virtual bool concurrent_safe() const { return false; }
};

// Deterministic table-driven model: the first row whose context_suffix
// matches the tail of the context (and whose prompt condition holds)
// supplies the logits; otherwise the default row does. File format:
//   {"vocab": [str], "eos": str, "start_token": "<",
//    "rows": [{"context_suffix": [str], "requires_label": str?,
//              "requires_positive": str?, "logits": [float]}],
//    "default_logits": [float], "max_steps": int?}
class ToyTableModel : public TokenModel {
 public:
  struct Row {
    std::vector<std::size_t> context_suffix;
    std::optional<std::string> requires_label;     // in prompt, any polarity
    std::optional<std::string> requires_positive;  // in prompt, positive
    std::vector<double> logits;
  };

  static ToyTableModel from_json(const nlohmann::json& spec);
  static ToyTableModel load(const std::string& path);

  const std::vector<std::string>& vocab() const override { return vocab_; }
  std::size_t start_index() const override { return start_; }
  std::optional<std::size_t> eos_index() const override { return eos_; }
  std::vector<double> next_logits(std::span<const std::size_t> context,
                                  const PromptSpec& prompt) const override;
  std::size_t max_steps() const override { return max_steps_; }
  bool concurrent_safe() const override { return true; }

  std::optional<std::size_t> token_index(std::string_view token) const;

 private:
  std::vector<std::string> vocab_;
  std::size_t start_ = 0;
  std::optional<std::size_t> eos_;
  std::vector<Row> rows_;
  std::vector<double> default_logits_;
  std::size_t max_steps_ = 0;
};

// Adds `bias` to the start-token logit only, then softmax. -inf logits
// (from grammar masking) get probability exactly 0.
std::vector<double> biased_softmax(std::span<const double> logits,
                                   std::size_t start_index, double bias);

// Incremental scan of raw decoded text, tracking whether the decode sits
// in plain text, inside a partially emitted marker, inside an open
// entity, or inside a close marker. Drives bias gating (the start token
// is biased only in plain text) and grammar enforcement.
class MarkerScanner {
 public:
  enum class State { Plain, OpenMarker, Inside, CloseMarker };

  void feed(char c);
  void feed(std::string_view s) {
    for (char c : s) feed(c);
  }

  State state() const { return state_; }
  bool escape_pending() const { return escape_; }
  const std::string& open_label() const { return open_label_; }
  const std::string& partial() const { return partial_; }

  // The entity-start bias applies only in plain, unescaped context.
  bool bias_applies() const { return state_ == State::Plain && !escape_; }

 private:
  State state_ = State::Plain;
  bool escape_ = false;
  std::string open_label_;
  std::string partial_;
};

// Whether appending `token` keeps the output extendable to a string whose
// markers all carry prompt labels. The eos token is always legal.
bool token_legal_under_prompt(const MarkerScanner& scan,
                              std::string_view token,
                              const PromptSpec& prompt);

// Masks (to -inf) every token that cannot extend toward a prompt label;
// with an empty prompt the start token itself is masked. `eos_index`
// stays unmasked so decoding can always terminate.
void enforce_prompt_grammar(std::vector<double>& step_logits,
                            const MarkerScanner& scan,
                            const PromptSpec& prompt,
                            const std::vector<std::string>& vocab,
                            std::optional<std::size_t> eos_index);

// Convenience overload taking the raw emitted text instead of a scanner.
std::vector<double> enforce_prompt_grammar(std::vector<double> step_logits,
                                           std::string_view emitted,
                                           const PromptSpec& prompt,
                                           const std::vector<std::string>& vocab,
                                           std::optional<std::size_t> eos_index);

struct DecodeResult {
  TaggedTranscript transcript;  // lenient parse of `raw`
  std::string raw;
  bool overflow = false;  // max_steps hit before the eos token
  std::size_t steps = 0;
};

// Argmax over the biased softmax at each step, ties broken by lowest
// vocabulary index; stops at eos or after max_steps (flagged overflow).
// By default the bias only applies while the decode sits in plain text;
// `bias_everywhere` shifts the start token at every step instead.
DecodeResult greedy_decode(const TokenModel& model, const PromptSpec& prompt,
                           double bias, std::size_t max_steps,
                           bool enforce_grammar = false,
                           bool bias_everywhere = false);

// Teacher-forced -sum log P(target_t | target_<t, prompt), unbiased
// softmax. Throws UnknownToken for out-of-vocabulary target tokens.
double sequence_nll(const TokenModel& model, const PromptSpec& prompt,
                    const std::vector<std::string>& target_tokens);

struct BiasSweepPoint {
  double bias = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Greedy-decodes every record at each bias and scores micro
// precision/recall/F1 against the gold spans. Points come back sorted by
// bias.
std::vector<BiasSweepPoint> bias_sweep(const TokenModel& model,
                                       const PromptedDataset& eval_set,
                                       std::vector<double> biases,
                                       const Normalizer& norm,
                                       bool enforce_grammar = false,
                                       unsigned jobs = 1);

// model.max_steps() when set; otherwise 4x the longest gold serialization
// (default token counter) of the eval set, floored at 16; otherwise 256.
std::size_t resolve_max_steps(const TokenModel& model,
                              const PromptedDataset* eval_set);

}  // namespace nertag
