#include "nertag/decode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "nertag/codec.hpp"
#include "nertag/errors.hpp"
#include "nertag/parallel.hpp"

namespace nertag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void model_schema_error(const std::string& what) {
  throw Error("SchemaError", "toy model: " + what);
}

}  // namespace

ToyTableModel ToyTableModel::from_json(const nlohmann::json& spec) {
  ToyTableModel m;
  if (!spec.is_object()) model_schema_error("must be a JSON object");
  if (!spec.contains("vocab") || !spec["vocab"].is_array())
    model_schema_error("'vocab' must be an array of strings");
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& tj : spec["vocab"]) {
    if (!tj.is_string()) model_schema_error("'vocab' entries must be strings");
    std::string tok = tj.get<std::string>();
    if (!index.emplace(tok, m.vocab_.size()).second)
      model_schema_error("duplicate vocab token '" + tok + "'");
    m.vocab_.push_back(std::move(tok));
  }
  if (m.vocab_.empty()) model_schema_error("'vocab' must be non-empty");

  auto lookup = [&](const std::string& tok, const char* field) {
    const auto it = index.find(tok);
    if (it == index.end())
      model_schema_error(std::string(field) + " token '" + tok +
                         "' is not in the vocabulary");
    return it->second;
  };
  if (!spec.contains("start_token") || !spec["start_token"].is_string())
    model_schema_error("'start_token' must be a string");
  m.start_ = lookup(spec["start_token"].get<std::string>(), "start_token");
  if (!spec.contains("eos") || !spec["eos"].is_string())
    model_schema_error("'eos' must be a string");
  m.eos_ = lookup(spec["eos"].get<std::string>(), "eos");

  auto read_logits = [&](const nlohmann::json& lj, const char* field) {
    if (!lj.is_array() || lj.size() != m.vocab_.size())
      model_schema_error(std::string(field) + " must hold one number per "
                         "vocabulary entry");
    std::vector<double> out;
    out.reserve(lj.size());
    for (const auto& v : lj) {
      if (!v.is_number()) model_schema_error(std::string(field) + " must be numeric");
      const double x = v.get<double>();
      if (!std::isfinite(x))
        model_schema_error(std::string(field) + " must be finite");
      out.push_back(x);
    }
    return out;
  };
  if (!spec.contains("default_logits"))
    model_schema_error("'default_logits' is required");
  m.default_logits_ = read_logits(spec["default_logits"], "default_logits");

  if (spec.contains("rows")) {
    if (!spec["rows"].is_array()) model_schema_error("'rows' must be an array");
    for (const auto& rj : spec["rows"]) {
      Row row;
      if (!rj.contains("context_suffix") || !rj["context_suffix"].is_array())
        model_schema_error("row 'context_suffix' must be an array");
      for (const auto& tj : rj["context_suffix"])
        row.context_suffix.push_back(
            lookup(tj.get<std::string>(), "context_suffix"));
      if (rj.contains("requires_label"))
        row.requires_label = rj["requires_label"].get<std::string>();
      if (rj.contains("requires_positive"))
        row.requires_positive = rj["requires_positive"].get<std::string>();
      if (!rj.contains("logits")) model_schema_error("row 'logits' is required");
      row.logits = read_logits(rj["logits"], "row logits");
      m.rows_.push_back(std::move(row));
    }
  }
  if (spec.contains("max_steps")) {
    if (!spec["max_steps"].is_number_integer() ||
        spec["max_steps"].get<std::int64_t>() < 0)
      model_schema_error("'max_steps' must be a non-negative integer");
    m.max_steps_ = static_cast<std::size_t>(spec["max_steps"].get<std::int64_t>());
  }
  return m;
}

ToyTableModel ToyTableModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open '" + path + "' for reading");
  nlohmann::json spec;
  try {
    in >> spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error("SchemaError",
                "toy model '" + path + "': invalid JSON: " + e.what());
  }
  return from_json(spec);
}

std::vector<double> ToyTableModel::next_logits(
    std::span<const std::size_t> context, const PromptSpec& prompt) const {
  for (const Row& row : rows_) {
    if (row.context_suffix.size() > context.size()) continue;
    const std::size_t off = context.size() - row.context_suffix.size();
    if (!std::equal(row.context_suffix.begin(), row.context_suffix.end(),
                    context.begin() + static_cast<std::ptrdiff_t>(off)))
      continue;
    if (row.requires_label && !prompt.contains(*row.requires_label)) continue;
    if (row.requires_positive && !prompt.contains_positive(*row.requires_positive))
      continue;
    return row.logits;
  }
  return default_logits_;
}

std::optional<std::size_t> ToyTableModel::token_index(
    std::string_view token) const {
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (vocab_[i] == token) return i;
  }
  return std::nullopt;
}

std::vector<double> biased_softmax(std::span<const double> logits,
                                   std::size_t start_index, double bias) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  if (start_index < out.size()) out[start_index] += bias;
  double mx = kNegInf;
  for (double v : out) mx = std::max(mx, v);
  if (!(mx > kNegInf)) {
    throw Error("DegenerateLogits", "all logits are -inf after masking");
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

void MarkerScanner::feed(char c) {
  if (escape_) {
    escape_ = false;  // literal char, no structural effect
    return;
  }
  switch (state_) {
    case State::Plain:
      if (c == '\\') {
        escape_ = true;
      } else if (c == '<') {
        state_ = State::OpenMarker;
        partial_.clear();
      }
      return;
    case State::OpenMarker:
      if (c == '>') {
        open_label_ = partial_;
        partial_.clear();
        state_ = State::Inside;
      } else if (c == '<') {
        partial_.clear();  // marker restart; tolerated on raw output
      } else {
        partial_.push_back(c);
      }
      return;
    case State::Inside:
      if (c == '\\') {
        escape_ = true;
      } else if (c == '<') {
        state_ = State::CloseMarker;
        partial_.clear();
      }
      return;
    case State::CloseMarker: {
      const std::string expected = open_label_ + ">>";
      if (partial_.size() < expected.size() && c == expected[partial_.size()]) {
        partial_.push_back(c);
        if (partial_.size() == expected.size()) {
          state_ = State::Plain;
          open_label_.clear();
          partial_.clear();
        }
        return;
      }
      // Mismatched closer: the consumed chars were literal text.
      state_ = State::Inside;
      partial_.clear();
      feed(c);
      return;
    }
  }
}

namespace {

// Simulates feeding `token` through the scanner while checking that every
// marker fragment stays extendable to some prompt label.
bool simulate_legal(MarkerScanner scan, std::string_view token,
                    const std::vector<std::string>& labels) {
  for (char c : token) {
    if (scan.escape_pending()) {
      scan.feed(c);
      continue;
    }
    switch (scan.state()) {
      case MarkerScanner::State::Plain:
        if (c == '<' && labels.empty()) return false;
        break;
      case MarkerScanner::State::OpenMarker: {
        if (c == '<') return false;  // marker restart
        if (c == '>') {
          const bool complete =
              std::find(labels.begin(), labels.end(), scan.partial()) !=
              labels.end();
          if (!complete) return false;
        } else {
          const std::string candidate = scan.partial() + c;
          const bool extendable =
              std::any_of(labels.begin(), labels.end(),
                          [&](const std::string& l) {
                            return l.compare(0, candidate.size(), candidate) ==
                                       0 &&
                                   candidate.size() <= l.size();
                          });
          if (!extendable) return false;
        }
        break;
      }
      case MarkerScanner::State::Inside:
        break;
      case MarkerScanner::State::CloseMarker: {
        const std::string expected = scan.open_label() + ">>";
        if (scan.partial().size() >= expected.size() ||
            c != expected[scan.partial().size()])
          return false;
        break;
      }
    }
    scan.feed(c);
  }
  return true;
}

}  // namespace

bool token_legal_under_prompt(const MarkerScanner& scan,
                              std::string_view token,
                              const PromptSpec& prompt) {
  return simulate_legal(scan, token, prompt.labels());
}

void enforce_prompt_grammar(std::vector<double>& step_logits,
                            const MarkerScanner& scan,
                            const PromptSpec& prompt,
                            const std::vector<std::string>& vocab,
                            std::optional<std::size_t> eos_index) {
  const std::vector<std::string> labels = prompt.labels();
  for (std::size_t i = 0; i < vocab.size() && i < step_logits.size(); ++i) {
    if (eos_index && i == *eos_index) continue;
    if (!simulate_legal(scan, vocab[i], labels)) step_logits[i] = kNegInf;
  }
}

std::vector<double> enforce_prompt_grammar(std::vector<double> step_logits,
                                           std::string_view emitted,
                                           const PromptSpec& prompt,
                                           const std::vector<std::string>& vocab,
                                           std::optional<std::size_t> eos_index) {
  MarkerScanner scan;
  scan.feed(emitted);
  enforce_prompt_grammar(step_logits, scan, prompt, vocab, eos_index);
  return step_logits;
}

DecodeResult greedy_decode(const TokenModel& model, const PromptSpec& prompt,
                           double bias, std::size_t max_steps,
                           bool enforce_grammar, bool bias_everywhere) {
  const std::vector<std::string>& vocab = model.vocab();
  const std::size_t start = model.start_index();
  const std::optional<std::size_t> eos = model.eos_index();

  DecodeResult out;
  std::vector<std::size_t> context;
  MarkerScanner scan;
  bool finished = false;
  for (std::size_t step = 0; step < max_steps; ++step) {
    std::vector<double> logits = model.next_logits(context, prompt);
    if (logits.size() != vocab.size()) {
      throw Error("ModelContract",
                  "next_logits returned " + std::to_string(logits.size()) +
                      " values for a vocabulary of " +
                      std::to_string(vocab.size()));
    }
    if (enforce_grammar) enforce_prompt_grammar(logits, scan, prompt, vocab, eos);
    const double step_bias =
        bias_everywhere || scan.bias_applies() ? bias : 0.0;
    const std::vector<double> probs = biased_softmax(logits, start, step_bias);
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
      if (probs[i] > probs[best]) best = i;  // ties -> lowest index
    }
    if (eos && best == *eos) {
      finished = true;
      break;
    }
    context.push_back(best);
    out.raw += vocab[best];
    scan.feed(vocab[best]);
  }
  out.steps = context.size();
  out.overflow = !finished;
  out.transcript = parse_span_marker_lenient(out.raw);
  return out;
}

double sequence_nll(const TokenModel& model, const PromptSpec& prompt,
                    const std::vector<std::string>& target_tokens) {
  const std::vector<std::string>& vocab = model.vocab();
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);

  double nll = 0.0;
  std::vector<std::size_t> context;
  for (const std::string& tok : target_tokens) {
    const auto it = index.find(tok);
    if (it == index.end()) {
      throw Error("UnknownToken",
                  "target token '" + tok + "' is not in the vocabulary");
    }
    const std::vector<double> logits = model.next_logits(context, prompt);
    double mx = kNegInf;
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    nll -= (logits[it->second] - mx) - std::log(sum);
    context.push_back(it->second);
  }
  return nll;
}

std::size_t resolve_max_steps(const TokenModel& model,
                              const PromptedDataset* eval_set) {
  if (model.max_steps() > 0) return model.max_steps();
  if (eval_set && !eval_set->records.empty()) {
    std::size_t longest = 0;
    for (const PromptedRecord& pr : eval_set->records) {
      const TaggedTranscript t{pr.record.text, pr.record.entities};
      longest = std::max(longest, default_token_count(serialize_span_marker(t)));
    }
    return std::max<std::size_t>(16, 4 * longest);
  }
  return 256;
}

std::vector<BiasSweepPoint> bias_sweep(const TokenModel& model,
                                       const PromptedDataset& eval_set,
                                       std::vector<double> biases,
                                       const Normalizer& norm,
                                       bool enforce_grammar, unsigned jobs) {
  if (biases.empty()) {
    throw Error("EmptyBiasList", "bias sweep needs at least one bias value");
  }
  std::sort(biases.begin(), biases.end());
  const std::size_t cap = resolve_max_steps(model, &eval_set);
  const unsigned decode_jobs = model.concurrent_safe() ? jobs : 1;

  std::vector<BiasSweepPoint> points;
  points.reserve(biases.size());
  for (double bias : biases) {
    std::vector<std::string> lines(eval_set.records.size());
    parallel_for(eval_set.records.size(), decode_jobs, [&](std::size_t i) {
      lines[i] = greedy_decode(model, eval_set.records[i].prompt, bias, cap,
                               enforce_grammar)
                     .raw;
    });
    const EvalReport report =
        evaluate_corpus(eval_set, lines, TagScheme::SpanMarker, norm, jobs);
    points.push_back(
        {bias, report.micro.precision, report.micro.recall, report.micro.f1});
  }
  return points;
}

}  // namespace nertag
