#include "nertag/metrics.hpp"

#include <algorithm>
#include <cctype>

#include "nertag/codec.hpp"
#include "nertag/errors.hpp"
#include "nertag/parallel.hpp"

namespace nertag {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::string Normalizer::apply(std::string_view s) const {
  std::string text(s);
  if (lowercase) {
    for (char& c : text)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (strip_punctuation) {
    // Trim punctuation from both ends of each non-whitespace run; the
    // whitespace layout is preserved (collapse handles it below).
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
      if (is_space(text[i])) {
        out.push_back(text[i]);
        ++i;
        continue;
      }
      std::size_t end = i;
      while (end < text.size() && !is_space(text[end])) ++end;
      std::size_t lo = i;
      std::size_t hi = end;
      while (lo < hi && is_punct(text[lo])) ++lo;
      while (hi > lo && is_punct(text[hi - 1])) --hi;
      out.append(text, lo, hi - lo);
      i = end;
    }
    text = std::move(out);
  }
  if (collapse_whitespace) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
      if (is_space(c)) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
    text = std::move(out);
  }
  return text;
}

std::vector<std::string> Normalizer::words(std::string_view s) const {
  const std::string n = apply(s);
  std::vector<std::string> out;
  for (const auto& [start, end] : word_boundaries(n))
    out.push_back(n.substr(start, end - start));
  return out;
}

WerBreakdown wer_align(const std::vector<std::string>& ref,
                       const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();

  // Reused across calls: the exhaustive oracle tests hammer this path.
  thread_local std::vector<std::size_t> dist;
  dist.assign((n + 1) * (m + 1), 0);
  auto d = [&](std::size_t i, std::size_t j) -> std::size_t& {
    return dist[i * (m + 1) + j];
  };

  for (std::size_t i = 0; i <= n; ++i) d(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) d(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = d(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::size_t ins = d(i, j - 1) + 1;
      const std::size_t del = d(i - 1, j) + 1;
      d(i, j) = std::min({sub, ins, del});
    }
  }

  WerBreakdown out;
  out.ref_words = n;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d(i, j) == d(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++out.substitutions;
      --i;
      --j;
    } else if (j > 0 && d(i, j) == d(i, j - 1) + 1) {
      ++out.insertions;
      --j;
    } else {
      ++out.deletions;
      --i;
    }
  }
  return out;
}

WerBreakdown wer(std::string_view reference, std::string_view hypothesis,
                 const Normalizer& norm) {
  const std::vector<std::string> ref = norm.words(reference);
  if (ref.empty()) {
    throw Error("DegenerateReference",
                "reference is empty after normalization");
  }
  return wer_align(ref, norm.words(hypothesis));
}

std::map<std::string, MatchCounts> entity_f1(const TaggedTranscript& gold,
                                             const TaggedTranscript& pred,
                                             const Normalizer& norm) {
  // label -> normalized surface -> multiplicity
  std::map<std::string, std::map<std::string, std::size_t>> gold_bag;
  std::map<std::string, std::map<std::string, std::size_t>> pred_bag;
  for (const EntitySpan& e : gold.entities)
    ++gold_bag[e.label][norm.apply(e.surface)];
  for (const EntitySpan& e : pred.entities)
    ++pred_bag[e.label][norm.apply(e.surface)];

  std::map<std::string, MatchCounts> out;
  for (const auto& [label, surfaces] : gold_bag) {
    MatchCounts& c = out[label];
    const auto pit = pred_bag.find(label);
    for (const auto& [surface, g_count] : surfaces) {
      std::size_t p_count = 0;
      if (pit != pred_bag.end()) {
        const auto sit = pit->second.find(surface);
        if (sit != pit->second.end()) p_count = sit->second;
      }
      c.tp += std::min(g_count, p_count);
      c.fn += g_count - std::min(g_count, p_count);
    }
  }
  for (const auto& [label, surfaces] : pred_bag) {
    MatchCounts& c = out[label];
    for (const auto& [surface, p_count] : surfaces) {
      std::size_t g_count = 0;
      const auto git = gold_bag.find(label);
      if (git != gold_bag.end()) {
        const auto sit = git->second.find(surface);
        if (sit != git->second.end()) g_count = sit->second;
      }
      c.fp += p_count - std::min(g_count, p_count);
    }
  }
  return out;
}

double hallucination_rate(const TaggedTranscript& pred,
                          const PromptSpec& prompt) {
  if (pred.entities.empty()) return 0.0;
  std::size_t off = 0;
  for (const EntitySpan& e : pred.entities) {
    if (!prompt.contains(e.label)) ++off;
  }
  return static_cast<double>(off) / static_cast<double>(pred.entities.size());
}

PrfCounts PrfCounts::from(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrfCounts c;
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  if (tp + fp == 0) {
    c.precision = 0.0;
    c.zero_denominator = true;
  } else {
    c.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    c.recall = 0.0;
    c.zero_denominator = true;
  } else {
    c.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (c.precision + c.recall == 0.0) {
    c.f1 = 0.0;
    c.zero_denominator = true;
  } else {
    c.f1 = 2.0 * c.precision * c.recall / (c.precision + c.recall);
  }
  return c;
}

EvalReport evaluate_corpus(const PromptedDataset& gold,
                           const std::vector<std::string>& pred_lines,
                           TagScheme scheme, const Normalizer& norm,
                           unsigned jobs) {
  if (gold.records.size() != pred_lines.size()) {
    throw Error("LengthMismatch",
                "gold has " + std::to_string(gold.records.size()) +
                    " records but predictions have " +
                    std::to_string(pred_lines.size()) + " lines");
  }

  struct Partial {
    WerBreakdown wer;
    std::map<std::string, MatchCounts> counts;
    std::size_t predicted = 0;
    std::size_t off_prompt = 0;
    bool parse_failure = false;
  };
  std::vector<Partial> parts(gold.records.size());

  parallel_for(gold.records.size(), jobs, [&](std::size_t i) {
    Partial& p = parts[i];
    const PromptedRecord& g = gold.records[i];
    TaggedTranscript pred;
    try {
      pred = parse(pred_lines[i], scheme);
    } catch (const Error&) {
      pred = TaggedTranscript{};  // scored as an empty prediction
      p.parse_failure = true;
    }
    const TaggedTranscript gold_t{g.record.text, g.record.entities};
    p.wer = wer_align(norm.words(gold_t.text), norm.words(pred.text));
    p.counts = entity_f1(gold_t, pred, norm);
    p.predicted = pred.entities.size();
    for (const EntitySpan& e : pred.entities) {
      if (!g.prompt.contains(e.label)) ++p.off_prompt;
    }
  });

  EvalReport report;
  report.normalizer = norm;
  report.n_samples = gold.records.size();
  std::map<std::string, MatchCounts> totals;
  for (const Partial& p : parts) {
    report.wer.substitutions += p.wer.substitutions;
    report.wer.deletions += p.wer.deletions;
    report.wer.insertions += p.wer.insertions;
    report.wer.ref_words += p.wer.ref_words;
    for (const auto& [label, c] : p.counts) {
      totals[label].tp += c.tp;
      totals[label].fp += c.fp;
      totals[label].fn += c.fn;
    }
    report.predicted_entities += p.predicted;
    report.off_prompt_entities += p.off_prompt;
    if (p.parse_failure) ++report.parse_failures;
  }
  if (report.wer.ref_words == 0) {
    throw Error("DegenerateReference",
                "no reference words remain after normalization");
  }

  MatchCounts micro;
  for (const auto& [label, c] : totals) {
    report.per_type[label] = PrfCounts::from(c.tp, c.fp, c.fn);
    micro.tp += c.tp;
    micro.fp += c.fp;
    micro.fn += c.fn;
  }
  report.micro = PrfCounts::from(micro.tp, micro.fp, micro.fn);
  report.hallucination_rate =
      report.predicted_entities == 0
          ? 0.0
          : static_cast<double>(report.off_prompt_entities) /
                static_cast<double>(report.predicted_entities);
  return report;
}

std::size_t default_token_count(std::string_view serialized) {
  // Marker groups count one token each and are spliced out without a
  // gap, which reconstructs the plain text exactly (labels may contain
  // spaces, so this cannot be done per whitespace unit).
  std::string residue;
  residue.reserve(serialized.size());
  std::size_t markers = 0;
  std::size_t i = 0;
  while (i < serialized.size()) {
    const char c = serialized[i];
    if (c == '\\' && i + 1 < serialized.size()) {
      residue.push_back(serialized[i + 1]);
      i += 2;
      continue;
    }
    if (c == '<') {
      std::size_t j = i + 1;
      while (j < serialized.size() && serialized[j] != '>' &&
             serialized[j] != '<')
        ++j;
      if (j < serialized.size() && serialized[j] == '>' &&
          valid_label(serialized.substr(i + 1, j - i - 1))) {
        ++markers;
        i = (j + 1 < serialized.size() && serialized[j + 1] == '>') ? j + 2
                                                                    : j + 1;
        continue;
      }
    }
    residue.push_back(c);
    ++i;
  }

  // Words, with (TAG) suffixes counting one extra token. Units merge
  // across spaces while a tag group is open, mirroring the BIO grammar.
  std::vector<std::string> units;
  for (const auto& [start, end] : word_boundaries(residue)) {
    std::string tok = residue.substr(start, end - start);
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
  std::size_t count = markers;
  for (const std::string& unit : units) {
    ++count;
    const std::size_t open = unit.rfind('(');
    if (unit.back() == ')' && open != std::string::npos && open > 0) {
      const std::string tag = unit.substr(open + 1, unit.size() - open - 2);
      if (tag == "O" || tag.rfind("B-", 0) == 0 || tag.rfind("I-", 0) == 0)
        ++count;
    }
  }
  return count;
}

namespace {

SeqLengthStats stats_of(std::vector<std::size_t> values) {
  SeqLengthStats s;
  s.n = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.max = values.back();
  double sum = 0;
  for (std::size_t v : values) sum += static_cast<double>(v);
  s.mean = sum / static_cast<double>(values.size());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 == 1
                 ? static_cast<double>(values[mid])
                 : (static_cast<double>(values[mid - 1]) +
                    static_cast<double>(values[mid])) /
                       2.0;
  return s;
}

}  // namespace

SeqLengthReport sequence_length_report(const Dataset& d,
                                       const TokenCounter& counter) {
  const TokenCounter count = counter ? counter : default_token_count;
  SeqLengthReport report;
  std::vector<std::size_t> plains;
  std::vector<std::size_t> spans;
  std::vector<std::size_t> bios;
  double aligned_plain_sum = 0;
  for (const DatasetRecord& r : d.records) {
    const TaggedTranscript t{r.text, r.entities};
    SeqLengthRow row;
    row.id = r.id;
    row.plain = count(r.text);
    row.span = count(serialize_span_marker(t));
    try {
      row.bio = count(serialize_bio(t));
    } catch (const Error&) {
      row.bio.reset();  // not token-aligned
    }
    plains.push_back(row.plain);
    spans.push_back(row.span);
    if (row.bio) {
      bios.push_back(*row.bio);
      aligned_plain_sum += static_cast<double>(row.plain);
    }
    report.rows.push_back(std::move(row));
  }
  report.plain = stats_of(std::move(plains));
  report.span = stats_of(std::move(spans));
  report.bio = stats_of(std::move(bios));
  report.span_overhead =
      report.plain.mean == 0.0 ? 0.0 : report.span.mean / report.plain.mean;
  const double aligned_plain_mean =
      report.bio.n == 0 ? 0.0 : aligned_plain_sum / static_cast<double>(report.bio.n);
  report.bio_overhead =
      aligned_plain_mean == 0.0 ? 0.0 : report.bio.mean / aligned_plain_mean;
  return report;
}

}  // namespace nertag
