#include "nertag/augment.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "nertag/codec.hpp"
#include "nertag/errors.hpp"
#include "nertag/rng.hpp"

namespace nertag {

bool PromptSpec::contains(std::string_view label) const {
  return std::any_of(entries.begin(), entries.end(),
                     [&](const PromptEntry& e) { return e.label == label; });
}

bool PromptSpec::contains_positive(std::string_view label) const {
  return std::any_of(entries.begin(), entries.end(), [&](const PromptEntry& e) {
    return e.polarity == Polarity::Positive && e.label == label;
  });
}

std::vector<std::string> PromptSpec::labels() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const PromptEntry& e : entries) out.push_back(e.label);
  return out;
}

double trigram_jaccard(std::string_view a, std::string_view b) {
  auto grams = [](std::string_view s) {
    std::set<std::string> g;
    if (s.size() < 3) {
      if (!s.empty()) g.insert(std::string(s));
      return g;
    }
    for (std::size_t i = 0; i + 3 <= s.size(); ++i)
      g.insert(std::string(s.substr(i, 3)));
    return g;
  };
  const std::set<std::string> ga = grams(a);
  const std::set<std::string> gb = grams(b);
  if (ga.empty() && gb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const std::string& g : ga) inter += gb.count(g);
  const std::size_t uni = ga.size() + gb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// positives ++ sorted deduplicated negatives, with donor labels that
// collide with a positive dropped rather than flipped.
PromptSpec assemble(const std::vector<std::string>& positives,
                    const std::vector<std::string>& negative_labels,
                    std::uint64_t seed) {
  PromptSpec spec;
  spec.seed = seed;
  std::set<std::string> positive_set(positives.begin(), positives.end());
  std::set<std::string> negatives;
  for (const std::string& l : negative_labels) {
    if (!positive_set.count(l)) negatives.insert(l);
  }
  for (const std::string& l : positives)
    spec.entries.push_back({l, Polarity::Positive});
  for (const std::string& l : negatives)
    spec.entries.push_back({l, Polarity::Negative});
  return spec;
}

}  // namespace

PromptSpec sample_negatives(const DatasetRecord& record, const Dataset& pool,
                            const NegativeStrategy& strategy,
                            std::uint64_t seed) {
  const std::vector<std::string> positives = record.gold_labels();
  Rng rng(seed);
  std::vector<std::string> negatives;

  switch (strategy.kind) {
    case NegativeStrategy::Kind::RandomType: {
      std::vector<std::string> eligible;
      const std::set<std::string> pos(positives.begin(), positives.end());
      for (const auto& [label, count] : pool.type_inventory) {
        if (!pos.count(label)) eligible.push_back(label);  // inventory is sorted
      }
      if (strategy.k > 0 && eligible.empty()) {
        throw Error("EmptyPool",
                    "no eligible entity type to draw negatives from");
      }
      for (std::size_t idx : rng.sample_indices(eligible.size(), strategy.k))
        negatives.push_back(eligible[idx]);
      break;
    }
    case NegativeStrategy::Kind::RandomSample: {
      std::vector<std::size_t> donors;
      for (std::size_t i = 0; i < pool.records.size(); ++i) {
        if (pool.records[i].id != record.id) donors.push_back(i);
      }
      if (strategy.k > 0 && donors.empty()) {
        throw Error("EmptyPool", "no eligible donor record for '" + record.id +
                                     "'");
      }
      for (std::size_t idx : rng.sample_indices(donors.size(), strategy.k)) {
        for (const std::string& l : pool.records[donors[idx]].gold_labels())
          negatives.push_back(l);
      }
      break;
    }
    case NegativeStrategy::Kind::HardNegative: {
      const SimilarityFn sim = strategy.similarity
                                   ? strategy.similarity
                                   : [](const DatasetRecord& a,
                                        const DatasetRecord& b) {
                                       return trigram_jaccard(a.text, b.text);
                                     };
      struct Scored {
        double score;
        std::size_t index;
      };
      std::vector<Scored> scored;
      for (std::size_t i = 0; i < pool.records.size(); ++i) {
        if (pool.records[i].id == record.id) continue;
        scored.push_back({sim(record, pool.records[i]), i});
      }
      if (strategy.k > 0 && scored.empty()) {
        throw Error("EmptyPool", "no eligible donor record for '" + record.id +
                                     "'");
      }
      std::stable_sort(scored.begin(), scored.end(),
                       [](const Scored& a, const Scored& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.index < b.index;
                       });
      const std::size_t take = std::min(strategy.k, scored.size());
      for (std::size_t d = 0; d < take; ++d) {
        for (const std::string& l :
             pool.records[scored[d].index].gold_labels())
          negatives.push_back(l);
      }
      break;
    }
  }
  return assemble(positives, negatives, seed);
}

DropoutResult apply_type_dropout(const PromptSpec& prompt,
                                 const TaggedTranscript& target, double rate,
                                 std::uint64_t seed, bool positives_only) {
  for (const EntitySpan& e : target.entities) {
    if (!prompt.contains_positive(e.label)) {
      throw Error("InconsistentInput",
                  "target entity label '" + e.label +
                      "' is not a positive prompt entry");
    }
  }

  std::set<std::string> considered;
  for (const PromptEntry& e : prompt.entries) {
    if (positives_only && e.polarity != Polarity::Positive) continue;
    considered.insert(e.label);
  }

  Rng rng(seed);
  std::set<std::string> dropped;
  for (const std::string& label : considered) {  // sorted draw order
    if (rng.unit() < rate) dropped.insert(label);
  }

  DropoutResult out;
  out.prompt.seed = seed;
  for (const PromptEntry& e : prompt.entries) {
    if (!dropped.count(e.label)) out.prompt.entries.push_back(e);
  }
  out.target.text = target.text;
  for (const EntitySpan& e : target.entities) {
    if (!dropped.count(e.label)) out.target.entities.push_back(e);
  }
  return out;
}

PromptSpec shuffle_prompt(PromptSpec prompt, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(prompt.entries);
  prompt.seed = seed;
  return prompt;
}

PromptedDataset build_balanced_eval(const Dataset& d, const Dataset& pool,
                                    std::uint64_t seed) {
  std::vector<std::string> inventory;
  inventory.reserve(pool.type_inventory.size());
  for (const auto& [label, count] : pool.type_inventory)
    inventory.push_back(label);

  PromptedDataset out;
  out.records.reserve(d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const DatasetRecord& rec = d.records[i];
    const std::vector<std::string> positives = rec.gold_labels();
    const std::set<std::string> gold(positives.begin(), positives.end());

    std::vector<std::string> eligible;
    for (const std::string& label : inventory) {
      if (!gold.count(label)) eligible.push_back(label);
    }
    if (eligible.size() < positives.size()) {
      throw Error("InsufficientNegativePool",
                  "record '" + rec.id + "' needs " +
                      std::to_string(positives.size()) +
                      " negatives but the pool offers only " +
                      std::to_string(eligible.size()));
    }
    const std::uint64_t record_seed = derive_seed(seed, i);
    Rng rng(record_seed);
    std::vector<std::string> negatives;
    for (std::size_t idx : rng.sample_indices(eligible.size(), positives.size()))
      negatives.push_back(eligible[idx]);

    PromptedRecord pr;
    pr.record = rec;
    pr.prompt = assemble(positives, negatives, record_seed);
    out.records.push_back(std::move(pr));
  }
  return out;
}

RenderedPair render_training_pair(const TaggedTranscript& target,
                                  const PromptSpec& prompt, TagScheme scheme,
                                  std::string_view separator) {
  RenderedPair out;
  bool first = true;
  for (const PromptEntry& e : prompt.entries) {
    if (!first) out.prompt_text += separator;
    out.prompt_text += e.label;
    first = false;
  }
  out.target_text = serialize(target, scheme);
  return out;
}

namespace {

using ordered_json = nlohmann::ordered_json;

PromptSpec prompt_from_json(const nlohmann::json& arr, std::size_t line_no) {
  PromptSpec spec;
  if (!arr.is_array()) {
    throw Error("SchemaError",
                "line " + std::to_string(line_no) + ": field 'prompt': must be an array");
  }
  std::set<std::string> seen;
  for (const auto& ej : arr) {
    if (!ej.is_object() || !ej.contains("label") || !ej.contains("polarity")) {
      throw Error("SchemaError", "line " + std::to_string(line_no) +
                                     ": field 'prompt': entries need label and "
                                     "polarity");
    }
    PromptEntry e;
    e.label = ej["label"].get<std::string>();
    if (!seen.insert(e.label).second) {
      throw Error("SchemaError", "line " + std::to_string(line_no) +
                                     ": field 'prompt': duplicate label '" +
                                     e.label + "'");
    }
    const std::string pol = ej["polarity"].get<std::string>();
    if (pol == "pos") {
      e.polarity = Polarity::Positive;
    } else if (pol == "neg") {
      e.polarity = Polarity::Negative;
    } else {
      throw Error("SchemaError", "line " + std::to_string(line_no) +
                                     ": field 'prompt': polarity must be "
                                     "'pos' or 'neg'");
    }
    spec.entries.push_back(std::move(e));
  }
  return spec;
}

}  // namespace

PromptedDataset load_prompted_jsonl(const std::string& path) {
  // Reuse the dataset loader for the base fields, then re-read the
  // prompt/target extensions line by line.
  const Dataset base = load_jsonl(path);
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open '" + path + "' for reading");

  PromptedDataset out;
  out.records.reserve(base.records.size());
  std::string line;
  std::size_t line_no = 0;
  std::size_t rec_idx = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const nlohmann::json obj = nlohmann::json::parse(line);
    PromptedRecord pr;
    pr.record = base.records[rec_idx++];
    if (obj.contains("prompt")) {
      pr.prompt = prompt_from_json(obj["prompt"], line_no);
      if (obj.contains("prompt_seed") &&
          obj["prompt_seed"].is_number_unsigned()) {
        pr.prompt.seed = obj["prompt_seed"].get<std::uint64_t>();
      }
    } else {
      for (const std::string& l : pr.record.gold_labels())
        pr.prompt.entries.push_back({l, Polarity::Positive});
    }
    if (obj.contains("target")) {
      pr.target = obj["target"].get<std::string>();
    }
    out.records.push_back(std::move(pr));
  }
  return out;
}

void save_prompted_jsonl(const PromptedDataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot open '" + path + "' for writing");
  for (const PromptedRecord& pr : d.records) {
    ordered_json obj;
    obj["id"] = pr.record.id;
    obj["text"] = pr.record.text;
    obj["entities"] = ordered_json::array();
    for (const EntitySpan& e : pr.record.entities) {
      ordered_json ej;
      ej["start_char"] = e.start_char;
      ej["end_char"] = e.end_char;
      ej["label"] = e.label;
      obj["entities"].push_back(std::move(ej));
    }
    if (pr.record.audio_path) obj["audio_path"] = *pr.record.audio_path;
    if (pr.record.language) obj["language"] = *pr.record.language;
    obj["prompt"] = ordered_json::array();
    for (const PromptEntry& e : pr.prompt.entries) {
      ordered_json ej;
      ej["label"] = e.label;
      ej["polarity"] = e.polarity == Polarity::Positive ? "pos" : "neg";
      obj["prompt"].push_back(std::move(ej));
    }
    obj["prompt_seed"] = pr.prompt.seed;
    if (pr.target) obj["target"] = *pr.target;
    out << obj.dump() << '\n';
  }
  if (!out) throw Error("IoError", "failed writing '" + path + "'");
}

}  // namespace nertag
