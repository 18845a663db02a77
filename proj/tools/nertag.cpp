// nertag: tagged-transcript grammars, dataset tooling, prompt
// augmentation, joint ASR+NER scoring, and a toy decode harness behind
// one batch CLI. Every seeded subcommand is bit-reproducible; JSON
// reports ship with a run manifest.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nertag/augment.hpp"
#include "nertag/codec.hpp"
#include "nertag/dataset.hpp"
#include "nertag/decode.hpp"
#include "nertag/errors.hpp"
#include "nertag/manifest.hpp"
#include "nertag/metrics.hpp"
#include "nertag/parallel.hpp"
#include "nertag/plot.hpp"
#include "nertag/report_io.hpp"
#include "nertag/rng.hpp"

namespace {

using nertag::Error;
using ordered_json = nlohmann::ordered_json;

struct GlobalOpts {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool quiet = false;
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::vector<std::string>& lines,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot open '" + path + "' for writing");
  for (const std::string& l : lines) out << l << '\n';
  if (!out) throw Error("IoError", "failed writing '" + path + "'");
}

// Collects the resolved configuration and input digests of one run and
// drops a <output>.manifest.json next to each written artifact.
class ManifestWriter {
 public:
  ManifestWriter(std::string subcommand, std::uint64_t seed)
      : start_(std::chrono::steady_clock::now()) {
    manifest_.subcommand = std::move(subcommand);
    manifest_.seed = seed;
  }

  ordered_json& config() { return manifest_.config; }

  void add_input(const std::string& path) {
    manifest_.input_digests[path] = nertag::digest_file(path);
  }

  void emit_for(const std::string& output_path) {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    manifest_.duration_ms =
        std::chrono::duration<double, std::milli>(elapsed).count();
    manifest_.save(output_path + ".manifest.json");
  }

 private:
  nertag::RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

nertag::Normalizer normalizer_from_flags(bool no_lowercase, bool keep_punct,
                                         bool keep_whitespace) {
  nertag::Normalizer n;
  n.lowercase = !no_lowercase;
  n.strip_punctuation = !keep_punct;
  n.collapse_whitespace = !keep_whitespace;
  return n;
}

// Loads predictions aligned with the gold order: plain text files by
// line position, .jsonl files by id ({"id": ..., "text": ...}).
std::vector<std::string> load_predictions(const std::string& path,
                                          const nertag::PromptedDataset& gold) {
  const bool jsonl = path.size() >= 6 &&
                     path.compare(path.size() - 6, 6, ".jsonl") == 0;
  if (!jsonl) return read_lines(path);

  std::map<std::string, std::string> by_id;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("SchemaError", "prediction line " + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
    }
    if (!obj.contains("id") || !obj.contains("text"))
      throw Error("SchemaError", "prediction line " + std::to_string(line_no) +
                                     ": needs 'id' and 'text'");
    by_id[obj["id"].get<std::string>()] = obj["text"].get<std::string>();
  }
  if (by_id.size() != gold.records.size()) {
    throw Error("LengthMismatch",
                "gold has " + std::to_string(gold.records.size()) +
                    " records but predictions have " +
                    std::to_string(by_id.size()));
  }
  std::vector<std::string> lines;
  lines.reserve(gold.records.size());
  for (const nertag::PromptedRecord& pr : gold.records) {
    const auto it = by_id.find(pr.record.id);
    if (it == by_id.end())
      throw Error("SchemaError",
                  "no prediction for record id '" + pr.record.id + "'");
    lines.push_back(it->second);
  }
  return lines;
}

int run_convert(const GlobalOpts& g, const std::string& in,
                const std::string& out, const std::string& from,
                const std::string& to) {
  ManifestWriter manifest("convert", g.seed);
  manifest.config()["in"] = in;
  manifest.config()["out"] = out;
  manifest.config()["from"] = from;
  manifest.config()["to"] = to;
  manifest.add_input(in);

  const nertag::TagScheme from_s = nertag::tag_scheme_from_name(from);
  const nertag::TagScheme to_s = nertag::tag_scheme_from_name(to);
  std::vector<std::string> converted;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(in)) {
    ++line_no;
    try {
      converted.push_back(nertag::convert(line, from_s, to_s));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  write_lines(converted, out);
  manifest.emit_for(out);
  if (!g.quiet)
    std::cout << "converted " << converted.size() << " lines to " << out
              << "\n";
  return 0;
}

int run_validate(const GlobalOpts& g, const std::string& file,
                 const std::string& scheme, bool strict) {
  const nertag::TagScheme s = nertag::tag_scheme_from_name(scheme);
  std::size_t entities = 0;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(file)) {
    ++line_no;
    try {
      const nertag::TaggedTranscript t =
          s == nertag::TagScheme::SpanMarker
              ? nertag::parse_span_marker(line)
              : nertag::parse_bio(line, !strict);
      entities += t.entities.size();
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!g.quiet)
    std::cout << line_no << " lines valid, " << entities << " entities\n";
  return 0;
}

int run_import_bio(const GlobalOpts& g, const std::string& in,
                   const std::string& out) {
  ManifestWriter manifest("import-bio", g.seed);
  manifest.config()["in"] = in;
  manifest.config()["out"] = out;
  manifest.add_input(in);

  const nertag::Dataset d = nertag::import_bio_corpus(in);
  nertag::save_jsonl(d, out);
  manifest.emit_for(out);
  if (!g.quiet)
    std::cout << "imported " << d.records.size() << " records, "
              << d.type_inventory.size() << " entity types\n";
  return 0;
}

ordered_json stats_json(const nertag::InventoryStats& s) {
  ordered_json j;
  j["records"] = s.records;
  j["total_entities"] = s.total_entities;
  j["unique_types"] = s.unique_types;
  j["type_frequencies"] = s.type_frequencies;
  ordered_json hist = ordered_json::object();
  for (const auto& [count, records] : s.entities_per_record)
    hist[std::to_string(count)] = records;
  j["entities_per_record"] = std::move(hist);
  return j;
}

int run_stats(const GlobalOpts& g, const std::string& dataset,
              const std::string& report_path) {
  ManifestWriter manifest("stats", g.seed);
  manifest.config()["dataset"] = dataset;
  manifest.add_input(dataset);

  const nertag::Dataset d = nertag::load_jsonl(dataset);
  const ordered_json j = stats_json(nertag::inventory_stats(d));
  if (!report_path.empty()) {
    manifest.config()["report"] = report_path;
    nertag::save_json(j, report_path);
    manifest.emit_for(report_path);
    if (!g.quiet) std::cout << "stats written to " << report_path << "\n";
  } else {
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

struct AugmentOpts {
  std::string dataset;
  std::string pool;
  std::string strategy = "random-sample";
  std::size_t k = 2;
  double dropout = -1.0;
  std::string scheme = "span";
  std::string out;
  bool balanced = false;
  bool shuffle = false;
  bool dropout_positives_only = false;
  std::string separator = ", ";
};

int run_augment(const GlobalOpts& g, const AugmentOpts& o) {
  ManifestWriter manifest("augment", g.seed);
  manifest.config()["dataset"] = o.dataset;
  manifest.config()["pool"] = o.pool.empty() ? o.dataset : o.pool;
  manifest.config()["strategy"] = o.balanced ? "balanced" : o.strategy;
  manifest.config()["k"] = o.k;
  manifest.config()["dropout"] = o.dropout;
  manifest.config()["scheme"] = o.scheme;
  manifest.config()["out"] = o.out;
  manifest.config()["shuffle"] = o.shuffle;
  manifest.config()["dropout_positives_only"] = o.dropout_positives_only;
  manifest.config()["separator"] = o.separator;
  manifest.add_input(o.dataset);
  if (!o.pool.empty() && o.pool != o.dataset) manifest.add_input(o.pool);

  const nertag::Dataset d = nertag::load_jsonl(o.dataset);
  const nertag::Dataset pool =
      o.pool.empty() || o.pool == o.dataset ? d : nertag::load_jsonl(o.pool);
  const nertag::TagScheme scheme = nertag::tag_scheme_from_name(o.scheme);

  nertag::PromptedDataset out;
  if (o.balanced) {
    if (o.dropout >= 0.0)
      throw Error("UsageError", "--dropout does not apply to --balanced");
    out = nertag::build_balanced_eval(d, pool, g.seed);
  } else {
    if (o.dropout < 0.0)
      throw Error("UsageError",
                  "--dropout is required (use 0 to disable dropout)");
    if (o.dropout > 1.0)
      throw Error("UsageError", "--dropout must be within [0, 1]");
    nertag::NegativeStrategy strategy;
    if (o.strategy == "random-type") {
      strategy = nertag::NegativeStrategy::random_type(o.k);
    } else if (o.strategy == "random-sample") {
      strategy = nertag::NegativeStrategy::random_sample(o.k);
    } else if (o.strategy == "hard-negative") {
      strategy = nertag::NegativeStrategy::hard_negative(o.k);
    } else {
      throw Error("UsageError", "unknown strategy '" + o.strategy + "'");
    }

    // Per-record stage seeds: sampling, dropout and shuffling consume
    // indices 3i, 3i+1 and 3i+2 of the derived-seed stream.
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      const nertag::DatasetRecord& rec = d.records[i];
      nertag::PromptSpec prompt = nertag::sample_negatives(
          rec, pool, strategy, nertag::derive_seed(g.seed, 3 * i));
      nertag::TaggedTranscript target{rec.text, rec.entities};
      const nertag::DropoutResult dropped = nertag::apply_type_dropout(
          prompt, target, o.dropout, nertag::derive_seed(g.seed, 3 * i + 1),
          o.dropout_positives_only);
      prompt = dropped.prompt;
      target = dropped.target;
      if (o.shuffle)
        prompt = nertag::shuffle_prompt(prompt,
                                        nertag::derive_seed(g.seed, 3 * i + 2));
      nertag::PromptedRecord pr;
      pr.record = rec;
      pr.prompt = prompt;
      pr.target =
          nertag::render_training_pair(target, prompt, scheme, o.separator)
              .target_text;
      out.records.push_back(std::move(pr));
    }
  }

  nertag::save_prompted_jsonl(out, o.out);
  manifest.emit_for(o.out);
  if (!g.quiet)
    std::cout << "augmented " << out.records.size() << " records to " << o.out
              << "\n";
  return 0;
}

int run_evaluate(const GlobalOpts& g, const std::string& gold_path,
                 const std::string& pred_path, const std::string& scheme,
                 const nertag::Normalizer& norm,
                 const std::string& report_path) {
  ManifestWriter manifest("evaluate", g.seed);
  manifest.config()["gold"] = gold_path;
  manifest.config()["pred"] = pred_path;
  manifest.config()["scheme"] = scheme;
  manifest.config()["lowercase"] = norm.lowercase;
  manifest.config()["strip_punctuation"] = norm.strip_punctuation;
  manifest.config()["collapse_whitespace"] = norm.collapse_whitespace;
  manifest.config()["report"] = report_path;
  manifest.config()["jobs"] = g.jobs;
  manifest.add_input(gold_path);
  manifest.add_input(pred_path);

  const nertag::PromptedDataset gold = nertag::load_prompted_jsonl(gold_path);
  const std::vector<std::string> preds = load_predictions(pred_path, gold);
  const nertag::EvalReport report = nertag::evaluate_corpus(
      gold, preds, nertag::tag_scheme_from_name(scheme), norm, g.jobs);

  nertag::save_json(nertag::report_to_json(report), report_path);
  manifest.emit_for(report_path);
  if (!g.quiet) {
    std::cout << "n=" << report.n_samples << " wer=" << report.wer.wer()
              << " micro_f1=" << report.micro.f1
              << " hallucination=" << report.hallucination_rate
              << " parse_failures=" << report.parse_failures << "\n";
  }
  return 0;
}

int run_seq_length(const GlobalOpts& g, const std::string& dataset,
                   const std::string& report_path,
                   const std::string& plot_path) {
  ManifestWriter manifest("seq-length", g.seed);
  manifest.config()["dataset"] = dataset;
  manifest.config()["report"] = report_path;
  manifest.add_input(dataset);

  const nertag::Dataset d = nertag::load_jsonl(dataset);
  const nertag::SeqLengthReport report = nertag::sequence_length_report(d);
  const ordered_json j = nertag::seq_length_to_json(report);
  nertag::save_json(j, report_path);
  manifest.emit_for(report_path);
  if (!plot_path.empty()) {
    nertag::emit_plot(j, nertag::PlotKind::SeqLength, plot_path);
    manifest.emit_for(plot_path);
  }
  if (!g.quiet) {
    std::cout << "plain=" << report.plain.mean << " span=" << report.span.mean
              << " bio=" << report.bio.mean << " (" << report.bio.n
              << " aligned)\n";
  }
  return 0;
}

int run_decode(const GlobalOpts& g, const std::string& model_path,
               const std::string& prompts_path, double bias,
               const std::string& scheme, const std::string& out,
               bool enforce, bool bias_everywhere,
               std::size_t max_steps_override) {
  ManifestWriter manifest("decode", g.seed);
  manifest.config()["model"] = model_path;
  manifest.config()["prompts"] = prompts_path;
  manifest.config()["bias"] = bias;
  manifest.config()["scheme"] = scheme;
  manifest.config()["out"] = out;
  manifest.config()["enforce_grammar"] = enforce;
  manifest.config()["bias_everywhere"] = bias_everywhere;
  manifest.config()["jobs"] = g.jobs;
  manifest.add_input(model_path);
  manifest.add_input(prompts_path);

  const nertag::ToyTableModel model = nertag::ToyTableModel::load(model_path);
  const nertag::PromptedDataset prompts =
      nertag::load_prompted_jsonl(prompts_path);
  const nertag::TagScheme out_scheme = nertag::tag_scheme_from_name(scheme);
  const std::size_t cap = max_steps_override > 0
                              ? max_steps_override
                              : nertag::resolve_max_steps(model, &prompts);
  manifest.config()["max_steps"] = cap;

  std::vector<std::string> lines(prompts.records.size());
  std::vector<unsigned char> overflowed(prompts.records.size(), 0);
  const unsigned jobs = model.concurrent_safe() ? g.jobs : 1;
  std::optional<Error> failure;
  std::mutex failure_mutex;
  nertag::parallel_for(prompts.records.size(), jobs, [&](std::size_t i) {
    try {
      const nertag::DecodeResult r = nertag::greedy_decode(
          model, prompts.records[i].prompt, bias, cap, enforce,
          bias_everywhere);
      overflowed[i] = r.overflow ? 1 : 0;
      lines[i] = out_scheme == nertag::TagScheme::SpanMarker
                     ? r.raw
                     : nertag::serialize_bio(r.transcript);
    } catch (const Error& e) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure)
        failure = Error(e.code(), "record '" + prompts.records[i].record.id +
                                      "': " + e.what());
    }
  });
  if (failure) throw *failure;

  write_lines(lines, out);
  manifest.emit_for(out);
  std::size_t overflow_count = 0;
  for (unsigned char o : overflowed) overflow_count += o;
  if (!g.quiet) {
    std::cout << "decoded " << lines.size() << " records to " << out;
    if (overflow_count > 0)
      std::cout << " (" << overflow_count << " overflowed)";
    std::cout << "\n";
  }
  return 0;
}

int run_sweep(const GlobalOpts& g, const std::string& model_path,
              const std::string& eval_path, const std::string& biases_arg,
              const nertag::Normalizer& norm, const std::string& report_path,
              const std::string& plot_path, bool enforce) {
  ManifestWriter manifest("sweep", g.seed);
  manifest.config()["model"] = model_path;
  manifest.config()["eval"] = eval_path;
  manifest.config()["biases"] = biases_arg;
  manifest.config()["report"] = report_path;
  manifest.config()["enforce_grammar"] = enforce;
  manifest.config()["jobs"] = g.jobs;
  manifest.add_input(model_path);
  manifest.add_input(eval_path);

  std::vector<double> biases;
  std::stringstream ss(biases_arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      biases.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error("UsageError", "invalid bias value '" + item + "'");
    }
  }

  const nertag::ToyTableModel model = nertag::ToyTableModel::load(model_path);
  const nertag::PromptedDataset eval_set =
      nertag::load_prompted_jsonl(eval_path);
  const std::vector<nertag::BiasSweepPoint> points =
      nertag::bias_sweep(model, eval_set, biases, norm, enforce, g.jobs);

  const ordered_json j =
      nertag::sweep_to_json(points, norm, eval_set.records.size());
  nertag::save_json(j, report_path);
  manifest.emit_for(report_path);
  if (!plot_path.empty()) {
    nertag::emit_plot(j, nertag::PlotKind::PrCurve, plot_path);
    manifest.emit_for(plot_path);
  }
  if (!g.quiet) {
    for (const nertag::BiasSweepPoint& p : points) {
      std::cout << "bias=" << p.bias << " precision=" << p.precision
                << " recall=" << p.recall << " f1=" << p.f1 << "\n";
    }
  }
  return 0;
}

int run_nll(const GlobalOpts& g, const std::string& model_path,
            const std::string& pairs_path, const std::string& report_path) {
  ManifestWriter manifest("nll", g.seed);
  manifest.config()["model"] = model_path;
  manifest.config()["pairs"] = pairs_path;
  manifest.add_input(model_path);
  manifest.add_input(pairs_path);

  const nertag::ToyTableModel model = nertag::ToyTableModel::load(model_path);

  ordered_json pair_reports = ordered_json::array();
  double total = 0.0;
  std::size_t n = 0;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(pairs_path)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("SchemaError", "pairs line " + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
    }
    if (!obj.contains("target_tokens") || !obj["target_tokens"].is_array())
      throw Error("SchemaError", "pairs line " + std::to_string(line_no) +
                                     ": needs a 'target_tokens' array");
    nertag::PromptSpec prompt;
    if (obj.contains("prompt")) {
      for (const auto& ej : obj["prompt"]) {
        prompt.entries.push_back(
            {ej.at("label").get<std::string>(),
             ej.at("polarity").get<std::string>() == "neg"
                 ? nertag::Polarity::Negative
                 : nertag::Polarity::Positive});
      }
    }
    std::vector<std::string> target;
    for (const auto& tj : obj["target_tokens"])
      target.push_back(tj.get<std::string>());

    const std::string id = obj.contains("id")
                               ? obj["id"].get<std::string>()
                               : "pair-" + std::to_string(line_no);
    const double nll = nertag::sequence_nll(model, prompt, target);
    total += nll;
    ++n;
    ordered_json pj;
    pj["id"] = id;
    pj["nll"] = nll;
    pair_reports.push_back(pj);
    if (!g.quiet) std::cout << pj.dump() << "\n";
  }

  if (!report_path.empty()) {
    ordered_json j;
    j["schema_version"] = 1;
    j["pairs"] = pair_reports;
    j["total_nll"] = total;
    j["mean_nll"] = n == 0 ? 0.0 : total / static_cast<double>(n);
    nertag::save_json(j, report_path);
    manifest.emit_for(report_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entity-tagged transcript toolkit: grammars, augmentation, "
               "joint ASR+NER metrics and a toy decode harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nertag::kToolVersion));

  GlobalOpts g;
  app.add_option("--seed", g.seed, "seed for every randomized operation")
      ->envname("NERTAG_SEED");
  app.add_option("--jobs", g.jobs, "worker threads for per-record stages")
      ->envname("NERTAG_JOBS");
  app.add_flag("--quiet", g.quiet, "suppress progress output")
      ->envname("NERTAG_QUIET");

  int exit_code = 0;

  auto* convert = app.add_subcommand("convert", "reserialize tagged text");
  static std::string c_in, c_out, c_from, c_to;
  convert->add_option("in", c_in, "input tagged-text file")->required();
  convert->add_option("out", c_out, "output tagged-text file")->required();
  convert->add_option("--from", c_from, "input scheme (span|bio)")->required();
  convert->add_option("--to", c_to, "output scheme (span|bio)")->required();
  convert->callback(
      [&] { exit_code = run_convert(g, c_in, c_out, c_from, c_to); });

  auto* validate = app.add_subcommand("validate", "check tagged-text grammar");
  static std::string v_file, v_scheme = "span";
  static bool v_strict = false;
  validate->add_option("file", v_file, "tagged-text file")->required();
  validate->add_option("--scheme", v_scheme, "span|bio");
  validate->add_flag("--strict", v_strict,
                     "reject orphan I- tags instead of repairing");
  validate->callback(
      [&] { exit_code = run_validate(g, v_file, v_scheme, v_strict); });

  auto* import_bio =
      app.add_subcommand("import-bio", "convert a column BIO corpus to jsonl");
  static std::string ib_in, ib_out;
  import_bio->add_option("in", ib_in, "column-format corpus")->required();
  import_bio->add_option("out", ib_out, "output dataset jsonl")->required();
  import_bio->callback([&] { exit_code = run_import_bio(g, ib_in, ib_out); });

  auto* stats = app.add_subcommand("stats", "dataset inventory statistics");
  static std::string s_dataset, s_report;
  stats->add_option("dataset", s_dataset, "dataset jsonl")->required();
  stats->add_option("--report", s_report, "write stats JSON here");
  stats->callback([&] { exit_code = run_stats(g, s_dataset, s_report); });

  auto* augment =
      app.add_subcommand("augment", "attach prompts and training targets");
  static AugmentOpts a;
  augment->add_option("dataset", a.dataset, "dataset jsonl")->required();
  augment->add_option("--pool", a.pool, "donor pool jsonl (default: dataset)");
  augment->add_option("--strategy", a.strategy,
                      "random-type|random-sample|hard-negative");
  augment->add_option("--k", a.k, "negative donor count");
  augment->add_option("--dropout", a.dropout,
                      "entity-type dropout rate in [0,1]");
  augment->add_option("--scheme", a.scheme, "target scheme (span|bio)");
  augment->add_option("--out", a.out, "output jsonl")->required();
  augment->add_flag("--balanced", a.balanced,
                    "balanced eval prompts (|negatives| == |positives|)");
  augment->add_flag("--shuffle", a.shuffle, "shuffle prompt entries");
  augment->add_flag("--dropout-positives-only", a.dropout_positives_only,
                    "never drop negative prompt labels");
  augment->add_option("--separator", a.separator,
                      "label separator for rendered prompts");
  augment->callback([&] { exit_code = run_augment(g, a); });

  auto* evaluate = app.add_subcommand("evaluate", "score predictions");
  static std::string e_gold, e_pred, e_scheme = "span", e_report;
  static bool e_no_lowercase = false, e_keep_punct = false, e_keep_ws = false;
  evaluate->add_option("--gold", e_gold, "gold dataset jsonl")->required();
  evaluate->add_option("--pred", e_pred, "predictions (txt or jsonl)")
      ->required();
  evaluate->add_option("--scheme", e_scheme, "span|bio");
  evaluate->add_flag("--no-lowercase", e_no_lowercase,
                     "match case-sensitively");
  evaluate->add_flag("--keep-punct", e_keep_punct,
                     "keep edge punctuation when matching");
  evaluate->add_flag("--keep-whitespace", e_keep_ws,
                     "do not collapse whitespace");
  evaluate->add_option("--report", e_report, "write EvalReport JSON here")
      ->required();
  evaluate->callback([&] {
    exit_code = run_evaluate(
        g, e_gold, e_pred, e_scheme,
        normalizer_from_flags(e_no_lowercase, e_keep_punct, e_keep_ws),
        e_report);
  });

  auto* seq =
      app.add_subcommand("seq-length", "token counts per tagging scheme");
  static std::string q_dataset, q_report, q_plot;
  seq->add_option("--dataset", q_dataset, "dataset jsonl")->required();
  seq->add_option("--report", q_report, "write report JSON here")->required();
  seq->add_option("--plot", q_plot, "write a bar-chart SVG here");
  seq->callback(
      [&] { exit_code = run_seq_length(g, q_dataset, q_report, q_plot); });

  auto* decode = app.add_subcommand("decode", "greedy decode with logit bias");
  static std::string d_model, d_prompts, d_scheme = "span", d_out;
  static double d_bias = 0.0;
  static bool d_enforce = false;
  static bool d_bias_everywhere = false;
  static std::size_t d_max_steps = 0;
  decode->add_option("--model", d_model, "toy model JSON")->required();
  decode->add_option("--prompts", d_prompts, "prompted dataset jsonl")
      ->required();
  decode->add_option("--bias", d_bias, "entity-start logit bias");
  decode->add_option("--scheme", d_scheme, "output scheme (span|bio)");
  decode->add_option("--out", d_out, "output tagged-text file")->required();
  decode->add_flag("--enforce-grammar", d_enforce,
                   "mask markers that leave the prompt label set");
  decode->add_flag("--bias-everywhere", d_bias_everywhere,
                   "apply the bias at every step, not only in plain text");
  decode->add_option("--max-steps", d_max_steps, "decode cap override");
  decode->callback([&] {
    exit_code = run_decode(g, d_model, d_prompts, d_bias, d_scheme, d_out,
                           d_enforce, d_bias_everywhere, d_max_steps);
  });

  auto* sweep = app.add_subcommand("sweep", "precision-recall bias sweep");
  static std::string w_model, w_eval, w_biases, w_report, w_plot;
  static bool w_enforce = false;
  static bool w_no_lowercase = false, w_keep_punct = false, w_keep_ws = false;
  sweep->add_option("--model", w_model, "toy model JSON")->required();
  sweep->add_option("--eval", w_eval, "prompted eval jsonl")->required();
  sweep->add_option("--biases", w_biases, "comma-separated bias grid")
      ->required();
  sweep->add_option("--report", w_report, "write sweep JSON here")->required();
  sweep->add_option("--plot", w_plot, "write a PR-curve SVG here");
  sweep->add_flag("--enforce-grammar", w_enforce,
                  "mask markers that leave the prompt label set");
  sweep->add_flag("--no-lowercase", w_no_lowercase, "match case-sensitively");
  sweep->add_flag("--keep-punct", w_keep_punct,
                  "keep edge punctuation when matching");
  sweep->add_flag("--keep-whitespace", w_keep_ws,
                  "do not collapse whitespace");
  sweep->callback([&] {
    exit_code = run_sweep(
        g, w_model, w_eval, w_biases,
        normalizer_from_flags(w_no_lowercase, w_keep_punct, w_keep_ws),
        w_report, w_plot, w_enforce);
  });

  auto* nll = app.add_subcommand("nll", "teacher-forced sequence NLL");
  static std::string n_model, n_pairs, n_report;
  nll->add_option("--model", n_model, "toy model JSON")->required();
  nll->add_option("--pairs", n_pairs, "pairs jsonl with target_tokens")
      ->required();
  nll->add_option("--report", n_report, "write NLL report JSON here");
  nll->callback([&] { exit_code = run_nll(g, n_model, n_pairs, n_report); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    nlohmann::ordered_json err;
    err["error"] = "UsageError";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const Error& e) {
    nlohmann::ordered_json err;
    err["error"] = e.code();
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::ordered_json err;
    err["error"] = "InternalError";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return exit_code;
}
