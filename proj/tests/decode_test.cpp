#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nertag/augment.hpp"
#include "nertag/decode.hpp"
#include "nertag/errors.hpp"
#include "nertag/rng.hpp"

using namespace nertag;

namespace {

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

// Direct softmax, the oracle for biased_softmax and sequence_nll checks.
std::vector<double> oracle_softmax(std::vector<double> logits) {
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v);
  for (double& v : logits) v = std::exp(v) / sum;
  return logits;
}

PromptSpec prompt_of(const std::vector<std::string>& labels) {
  PromptSpec p;
  for (const std::string& l : labels)
    p.entries.push_back({l, Polarity::Positive});
  return p;
}

// Fig-style scripted model: emits one optional occupation entity whose
// start-token logit leads (gap < 0) or trails (gap > 0) the plain word by
// `gap` at the decision step.
ToyTableModel scripted_entity_model(double gap) {
  nlohmann::json spec;
  spec["vocab"] = {"The",          " ",        "<",       "occupation>",
                   "astronaut",    "occupation>>", "explored", "</s>"};
  spec["eos"] = "</s>";
  spec["start_token"] = "<";
  const double OFF = -100;
  auto logits = [&](std::initializer_list<std::pair<int, double>> hot) {
    std::vector<double> row(8, OFF);
    for (const auto& [idx, v] : hot) row[static_cast<std::size_t>(idx)] = v;
    return row;
  };
  spec["default_logits"] = logits({{0, 1.0}});
  spec["rows"] = nlohmann::json::array();
  auto add = [&](std::vector<std::string> suffix, std::vector<double> l) {
    nlohmann::json row;
    row["context_suffix"] = suffix;
    row["logits"] = l;
    spec["rows"].push_back(row);
  };
  add({"The"}, logits({{1, 1.0}}));
  add({"The", " "}, logits({{2, -gap}, {4, 0.0}}));  // decision step
  add({"The", " ", "<"}, logits({{3, 1.0}}));
  add({"occupation>"}, logits({{4, 1.0}}));
  add({"occupation>", "astronaut"}, logits({{2, 1.0}}));
  add({"astronaut", "<"}, logits({{5, 1.0}}));
  add({"occupation>>"}, logits({{1, 1.0}}));
  add({" ", "astronaut"}, logits({{1, 1.0}}));
  add({"occupation>>", " "}, logits({{6, 1.0}}));
  add({"astronaut", " "}, logits({{6, 1.0}}));
  add({"explored"}, logits({{7, 1.0}}));
  return ToyTableModel::from_json(spec);
}

}  // namespace

TEST_CASE("biased softmax shifts only the start token") {
  // {'<': 1.0, 'a': 2.0} with bias 1.0 makes the two logits equal.
  const std::vector<double> logits = {1.0, 2.0};
  const auto probs = biased_softmax(logits, 0, 1.0);
  CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(probs[1] == doctest::Approx(0.5).epsilon(1e-12));

  // bias 0 is the standard softmax.
  const std::vector<double> raw = {0.3, -1.2, 2.2};
  const auto unbiased = biased_softmax(raw, 1, 0.0);
  const auto oracle = oracle_softmax(raw);
  for (std::size_t i = 0; i < raw.size(); ++i)
    CHECK(unbiased[i] == doctest::Approx(oracle[i]).epsilon(1e-12));

  // Three zero logits with bias ln 2: P(<) = 2/4.
  const std::vector<double> zeros = {0.0, 0.0, 0.0};
  const auto ln2 = biased_softmax(zeros, 0, std::log(2.0));
  CHECK(ln2[0] == doctest::Approx(0.5).epsilon(1e-12));
  const auto shifted = oracle_softmax({std::log(2.0), 0.0, 0.0});
  CHECK(ln2[0] == doctest::Approx(shifted[0]).epsilon(1e-12));
}

TEST_CASE("biased softmax sums to one and ignores common shifts") {
  Rng rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    std::vector<double> logits(n);
    for (double& v : logits) v = (rng.unit() - 0.5) * 20.0;
    const std::size_t start = rng.below(n);
    const double bias = (rng.unit() - 0.5) * 10.0;

    const auto probs = biased_softmax(logits, start, bias);
    double sum = 0.0;
    for (double p : probs) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    const double shift = (rng.unit() - 0.5) * 50.0;
    std::vector<double> shifted = logits;
    for (double& v : shifted) v += shift;
    const auto probs2 = biased_softmax(shifted, start, bias);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(probs2[i] == doctest::Approx(probs[i]).epsilon(1e-9));
  }
}

TEST_CASE("start-token probability increases strictly with the bias") {
  Rng rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + rng.below(8);
    std::vector<double> logits(n);
    for (double& v : logits) v = (rng.unit() - 0.5) * 12.0;
    const std::size_t start = rng.below(n);
    double b1 = (rng.unit() - 0.5) * 8.0;
    double b2 = (rng.unit() - 0.5) * 8.0;
    if (b1 == b2) continue;
    if (b1 > b2) std::swap(b1, b2);
    const double p1 = biased_softmax(logits, start, b1)[start];
    const double p2 = biased_softmax(logits, start, b2)[start];
    CHECK(p2 > p1);
  }
}

TEST_CASE("toy table model validates its schema") {
  nlohmann::json bad;
  bad["vocab"] = {"a", "a"};
  bad["eos"] = "a";
  bad["start_token"] = "a";
  bad["default_logits"] = {0.0, 0.0};
  CHECK(error_code([&] { ToyTableModel::from_json(bad); }) == "SchemaError");

  nlohmann::json missing_start;
  missing_start["vocab"] = {"a", "b"};
  missing_start["eos"] = "a";
  missing_start["start_token"] = "<";
  missing_start["default_logits"] = {0.0, 0.0};
  CHECK(error_code([&] { ToyTableModel::from_json(missing_start); }) ==
        "SchemaError");

  nlohmann::json short_row;
  short_row["vocab"] = {"<", "a"};
  short_row["eos"] = "a";
  short_row["start_token"] = "<";
  short_row["default_logits"] = {0.0};
  CHECK(error_code([&] { ToyTableModel::from_json(short_row); }) ==
        "SchemaError");
}

TEST_CASE("greedy decode reproduces the scripted tagged sentence") {
  const ToyTableModel model = scripted_entity_model(-1.0);
  const PromptSpec prompt = prompt_of({"occupation"});

  const DecodeResult out = greedy_decode(model, prompt, 0.0, 64);
  CHECK(out.raw == "The <occupation>astronaut<occupation>> explored");
  CHECK(!out.overflow);
  CHECK(out.transcript.text == "The astronaut explored");
  REQUIRE(out.transcript.entities.size() == 1);
  CHECK(out.transcript.entities[0].label == "occupation");
  CHECK(out.transcript.entities[0].surface == "astronaut");

  // Determinism.
  const DecodeResult again = greedy_decode(model, prompt, 0.0, 64);
  CHECK(again.raw == out.raw);

  // A hugely negative bias suppresses every entity.
  const DecodeResult none = greedy_decode(model, prompt, -1e9, 64);
  CHECK(none.raw == "The astronaut explored");
  CHECK(none.transcript.entities.empty());
}

TEST_CASE("a trailing start token needs bias to win the argmax") {
  // '<' trails the plain word by 1.0 at the decision step.
  const ToyTableModel model = scripted_entity_model(1.0);
  const PromptSpec prompt = prompt_of({"occupation"});

  CHECK(greedy_decode(model, prompt, 0.0, 64).transcript.entities.empty());
  const DecodeResult biased = greedy_decode(model, prompt, 2.0, 64);
  REQUIRE(biased.transcript.entities.size() == 1);
  CHECK(biased.transcript.entities[0].surface == "astronaut");
}

TEST_CASE("bias gating protects close markers unless bias_everywhere") {
  // Opener leads by 1e10, so a -1e9 bias cannot suppress the opening
  // decision; whether the entity survives depends on the close marker.
  const ToyTableModel model = scripted_entity_model(-1e10);
  const PromptSpec prompt = prompt_of({"occupation"});

  // Gated (default): the '<' of the close marker is not biased, the
  // entity closes normally.
  const DecodeResult gated = greedy_decode(model, prompt, -1e9, 64);
  REQUIRE(gated.transcript.entities.size() == 1);
  CHECK(gated.transcript.entities[0].surface == "astronaut");

  // Bias everywhere: the same negative bias now suppresses the close
  // marker's '<' and the unclosed entity is dropped.
  const DecodeResult ungated =
      greedy_decode(model, prompt, -1e9, 64, false, true);
  CHECK(ungated.transcript.entities.empty());
}

TEST_CASE("greedy decode breaks ties toward the lowest vocab index") {
  nlohmann::json spec;
  spec["vocab"] = {"b", "a", "<", "</s>"};
  spec["eos"] = "</s>";
  spec["start_token"] = "<";
  spec["default_logits"] = {1.0, 1.0, -100.0, -100.0};
  nlohmann::json row;
  row["context_suffix"] = {"b"};
  row["logits"] = {-100.0, -100.0, -100.0, 1.0};
  spec["rows"] = {row};
  const ToyTableModel model = ToyTableModel::from_json(spec);
  const DecodeResult out = greedy_decode(model, PromptSpec{}, 0.0, 8);
  CHECK(out.raw == "b");  // index 0 beats the equal-logit index 1
}

TEST_CASE("decode overflow is flagged and still returns the output") {
  nlohmann::json spec;
  spec["vocab"] = {"a", "</s>"};
  spec["eos"] = "</s>";
  spec["start_token"] = "a";  // irrelevant here
  spec["default_logits"] = {1.0, -100.0};
  const ToyTableModel model = ToyTableModel::from_json(spec);
  const DecodeResult out = greedy_decode(model, PromptSpec{}, 0.0, 10);
  CHECK(out.overflow);
  CHECK(out.steps == 10);
  CHECK(out.raw == "aaaaaaaaaa");
}

TEST_CASE("marker scanner tracks entity state for bias gating") {
  MarkerScanner scan;
  CHECK(scan.bias_applies());
  scan.feed("The ");
  CHECK(scan.state() == MarkerScanner::State::Plain);
  scan.feed('<');
  CHECK(scan.state() == MarkerScanner::State::OpenMarker);
  CHECK(!scan.bias_applies());
  scan.feed("occ");
  CHECK(scan.partial() == "occ");
  scan.feed("upation>");
  CHECK(scan.state() == MarkerScanner::State::Inside);
  CHECK(scan.open_label() == "occupation");
  CHECK(!scan.bias_applies());
  scan.feed("astronaut");
  CHECK(scan.state() == MarkerScanner::State::Inside);
  scan.feed("<occupation>>");
  CHECK(scan.state() == MarkerScanner::State::Plain);
  CHECK(scan.bias_applies());
  scan.feed("\\");
  CHECK(!scan.bias_applies());  // escaped next char is literal
  scan.feed('<');
  CHECK(scan.state() == MarkerScanner::State::Plain);
}

TEST_CASE("grammar enforcement keeps marker continuations on prompt") {
  const std::vector<std::string> vocab = {"upation>", "zzz>", "x", "<",
                                          "</s>"};
  const PromptSpec prompt = prompt_of({"occupation"});

  MarkerScanner scan;
  scan.feed("The <occ");  // partially emitted marker
  CHECK(scan.state() == MarkerScanner::State::OpenMarker);

  std::vector<double> logits = {1.0, 2.0, 3.0, 4.0, 0.0};
  enforce_prompt_grammar(logits, scan, prompt, vocab, 4);
  CHECK(logits[0] == 1.0);  // completes "occupation>"
  CHECK(std::isinf(logits[1]));
  CHECK(std::isinf(logits[2]));  // "occx..." matches no prompt label
  CHECK(std::isinf(logits[3]));
  CHECK(logits[4] == 0.0);  // eos always legal

  // Disabled enforcement leaves logits untouched; that is just not
  // calling the function, so spot-check the overload identity instead.
  MarkerScanner plain;
  std::vector<double> free_logits = {1.0, 2.0, 3.0, 4.0, 0.0};
  const auto kept =
      enforce_prompt_grammar(free_logits, "", prompt, vocab, 4);
  CHECK(kept[2] == 3.0);  // plain text stays legal
}

TEST_CASE("an empty prompt masks the entity start token itself") {
  const std::vector<std::string> vocab = {"<", "word", "</s>"};
  std::vector<double> logits = {5.0, 1.0, 0.0};
  const auto masked =
      enforce_prompt_grammar(logits, "", PromptSpec{}, vocab, 2);
  CHECK(std::isinf(masked[0]));
  CHECK(masked[1] == 1.0);

  // Escaped '<' is literal text and survives an empty prompt.
  const std::vector<std::string> vocab2 = {"\\<", "word", "</s>"};
  std::vector<double> logits2 = {5.0, 1.0, 0.0};
  const auto masked2 =
      enforce_prompt_grammar(logits2, "", PromptSpec{}, vocab2, 2);
  CHECK(masked2[0] == 5.0);
}

TEST_CASE("enforced decodes never hallucinate") {
  Rng rng(777);
  const std::vector<std::string> vocab = {
      "a",  "b",   " ",    "<",    ">",    "t1",  "t2",   "zz",
      "t1>", "t2>", "t1>>", "t2>>", "zz>", "zz>>", "</s>"};
  for (int trial = 0; trial < 150; ++trial) {
    nlohmann::json spec;
    spec["vocab"] = vocab;
    spec["eos"] = "</s>";
    spec["start_token"] = "<";
    std::vector<double> defaults(vocab.size());
    for (double& v : defaults) v = (rng.unit() - 0.5) * 6.0;
    spec["default_logits"] = defaults;
    spec["rows"] = nlohmann::json::array();
    const std::size_t n_rows = rng.below(6);
    for (std::size_t r = 0; r < n_rows; ++r) {
      nlohmann::json row;
      row["context_suffix"] = {vocab[rng.below(vocab.size())]};
      std::vector<double> l(vocab.size());
      for (double& v : l) v = (rng.unit() - 0.5) * 6.0;
      row["logits"] = l;
      spec["rows"].push_back(row);
    }
    const ToyTableModel model = ToyTableModel::from_json(spec);

    PromptSpec prompt;
    if (rng.below(4) != 0) prompt.entries.push_back({"t1", Polarity::Positive});
    if (rng.below(2) == 0) prompt.entries.push_back({"t2", Polarity::Negative});

    const DecodeResult out =
        greedy_decode(model, prompt, rng.unit() * 4.0 - 2.0, 40, true);
    CHECK(hallucination_rate(out.transcript, prompt) == 0.0);
    for (const EntitySpan& e : out.transcript.entities) {
      CHECK(prompt.contains(e.label));
    }
  }
}

TEST_CASE("sequence NLL matches closed forms and the softmax oracle") {
  // Probability-1 model: NLL exactly 0.
  nlohmann::json sure;
  sure["vocab"] = {"a", "b", "</s>"};
  sure["eos"] = "</s>";
  sure["start_token"] = "a";
  sure["default_logits"] = {1000.0, -1000.0, -1000.0};
  const ToyTableModel sure_model = ToyTableModel::from_json(sure);
  CHECK(sequence_nll(sure_model, PromptSpec{}, {"a", "a", "a"}) == 0.0);

  // Uniform model over V=4 tokens, n=3 targets: NLL = 3 ln 4.
  nlohmann::json uniform;
  uniform["vocab"] = {"a", "b", "c", "</s>"};
  uniform["eos"] = "</s>";
  uniform["start_token"] = "a";
  uniform["default_logits"] = {0.0, 0.0, 0.0, 0.0};
  const ToyTableModel uniform_model = ToyTableModel::from_json(uniform);
  CHECK(sequence_nll(uniform_model, PromptSpec{}, {"a", "b", "c"}) ==
        doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-12));

  // Three-step fixture against the brute-force softmax oracle.
  nlohmann::json three;
  three["vocab"] = {"a", "b", "c", "</s>"};
  three["eos"] = "</s>";
  three["start_token"] = "a";
  three["default_logits"] = {0.3, -0.2, 1.1, -3.0};
  nlohmann::json r1;
  r1["context_suffix"] = {"c"};
  r1["logits"] = {2.0, 0.5, -1.0, -3.0};
  nlohmann::json r2;
  r2["context_suffix"] = {"c", "a"};
  r2["logits"] = {0.0, 3.0, 0.0, -3.0};
  three["rows"] = {r1, r2};
  const ToyTableModel three_model = ToyTableModel::from_json(three);

  const double expected = -std::log(oracle_softmax({0.3, -0.2, 1.1, -3.0})[2]) -
                          std::log(oracle_softmax({2.0, 0.5, -1.0, -3.0})[0]) -
                          std::log(oracle_softmax({0.0, 3.0, 0.0, -3.0})[1]);
  CHECK(sequence_nll(three_model, PromptSpec{}, {"c", "a", "b"}) ==
        doctest::Approx(expected).epsilon(1e-9));

  CHECK(error_code([&] {
          sequence_nll(three_model, PromptSpec{}, {"nope"});
        }) == "UnknownToken");
}

TEST_CASE("sequence NLL decreases weakly in the target logit") {
  for (double boost : {0.0, 0.5, 1.0, 2.0, 5.0}) {
    nlohmann::json spec;
    spec["vocab"] = {"a", "b", "</s>"};
    spec["eos"] = "</s>";
    spec["start_token"] = "a";
    spec["default_logits"] = {0.0 + boost, 1.0, -1.0};
    const ToyTableModel model = ToyTableModel::from_json(spec);
    static double previous = 1e300;
    const double nll = sequence_nll(model, PromptSpec{}, {"a"});
    CHECK(nll <= previous);
    previous = nll;
  }
}

TEST_CASE("prompt-conditioned rows fire only when the prompt matches") {
  nlohmann::json spec;
  spec["vocab"] = {"yes", "no", "<", "</s>"};
  spec["eos"] = "</s>";
  spec["start_token"] = "<";
  spec["default_logits"] = {-100.0, 1.0, -100.0, -100.0};
  nlohmann::json row;
  row["context_suffix"] = nlohmann::json::array();
  row["requires_positive"] = "magic";
  row["logits"] = {1.0, -100.0, -100.0, -100.0};
  spec["rows"] = {row};
  const ToyTableModel model = ToyTableModel::from_json(spec);

  const DecodeResult hit =
      greedy_decode(model, prompt_of({"magic"}), 0.0, 3);
  CHECK(hit.raw.rfind("yes", 0) == 0);

  PromptSpec negative;
  negative.entries = {{"magic", Polarity::Negative}};
  const DecodeResult miss = greedy_decode(model, negative, 0.0, 3);
  CHECK(miss.raw.rfind("no", 0) == 0);
}

TEST_CASE("the shipped sweep fixture reproduces the enumerated tradeoff") {
  const ToyTableModel model =
      ToyTableModel::load(std::string(NERTAG_FIXTURE_DIR) + "/sweep_model.json");
  const PromptedDataset eval_set =
      load_prompted_jsonl(std::string(NERTAG_FIXTURE_DIR) + "/sweep_eval.jsonl");

  const auto points =
      bias_sweep(model, eval_set, {4.0, 0.0, 2.0}, Normalizer{});
  REQUIRE(points.size() == 3);
  CHECK(points[0].bias == 0.0);  // sorted ascending
  CHECK(points[1].bias == 2.0);
  CHECK(points[2].bias == 4.0);

  CHECK(points[0].precision == doctest::Approx(1.0));
  CHECK(points[0].recall == doctest::Approx(0.5));
  CHECK(points[0].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(points[1].precision == doctest::Approx(1.0));
  CHECK(points[1].recall == doctest::Approx(1.0));
  CHECK(points[1].f1 == doctest::Approx(1.0));
  CHECK(points[2].precision == doctest::Approx(2.0 / 3.0));
  CHECK(points[2].recall == doctest::Approx(1.0));
  CHECK(points[2].f1 == doctest::Approx(0.8));

  for (std::size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].recall >= points[i - 1].recall);
    CHECK(points[i].precision <= points[i - 1].precision);
  }
}

TEST_CASE("a single-bias sweep equals a plain evaluation of greedy output") {
  const ToyTableModel model =
      ToyTableModel::load(std::string(NERTAG_FIXTURE_DIR) + "/sweep_model.json");
  const PromptedDataset eval_set =
      load_prompted_jsonl(std::string(NERTAG_FIXTURE_DIR) + "/sweep_eval.jsonl");

  const auto points = bias_sweep(model, eval_set, {0.0}, Normalizer{});
  REQUIRE(points.size() == 1);

  const std::size_t cap = resolve_max_steps(model, &eval_set);
  std::vector<std::string> lines;
  for (const PromptedRecord& pr : eval_set.records)
    lines.push_back(greedy_decode(model, pr.prompt, 0.0, cap).raw);
  const EvalReport report =
      evaluate_corpus(eval_set, lines, TagScheme::SpanMarker, Normalizer{});
  CHECK(points[0].precision == report.micro.precision);
  CHECK(points[0].recall == report.micro.recall);
  CHECK(points[0].f1 == report.micro.f1);

  // An impossible bias suppresses every entity: recall 0.
  const auto floor_points =
      bias_sweep(model, eval_set, {-1e9}, Normalizer{});
  CHECK(floor_points[0].recall == 0.0);

  CHECK(error_code([&] {
          bias_sweep(model, eval_set, {}, Normalizer{});
        }) == "EmptyBiasList");
}

TEST_CASE("max step resolution follows the documented fallbacks") {
  nlohmann::json spec;
  spec["vocab"] = {"a", "</s>"};
  spec["eos"] = "</s>";
  spec["start_token"] = "a";
  spec["default_logits"] = {0.0, 0.0};
  spec["max_steps"] = 7;
  const ToyTableModel pinned = ToyTableModel::from_json(spec);
  CHECK(resolve_max_steps(pinned, nullptr) == 7);

  spec.erase("max_steps");
  const ToyTableModel open_ended = ToyTableModel::from_json(spec);
  CHECK(resolve_max_steps(open_ended, nullptr) == 256);

  PromptedDataset eval_set;
  PromptedRecord pr;
  pr.record.id = "r";
  pr.record.text = "one two three";  // 3 plain tokens, no entities
  eval_set.records.push_back(pr);
  CHECK(resolve_max_steps(open_ended, &eval_set) == 16);  // floor
}
