#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "nertag/codec.hpp"
#include "nertag/dataset.hpp"
#include "nertag/errors.hpp"
#include "nertag/rng.hpp"

using namespace nertag;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("nertag_dataset_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

Dataset sample_dataset() {
  Dataset d;
  DatasetRecord a;
  a.id = "a";
  a.text = "the astronaut explored mars";
  a.entities = {{4, 13, "occupation", "astronaut"},
                {23, 27, "celestial-body", "mars"}};
  a.audio_path = "audio/a.wav";
  DatasetRecord b;
  b.id = "b";
  b.text = "hello world";
  b.language = "en";
  DatasetRecord c;
  c.id = "c";
  c.text = "the rover on mars";
  c.entities = {{13, 17, "celestial-body", "mars"}};
  d.records = {a, b, c};
  d.recount();
  return d;
}

}  // namespace

TEST_CASE("load_jsonl reads valid files and computes the inventory") {
  TempDir tmp;
  const std::string path = tmp.file("data.jsonl");
  write_file(path,
             R"({"id": "a", "text": "the astronaut", "entities": [{"start_char": 4, "end_char": 13, "label": "occupation"}]})"
             "\n"
             R"({"id": "b", "text": "hello world", "entities": []})"
             "\n"
             R"({"id": "c", "text": "mars", "entities": [{"start_char": 0, "end_char": 4, "label": "celestial-body"}], "language": "en"})"
             "\n");
  const Dataset d = load_jsonl(path);
  REQUIRE(d.records.size() == 3);
  CHECK(d.records[0].entities[0].surface == "astronaut");
  CHECK(d.records[2].language == "en");
  CHECK(d.type_inventory.at("occupation") == 1);
  CHECK(d.type_inventory.at("celestial-body") == 1);
  CHECK(d.type_inventory.size() == 2);
}

TEST_CASE("load_jsonl boundary and error cases") {
  TempDir tmp;
  const std::string empty = tmp.file("empty.jsonl");
  write_file(empty, "");
  const Dataset d = load_jsonl(empty);
  CHECK(d.records.empty());
  CHECK(d.type_inventory.empty());

  const std::string bad_span = tmp.file("bad_span.jsonl");
  write_file(bad_span,
             R"({"id": "a", "text": "hi", "entities": [{"start_char": 0, "end_char": 9, "label": "x"}]})"
             "\n");
  CHECK(error_code([&] { load_jsonl(bad_span); }) == "SchemaError");

  const std::string dup = tmp.file("dup.jsonl");
  write_file(dup,
             R"({"id": "a", "text": "x", "entities": []})"
             "\n"
             R"({"id": "a", "text": "y", "entities": []})"
             "\n");
  CHECK(error_code([&] { load_jsonl(dup); }) == "DuplicateId");

  const std::string missing = tmp.file("missing.jsonl");
  write_file(missing, R"({"id": "a"})"
                      "\n");
  CHECK(error_code([&] { load_jsonl(missing); }) == "SchemaError");

  const std::string overlap = tmp.file("overlap.jsonl");
  write_file(overlap,
             R"({"id": "a", "text": "one two", "entities": [{"start_char": 0, "end_char": 7, "label": "x"}, {"start_char": 4, "end_char": 7, "label": "y"}]})"
             "\n");
  CHECK(error_code([&] { load_jsonl(overlap); }) == "SchemaError");

  CHECK(error_code([&] { load_jsonl(tmp.file("nonexistent.jsonl")); }) ==
        "IoError");
}

TEST_CASE("save then load is the identity") {
  TempDir tmp;
  const Dataset d = sample_dataset();
  const std::string path = tmp.file("roundtrip.jsonl");
  save_jsonl(d, path);
  const Dataset loaded = load_jsonl(path);
  CHECK(loaded == d);

  // Optional fields absent from the source stay absent in the file.
  std::ifstream in(path);
  std::string line1, line2;
  std::getline(in, line1);
  std::getline(in, line2);
  CHECK(line1.find("audio_path") != std::string::npos);
  CHECK(line2.find("audio_path") == std::string::npos);
  CHECK(line2.find("language") != std::string::npos);
}

TEST_CASE("save emits one line per record") {
  TempDir tmp;
  Dataset d;
  for (int i = 0; i < 250; ++i) {
    DatasetRecord r;
    r.id = "r" + std::to_string(i);
    r.text = "word number " + std::to_string(i);
    d.records.push_back(std::move(r));
  }
  d.recount();
  const std::string path = tmp.file("many.jsonl");
  save_jsonl(d, path);
  std::ifstream in(path);
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 250);
}

TEST_CASE("import_bio_corpus handles the pairs layout") {
  TempDir tmp;
  const std::string path = tmp.file("movie.txt");
  write_file(path,
             "the O\n"
             "new B-Actor\n"
             "guy I-Actor\n"
             "\n"
             "fine O\n"
             "movie O\n");
  const Dataset d = import_bio_corpus(path);
  REQUIRE(d.records.size() == 2);
  CHECK(d.records[0].id == "movie-0");
  CHECK(d.records[0].text == "the new guy");
  REQUIRE(d.records[0].entities.size() == 1);
  CHECK(d.records[0].entities[0].surface == "new guy");
  CHECK(d.records[0].entities[0].label == "Actor");
  CHECK(d.records[1].entities.empty());
  CHECK(d.type_inventory.at("Actor") == 1);

  // DERIVED cross-check: the equivalent inline BIO form parses to the
  // same transcript.
  const TaggedTranscript oracle = parse_bio("the(O) new(B-Actor) guy(I-Actor)");
  CHECK(oracle.text == d.records[0].text);
  CHECK(oracle.entities == d.records[0].entities);
}

TEST_CASE("import_bio_corpus handles the alternating layout") {
  TempDir tmp;
  const std::string path = tmp.file("alt.txt");
  write_file(path,
             "the\n"
             "O\n"
             "astronaut\n"
             "B-occupation\n"
             "\n"
             "hi\n"
             "O\n");
  const Dataset d = import_bio_corpus(path);
  REQUIRE(d.records.size() == 2);
  CHECK(d.records[0].text == "the astronaut");
  REQUIRE(d.records[0].entities.size() == 1);
  CHECK(d.records[0].entities[0].label == "occupation");
}

TEST_CASE("import_bio_corpus handles tabs and spaced labels") {
  TempDir tmp;
  const std::string path = tmp.file("tabs.txt");
  write_file(path,
             "meet\tO\n"
             "the\tO\n"
             "president\tB-Political Role\n");
  const Dataset d = import_bio_corpus(path);
  REQUIRE(d.records.size() == 1);
  REQUIRE(d.records[0].entities.size() == 1);
  CHECK(d.records[0].entities[0].label == "Political Role");
  CHECK(d.records[0].entities[0].surface == "president");
}

TEST_CASE("import_bio_corpus error cases") {
  TempDir tmp;
  const std::string bad_tag = tmp.file("badtag.txt");
  write_file(bad_tag, "word X-Actor\n");
  CHECK(error_code([&] { import_bio_corpus(bad_tag); }) == "UnknownTagPrefix");

  const std::string trailing_ws = tmp.file("trailing.txt");
  write_file(trailing_ws, "word O\nlonely \n");
  CHECK(error_code([&] { import_bio_corpus(trailing_ws); }) == "MalformedRow");

  const std::string dangling = tmp.file("dangling.txt");
  write_file(dangling,
             "the\n"
             "O\n"
             "word\n");
  CHECK(error_code([&] { import_bio_corpus(dangling); }) == "MalformedRow");

  const std::string all_o = tmp.file("all_o.txt");
  write_file(all_o, "a O\nb O\n\nc O\n");
  const Dataset d = import_bio_corpus(all_o);
  CHECK(d.records.size() == 2);
  CHECK(d.records[0].entities.empty());
  CHECK(d.records[1].entities.empty());
}

TEST_CASE("import_bio_corpus output satisfies record invariants") {
  TempDir tmp;
  Rng rng(90210);
  static const char* tag_choices[] = {"O", "B-a", "I-a", "B-b", "I-b"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string corpus;
    const std::size_t sentences = 1 + rng.below(4);
    for (std::size_t s = 0; s < sentences; ++s) {
      const std::size_t len = 1 + rng.below(8);
      for (std::size_t w = 0; w < len; ++w) {
        corpus += "w" + std::to_string(rng.below(5));
        corpus += ' ';
        corpus += tag_choices[rng.below(5)];
        corpus += '\n';
      }
      corpus += '\n';
    }
    const std::string path = tmp.file("random.txt");
    write_file(path, corpus);
    const Dataset d = import_bio_corpus(path);
    for (const DatasetRecord& r : d.records) {
      CHECK_NOTHROW(validate_transcript({r.text, r.entities}));
    }
  }
}

TEST_CASE("inventory_stats matches a brute-force recount") {
  const Dataset d = sample_dataset();
  const InventoryStats s = inventory_stats(d);
  CHECK(s.records == 3);
  CHECK(s.total_entities == 3);
  CHECK(s.unique_types == 2);
  CHECK(s.type_frequencies.at("celestial-body") == 2);
  CHECK(s.entities_per_record.at(0) == 1);
  CHECK(s.entities_per_record.at(1) == 1);
  CHECK(s.entities_per_record.at(2) == 1);

  // brute-force recount
  std::map<std::string, std::size_t> freq;
  for (const DatasetRecord& r : d.records)
    for (const EntitySpan& e : r.entities) ++freq[e.label];
  CHECK(freq == s.type_frequencies);
  CHECK(freq == d.type_inventory);

  const InventoryStats empty = inventory_stats(Dataset{});
  CHECK(empty.records == 0);
  CHECK(empty.unique_types == 0);
  CHECK(empty.total_entities == 0);
}

TEST_CASE("records sharing a type count once unique, twice frequent") {
  Dataset d;
  DatasetRecord a;
  a.id = "a";
  a.text = "mars";
  a.entities = {{0, 4, "planet", "mars"}};
  DatasetRecord b;
  b.id = "b";
  b.text = "venus";
  b.entities = {{0, 5, "planet", "venus"}};
  d.records = {a, b};
  d.recount();
  const InventoryStats s = inventory_stats(d);
  CHECK(s.unique_types == 1);
  CHECK(s.type_frequencies.at("planet") == 2);
}
