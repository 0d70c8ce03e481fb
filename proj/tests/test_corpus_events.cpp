#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "segcl/corpus.hpp"
#include "segcl/events.hpp"
#include "support/temp.hpp"

using namespace segcl;
using segcl::testing::slurp;
using segcl::testing::TempFile;

TEST_CASE("plain-lines: one line becomes one document") {
  TempFile f("hello world\n");
  const Corpus c = load_corpus(f.path, CorpusFormat::PlainLines);
  REQUIRE(c.size() == 1);
  CHECK(c.documents[0].doc_id == "1");
  REQUIRE(c.documents[0].sentences.size() == 1);
  CHECK(c.documents[0].sentences[0] == std::vector<std::string>{"hello", "world"});
  CHECK_FALSE(c.documents[0].label.has_value());
}

TEST_CASE("labeled-tsv parses the label") {
  TempFile f("sports\tPeter eats an apple\n");
  const Corpus c = load_corpus(f.path, CorpusFormat::LabeledTsv);
  REQUIRE(c.size() == 1);
  CHECK(c.documents[0].label == "sports");
  CHECK(c.documents[0].sentences[0][0] == "Peter");
}

TEST_CASE("blank lines are skipped with line-number-stable ids") {
  TempFile f("first doc\n\nthird doc\n");
  const Corpus c = load_corpus(f.path, CorpusFormat::PlainLines);
  REQUIRE(c.size() == 2);
  CHECK(c.documents[0].doc_id == "1");
  CHECK(c.documents[1].doc_id == "3");
}

TEST_CASE("empty corpus file is an error") {
  TempFile f("");
  CHECK_THROWS_AS(load_corpus(f.path, CorpusFormat::PlainLines), SchemaError);
}

TEST_CASE("labeled-tsv row without a tab names the line") {
  TempFile f("sports no tab here\n");
  CHECK_THROWS_WITH_AS(load_corpus(f.path, CorpusFormat::LabeledTsv),
                       doctest::Contains("line 1"), SchemaError);
}

TEST_CASE("tokenize_line splits sentences on terminators") {
  const auto sents = tokenize_line("Peter eats. Mary runs! done");
  REQUIRE(sents.size() == 3);
  CHECK(sents[0] == std::vector<std::string>{"Peter", "eats"});
  CHECK(sents[1] == std::vector<std::string>{"Mary", "runs"});
  CHECK(sents[2] == std::vector<std::string>{"done"});
}

TEST_CASE("stopword and frequency filters drop tokens at load") {
  TempFile f("the cat saw the dog\nthe cat saw the bird\n");
  CorpusOptions opts;
  opts.stopwords = {"the"};
  opts.min_word_freq = 2;
  const Corpus c = load_corpus(f.path, CorpusFormat::PlainLines, opts);
  REQUIRE(c.size() == 2);
  CHECK(c.documents[0].sentences[0] == std::vector<std::string>{"cat", "saw"});
  CHECK(c.documents[1].sentences[0] == std::vector<std::string>{"cat", "saw"});
}

TEST_CASE("heuristic extracts the worked SVO example") {
  Document doc;
  doc.doc_id = "d";
  doc.sentences = {{"Peter", "eats", "apple"}};
  const auto blocks = extract_events_heuristic(doc, {});
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].subject() == EventElement{"peter", Category::Entity});
  CHECK(blocks[0].predicate() == EventElement{"eats", Category::Predicate});
  CHECK(blocks[0].object() == EventElement{"apple", Category::Argument});
  CHECK(blocks[0].sentence_index == 0);
}

TEST_CASE("document without sentences yields no blocks") {
  Document doc;
  doc.doc_id = "d";
  CHECK(extract_events_heuristic(doc, {}).empty());
}

TEST_CASE("stopwords steer subject and object choice") {
  Document doc;
  doc.doc_id = "d";
  doc.sentences = {{"the", "cat", "sat", "on", "the", "mat"}};
  ExtractorConfig cfg;
  cfg.stopwords = {"the", "on"};
  const auto blocks = extract_events_heuristic(doc, cfg);
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].subject().surface == "cat");
  CHECK(blocks[0].predicate().surface == "sat");
  CHECK(blocks[0].object().surface == "mat");
}

TEST_CASE("entity lexicon promotes lowercase nouns") {
  Document doc;
  doc.doc_id = "d";
  doc.sentences = {{"peter", "eats", "apple"}};
  ExtractorConfig cfg;
  cfg.entity_lexicon = {"apple"};
  const auto blocks = extract_events_heuristic(doc, cfg);
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].subject().category == Category::Argument);
  CHECK(blocks[0].object().category == Category::Entity);
}

TEST_CASE("sentence without a verb yields no blocks") {
  Document doc;
  doc.doc_id = "d";
  doc.sentences = {{"green", "apple", "tree"}};
  CHECK(extract_events_heuristic(doc, {}).empty());
}

TEST_CASE("extraction is deterministic") {
  Document doc;
  doc.doc_id = "d";
  doc.sentences = {{"Anna", "greeted", "Bob"}, {"Bob", "smiled"}};
  const auto a = extract_events_heuristic(doc, {});
  const auto b = extract_events_heuristic(doc, {});
  CHECK(a == b);
}

TEST_CASE("every emitted block satisfies the type invariants") {
  std::mt19937_64 rng(77);
  const std::vector<std::string> words = {"Anna", "bob",   "chased", "ran",
                                          "the",  "house", "Singing", "quickly",
                                          "dog",  "walked"};
  for (int iter = 0; iter < 200; ++iter) {
    Document doc;
    doc.doc_id = "d" + std::to_string(iter);
    const int sentences = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < sentences; ++s) {
      std::vector<std::string> sent;
      const int len = 1 + static_cast<int>(rng() % 6);
      for (int i = 0; i < len; ++i) sent.push_back(words[rng() % words.size()]);
      doc.sentences.push_back(std::move(sent));
    }
    for (const EventBlock& b : extract_events_heuristic(doc, {})) {
      CHECK_NOTHROW(validate_block(b, "prop"));
      CHECK(b.sentence_index < static_cast<int>(doc.sentences.size()));
    }
  }
}

TEST_CASE("events file round-trips byte-identically") {
  Document doc;
  doc.doc_id = "42";
  doc.sentences = {{"Anna", "greeted", "Bob"}};
  const auto blocks = extract_events_heuristic(doc, {});
  TempFile f("");
  save_events(f.path, blocks);
  const std::string first = slurp(f.path);
  save_events(f.path, load_events(f.path));
  CHECK(first == slurp(f.path));
}

TEST_CASE("load_events rejects malformed rows with line context") {
  SUBCASE("short elements array") {
    TempFile f(R"({"doc_id":"1","sentence_index":0,"elements":[{"surface":"a","category":"ENTITY"},{"surface":"b","category":"PREDICATE"}]})"
               "\n");
    CHECK_THROWS_WITH_AS(load_events(f.path),
                         doctest::Contains("elements must have length 3"), SchemaError);
  }
  SUBCASE("unknown category lists the allowed ones") {
    TempFile f(R"({"doc_id":"1","sentence_index":0,"elements":[{"surface":"a","category":"ENTITY"},{"surface":"b","category":"VERB"},{"surface":"c","category":"ARGUMENT"}]})"
               "\n");
    CHECK_THROWS_WITH_AS(load_events(f.path),
                         doctest::Contains("ENTITY, PREDICATE, ARGUMENT"), SchemaError);
  }
  SUBCASE("valid single line loads one block") {
    TempFile f(R"({"doc_id":"1","sentence_index":0,"elements":[{"surface":"a","category":"ENTITY"},{"surface":"b","category":"PREDICATE"},{"surface":"","category":"ARGUMENT"}]})"
               "\n");
    const auto blocks = load_events(f.path);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].object().absent());
  }
  SUBCASE("absent predicate is rejected") {
    TempFile f(R"({"doc_id":"1","sentence_index":0,"elements":[{"surface":"a","category":"ENTITY"},{"surface":"","category":"PREDICATE"},{"surface":"c","category":"ARGUMENT"}]})"
               "\n");
    CHECK_THROWS_WITH_AS(load_events(f.path), doctest::Contains("predicate"), SchemaError);
  }
}
