#include "segcl/events.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "json.hpp"

namespace segcl {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Entity: return "ENTITY";
    case Category::Predicate: return "PREDICATE";
    case Category::Argument: return "ARGUMENT";
  }
  return "ARGUMENT";
}

std::optional<Category> category_from_string(std::string_view s) {
  if (s == "ENTITY") return Category::Entity;
  if (s == "PREDICATE") return Category::Predicate;
  if (s == "ARGUMENT") return Category::Argument;
  return std::nullopt;
}

void validate_block(const EventBlock& block, const std::string& where) {
  if (block.doc_id.empty())
    throw SchemaError(where + ": doc_id must be non-empty");
  if (block.sentence_index < 0)
    throw SchemaError(where + ": sentence_index must be non-negative");
  if (block.predicate().absent())
    throw SchemaError(where + ": predicate element must be non-empty");
  if (block.predicate().category != Category::Predicate)
    throw SchemaError(where + ": predicate element must have category PREDICATE");
}

namespace {

// Base forms plus common irregular pasts; inflections resolve through the
// trailing-s stem and -ed/-ing suffix rules.
const std::set<std::string>& verb_lexicon() {
  static const std::set<std::string> lex = {
      "is",     "are",    "was",   "were",  "be",     "been",  "am",
      "has",    "have",   "had",   "do",    "does",   "did",
      "eat",    "ate",    "sit",   "sat",   "run",    "ran",   "go",
      "goes",   "went",   "see",   "saw",   "make",   "made",  "take",
      "took",   "play",   "say",   "said",  "get",    "got",   "like",
      "walk",   "jump",   "read",  "write", "wrote",  "chase", "love",
      "hit",    "throw",  "threw", "catch", "caught", "find",  "found",
      "give",   "gave",   "know",  "knew",  "think",  "thought",
      "meet",   "met",    "visit", "want",  "use",    "help",  "call",
      "work",   "move",   "live",  "start", "open",   "close", "win",
      "won",    "lose",   "lost",  "buy",   "bought", "sell",  "sold",
      "pay",    "paid",   "send",  "sent",  "keep",   "kept",  "hold",
      "held",   "bring",  "brought", "stand", "stood", "fall", "fell",
      "cut",    "put",    "let",   "begin", "began",  "show",  "hear",
      "heard",  "leave",  "left",  "feel",  "felt",   "become", "became",
      "attack", "defeat", "greet", "follow", "lead",  "led",   "teach",
      "taught", "build",  "built", "carry", "push",   "pull",  "watch",
      "tell",   "told",   "ask",   "answer", "drive", "drove", "fly",
      "flew",   "grab",   "drop",  "pass",  "kick",   "serve", "score"};
  return lex;
}

bool suffix_matches(const std::string& s, std::string_view suffix) {
  return s.size() > suffix.size() + 1 &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool has_letter(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
  });
}

}  // namespace

bool looks_verb_like(const std::string& t) {
  if (t.empty()) return false;
  const auto& lex = verb_lexicon();
  if (lex.count(t)) return true;
  if (t.size() > 2 && t.back() == 's' && lex.count(t.substr(0, t.size() - 1)))
    return true;
  if (suffix_matches(t, "ed") || suffix_matches(t, "ing")) return true;
  return false;
}

namespace {

Category categorize_noun(const std::string& original,
                         const std::string& lowered,
                         const ExtractorConfig& cfg) {
  bool capitalized = !original.empty() && original[0] >= 'A' && original[0] <= 'Z';
  if (capitalized || cfg.entity_lexicon.count(lowered)) return Category::Entity;
  return Category::Argument;
}

}  // namespace

std::vector<EventBlock> extract_events_heuristic(const Document& doc,
                                                 const ExtractorConfig& cfg) {
  std::vector<EventBlock> blocks;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const auto& sent = doc.sentences[si];
    std::vector<std::string> lower(sent.size());
    for (std::size_t i = 0; i < sent.size(); ++i)
      lower[i] = lowercase_ascii(sent[i]);

    auto noun_like = [&](std::size_t i) {
      return !cfg.stopwords.count(lower[i]) && !looks_verb_like(lower[i]) &&
             has_letter(lower[i]);
    };

    for (std::size_t v = 0; v < sent.size(); ++v) {
      if (!looks_verb_like(lower[v]) || cfg.stopwords.count(lower[v])) continue;

      EventBlock block;
      block.doc_id = doc.doc_id;
      block.sentence_index = static_cast<int>(si);
      block.elements[1] = {lower[v], Category::Predicate};

      for (std::size_t s = v; s-- > 0;) {
        if (noun_like(s)) {
          block.elements[0] = {lower[s], categorize_noun(sent[s], lower[s], cfg)};
          break;
        }
      }
      for (std::size_t o = v + 1; o < sent.size(); ++o) {
        if (noun_like(o)) {
          block.elements[2] = {lower[o], categorize_noun(sent[o], lower[o], cfg)};
          break;
        }
      }
      if (block.subject().absent() && block.object().absent()) continue;
      blocks.push_back(std::move(block));
    }
  }
  return blocks;
}

std::vector<EventBlock> extract_events_heuristic(const Corpus& corpus,
                                                 const ExtractorConfig& cfg) {
  std::vector<EventBlock> all;
  for (const auto& doc : corpus.documents) {
    auto blocks = extract_events_heuristic(doc, cfg);
    all.insert(all.end(), std::make_move_iterator(blocks.begin()),
               std::make_move_iterator(blocks.end()));
  }
  return all;
}

namespace {

using nlohmann::json;

EventElement parse_element(const json& j, const std::string& where,
                           int index) {
  const std::string field =
      "elements[" + std::to_string(index) + "]";
  if (!j.is_object())
    throw SchemaError(where + " field " + field + ": expected an object");
  if (!j.contains("surface") || !j["surface"].is_string())
    throw SchemaError(where + " field " + field +
                      ".surface: expected a string");
  if (!j.contains("category") || !j["category"].is_string())
    throw SchemaError(where + " field " + field +
                      ".category: expected a string");
  EventElement el;
  el.surface = lowercase_ascii(j["surface"].get<std::string>());
  auto cat = category_from_string(j["category"].get<std::string>());
  if (!cat)
    throw SchemaError(where + " field " + field + ".category: unknown category \"" +
                      j["category"].get<std::string>() +
                      "\"; allowed categories: ENTITY, PREDICATE, ARGUMENT");
  el.category = *cat;
  return el;
}

}  // namespace

std::vector<EventBlock> load_events(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open events file: " + path);

  std::vector<EventBlock> blocks;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where =
        "events file " + path + " line " + std::to_string(line_no);

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + ": invalid JSON (" + std::string(e.what()) + ")");
    }
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    if (!j.contains("doc_id") || !j["doc_id"].is_string())
      throw SchemaError(where + " field doc_id: expected a string");
    if (!j.contains("sentence_index") || !j["sentence_index"].is_number_integer())
      throw SchemaError(where + " field sentence_index: expected an integer");
    if (!j.contains("elements") || !j["elements"].is_array())
      throw SchemaError(where + " field elements: expected an array");
    if (j["elements"].size() != 3)
      throw SchemaError(where + " field elements: elements must have length 3");

    EventBlock block;
    block.doc_id = j["doc_id"].get<std::string>();
    block.sentence_index = j["sentence_index"].get<int>();
    for (int i = 0; i < 3; ++i)
      block.elements[i] = parse_element(j["elements"][i], where, i);
    validate_block(block, where);
    blocks.push_back(std::move(block));
  }
  if (line_no == 0) throw IoError("empty events file: " + path);
  return blocks;
}

void save_events(const std::string& path,
                 const std::vector<EventBlock>& blocks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write events file: " + path);
  for (const auto& b : blocks) {
    json elements = json::array();
    for (const auto& el : b.elements)
      elements.push_back({{"surface", el.surface},
                          {"category", std::string(to_string(el.category))}});
    json j = {{"doc_id", b.doc_id},
              {"sentence_index", b.sentence_index},
              {"elements", elements}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing events file: " + path);
}

}  // namespace segcl
