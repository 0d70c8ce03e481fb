#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "segcl/corpus.hpp"
#include "segcl/core.hpp"

namespace segcl {

enum class Category { Entity, Predicate, Argument };

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view s);

/// One slot of an event triple. An empty surface marks an absent slot
/// (allowed for subject/object, never for the predicate).
struct EventElement {
  std::string surface;
  Category category = Category::Argument;

  bool absent() const { return surface.empty(); }
  bool operator==(const EventElement&) const = default;
};

/// A (subject, predicate, object) triple extracted from one sentence.
struct EventBlock {
  std::string doc_id;
  int sentence_index = 0;
  std::array<EventElement, 3> elements;

  const EventElement& subject() const { return elements[0]; }
  const EventElement& predicate() const { return elements[1]; }
  const EventElement& object() const { return elements[2]; }
  bool operator==(const EventBlock&) const = default;
};

/// Throws SchemaError when a block violates its invariants. `where` prefixes
/// the message (file/line context).
void validate_block(const EventBlock& block, const std::string& where);

struct ExtractorConfig {
  std::set<std::string> stopwords;
  std::set<std::string> entity_lexicon;
};

/// True for tokens the built-in verb table recognizes (lexicon lookup,
/// trailing-s stems, -ed/-ing suffixes).
bool looks_verb_like(const std::string& lowercase_token);

/// Minimal SVO pass: one triple per verb-like token, subject = nearest
/// preceding noun-like non-stopword, object = nearest following. Blocks
/// with neither subject nor object are dropped.
std::vector<EventBlock> extract_events_heuristic(const Document& doc,
                                                 const ExtractorConfig& cfg);
std::vector<EventBlock> extract_events_heuristic(const Corpus& corpus,
                                                 const ExtractorConfig& cfg);

/// JSON-Lines events file, one object per block:
///   {"doc_id":..., "elements":[{"category":...,"surface":...} x3],
///    "sentence_index":...}
std::vector<EventBlock> load_events(const std::string& path);
void save_events(const std::string& path,
                 const std::vector<EventBlock>& blocks);

}  // namespace segcl
