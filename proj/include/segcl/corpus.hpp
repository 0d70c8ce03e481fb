#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "segcl/core.hpp"

namespace segcl {

/// One input text, tokenized into sentences. Tokens keep their source
/// casing; extraction lowercases surfaces but inspects the original case.
struct Document {
  std::string doc_id;
  std::optional<std::string> label;
  std::vector<std::vector<std::string>> sentences;
};

struct Corpus {
  std::vector<Document> documents;

  bool empty() const { return documents.empty(); }
  std::size_t size() const { return documents.size(); }
  const Document* find(const std::string& doc_id) const;
};

enum class CorpusFormat { PlainLines, LabeledTsv };

std::optional<CorpusFormat> corpus_format_from_string(std::string_view s);
std::string_view to_string(CorpusFormat f);

/// Corpus-load preprocessing. min_word_freq < 2 disables the low-frequency
/// filter; 5 matches the usual news-corpus setting.
struct CorpusOptions {
  std::set<std::string> stopwords;
  int min_word_freq = 1;
};

/// Reads a corpus file. Plain-lines: one document per line, doc_id = 1-based
/// line number (kept stable when blank lines are skipped). Labeled-tsv:
/// `label<TAB>text` per line, same id scheme.
Corpus load_corpus(const std::string& path, CorpusFormat format,
                   const CorpusOptions& options = {});

/// Tokenizes one raw line into sentences. Sentences split on tokens ending
/// in . ! ? or ; punctuation is stripped from token edges.
std::vector<std::vector<std::string>> tokenize_line(std::string_view line);

}  // namespace segcl
