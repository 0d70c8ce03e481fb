#include "segcl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace segcl {

const Document* Corpus::find(const std::string& doc_id) const {
  for (const auto& d : documents)
    if (d.doc_id == doc_id) return &d;
  return nullptr;
}

std::optional<CorpusFormat> corpus_format_from_string(std::string_view s) {
  if (s == "plain-lines") return CorpusFormat::PlainLines;
  if (s == "labeled-tsv") return CorpusFormat::LabeledTsv;
  return std::nullopt;
}

std::string_view to_string(CorpusFormat f) {
  return f == CorpusFormat::PlainLines ? "plain-lines" : "labeled-tsv";
}

namespace {

bool is_edge_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool sentence_terminator(char c) {
  return c == '.' || c == '!' || c == '?' || c == ';';
}

bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  });
}

}  // namespace

std::vector<std::vector<std::string>> tokenize_line(std::string_view line) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> current;
  for (const std::string& raw : split_whitespace(line)) {
    bool ends_sentence = sentence_terminator(raw.back());
    std::size_t b = 0, e = raw.size();
    while (b < e && is_edge_punct(raw[b])) ++b;
    while (e > b && is_edge_punct(raw[e - 1])) --e;
    std::string token = raw.substr(b, e - b);
    if (!token.empty() && has_alnum(token)) current.push_back(std::move(token));
    if (ends_sentence && !current.empty()) {
      sentences.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

namespace {

void apply_filters(Corpus& corpus, const CorpusOptions& options) {
  std::map<std::string, int> freq;
  if (options.min_word_freq > 1) {
    for (const auto& doc : corpus.documents)
      for (const auto& sent : doc.sentences)
        for (const auto& tok : sent) ++freq[lowercase_ascii(tok)];
  }
  auto keep = [&](const std::string& tok) {
    std::string low = lowercase_ascii(tok);
    if (options.stopwords.count(low)) return false;
    if (options.min_word_freq > 1 && freq[low] < options.min_word_freq)
      return false;
    return true;
  };
  for (auto& doc : corpus.documents) {
    std::vector<std::vector<std::string>> kept_sentences;
    for (auto& sent : doc.sentences) {
      std::vector<std::string> kept;
      for (auto& tok : sent)
        if (keep(tok)) kept.push_back(std::move(tok));
      if (!kept.empty()) kept_sentences.push_back(std::move(kept));
    }
    doc.sentences = std::move(kept_sentences);
  }
  std::erase_if(corpus.documents,
                [](const Document& d) { return d.sentences.empty(); });
}

}  // namespace

Corpus load_corpus(const std::string& path, CorpusFormat format,
                   const CorpusOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);

  Corpus corpus;
  std::string line;
  int line_no = 0;
  bool saw_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    saw_content = true;

    Document doc;
    doc.doc_id = std::to_string(line_no);
    std::string_view text = line;
    if (format == CorpusFormat::LabeledTsv) {
      std::size_t tab = line.find('\t');
      if (tab == std::string::npos)
        throw SchemaError("corpus file " + path + " line " +
                          std::to_string(line_no) +
                          ": expected `label<TAB>text`");
      std::string label = line.substr(0, tab);
      if (label.empty())
        throw SchemaError("corpus file " + path + " line " +
                          std::to_string(line_no) + ": empty label");
      doc.label = std::move(label);
      text = std::string_view(line).substr(tab + 1);
    }
    doc.sentences = tokenize_line(text);
    if (doc.sentences.empty()) continue;
    corpus.documents.push_back(std::move(doc));
  }

  if (line_no == 0) throw SchemaError("empty corpus file: " + path);
  if (!saw_content || corpus.documents.empty())
    throw SchemaError("no documents in corpus file: " + path);

  apply_filters(corpus, options);
  if (corpus.documents.empty())
    throw SchemaError("corpus file " + path +
                      ": all documents removed by stopword/frequency filters");
  return corpus;
}

}  // namespace segcl
