#include "segcl/synth.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "segcl/core.hpp"

namespace segcl {

void SynthConfig::validate() const {
  if (docs < 4 || docs % 2 != 0) throw SchemaError("docs must be even and >= 4");
  if (min_sentences < 2) throw SchemaError("min_sentences must be >= 2");
  if (max_sentences < min_sentences) throw SchemaError("max_sentences must be >= min_sentences");
  if (entity_pool < max_sentences + 1) {
    throw SchemaError("entity_pool must cover max_sentences + 1 distinct names");
  }
  if (predicate_pool < max_sentences) {
    throw SchemaError("predicate_pool must cover max_sentences distinct names");
  }
}

namespace {

const std::vector<std::string>& syllables() {
  static const std::vector<std::string> table = [] {
    const std::string consonants = "bdklmnrstz";
    const std::string vowels = "aeiou";
    std::vector<std::string> out;
    for (char c : consonants)
      for (char v : vowels) out.push_back(std::string{c, v});
    return out;
  }();
  return table;
}

std::string nth_name(int i) {
  const auto& syl = syllables();
  const int base = static_cast<int>(syl.size());
  return syl[static_cast<std::size_t>(i / base) % syl.size()] +
         syl[static_cast<std::size_t>(i % base)];
}

std::vector<int> draw_distinct(int pool, int k, std::mt19937_64& rng) {
  std::vector<int> ids(static_cast<std::size_t>(pool));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(static_cast<std::size_t>(k));
  return ids;
}

}  // namespace

std::vector<std::string> synth_entity_pool(int n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string name = nth_name(i);
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    out.push_back(std::move(name));
  }
  return out;
}

std::vector<std::string> synth_predicate_pool(int n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(nth_name(i) + "ted");
  return out;
}

std::vector<std::string> make_synthetic_lines(const SynthConfig& cfg) {
  cfg.validate();
  const std::vector<std::string> entities = synth_entity_pool(cfg.entity_pool);
  const std::vector<std::string> predicates = synth_predicate_pool(cfg.predicate_pool);

  std::vector<std::string> lines;
  lines.reserve(static_cast<std::size_t>(cfg.docs));
  for (int d = 0; d < cfg.docs; ++d) {
    auto rng = make_rng(cfg.seed, rng_stream::kSynth, static_cast<std::uint64_t>(d));
    const int span = cfg.max_sentences - cfg.min_sentences + 1;
    const int s = cfg.min_sentences +
                  static_cast<int>(rng() % static_cast<std::uint64_t>(span));
    const std::vector<int> e_ids = draw_distinct(cfg.entity_pool, s + 1, rng);
    const std::vector<int> p_ids = draw_distinct(cfg.predicate_pool, s, rng);
    const bool chain = d % 2 == 0;

    std::string text;
    const auto sentence = [&](const std::string& subj, const std::string& pred,
                              const std::string& obj) {
      if (!text.empty()) text += " ";
      text += subj + " " + pred + " " + obj + ".";
    };
    if (chain) {
      for (int i = 1; i <= s; ++i) {
        sentence(entities[static_cast<std::size_t>(e_ids[static_cast<std::size_t>(i - 1)])],
                 predicates[static_cast<std::size_t>(p_ids[static_cast<std::size_t>(i - 1)])],
                 entities[static_cast<std::size_t>(e_ids[static_cast<std::size_t>(i)])]);
      }
    } else {
      const std::string& hub = predicates[static_cast<std::size_t>(p_ids[0])];
      for (int i = 1; i <= s; ++i) {
        sentence(entities[static_cast<std::size_t>(e_ids[static_cast<std::size_t>(i - 1)])],
                 hub,
                 entities[static_cast<std::size_t>(e_ids[static_cast<std::size_t>(i)])]);
      }
      for (int j = 1; j < s; ++j) {
        const std::string& anchor = entities[static_cast<std::size_t>(e_ids[static_cast<std::size_t>(j)])];
        sentence(anchor, predicates[static_cast<std::size_t>(p_ids[static_cast<std::size_t>(j)])], anchor);
      }
    }
    lines.push_back((chain ? std::string("chain") : std::string("star")) + "\t" + text);
  }
  return lines;
}

void save_synthetic_corpus(const std::string& path, const SynthConfig& cfg) {
  const std::vector<std::string> lines = make_synthetic_lines(cfg);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open corpus file for writing: " + path);
  for (const std::string& line : lines) out << line << "\n";
  if (!out) throw IoError("failed writing corpus file: " + path);
}

}  // namespace segcl
