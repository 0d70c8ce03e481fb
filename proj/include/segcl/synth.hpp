#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace segcl {

/// Two-class benchmark corpus. Both classes share the same entity and
/// predicate pools and per-document category counts; they differ only in
/// how predicates wire the entities together.
///   chain: s sentences "E0 p1 E1. E1 p2 E2. ...", each predicate bridging
///          one consecutive entity pair.
///   star:  one hub predicate repeated across all s entity pairs plus s-1
///          single-use predicates, so the hub node touches every entity.
struct SynthConfig {
  int docs = 200;  // total; split evenly, classes interleaved
  int min_sentences = 5;  // 4+ keeps the hub degree above any chain-node degree
  int max_sentences = 8;
  int entity_pool = 12;  // small shared pools: surfaces recur across classes
  int predicate_pool = 12;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Deterministic pools of capitalized entity names and "-ted" predicates.
std::vector<std::string> synth_entity_pool(int n);
std::vector<std::string> synth_predicate_pool(int n);

/// One labeled-tsv line per document, labels `chain` and `star`.
std::vector<std::string> make_synthetic_lines(const SynthConfig& cfg);

void save_synthetic_corpus(const std::string& path, const SynthConfig& cfg);

}  // namespace segcl
