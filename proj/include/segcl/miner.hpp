#pragma once

#include <span>
#include <string>
#include <vector>

#include "segcl/dfs_code.hpp"
#include "segcl/graph.hpp"

namespace segcl {

enum class SeedOrder { Ascending, Descending };

std::optional<SeedOrder> seed_order_from_string(std::string_view s);
std::string_view to_string(SeedOrder o);

struct MinerConfig {
  int min_support = 2;
  int min_edges = 2;
  int max_edges = 6;
  int label_frequency_floor = 0;
  SeedOrder seed_order = SeedOrder::Ascending;

  void validate() const;
};

/// min_support resolution: a configured value > 0 wins; 0 means 10% of the
/// corpus, never below 2.
int resolve_min_support(int configured, std::size_t corpus_size);

/// Occurrences of one pattern in one document: each entry is a sorted set of
/// node ids inducing a label-isomorphic subgraph.
struct PatternMatches {
  std::string doc_id;
  std::vector<std::vector<int>> node_sets;
};

struct SkeletonPattern {
  DfsCode code;
  int support = 0;  // number of graphs with at least one embedding
  std::vector<PatternMatches> matches;

  int edge_count() const { return static_cast<int>(code.size()); }
};

/// Drops nodes whose category and edges whose type occur in fewer than
/// `floor` graphs, plus edges left dangling. Node ids keep their original
/// values so match sets stay meaningful.
std::vector<IntraRelationGraph> prune_infrequent(
    std::span<const IntraRelationGraph> graphs, int floor);

/// gSpan over the corpus: every pattern in minimal DFS code with
/// support >= min_support and min_edges <= |edges| <= max_edges.
/// Results are sorted by code, so thread count and seed order do not change
/// the output.
std::vector<SkeletonPattern> mine(std::span<const IntraRelationGraph> graphs,
                                  const MinerConfig& cfg, int threads = 1);

/// Flags the union of match node sets of the top_m patterns, ranked by
/// (support, edge count) descending with code order as the tie-break.
/// Graphs no ranked pattern matches get every node flagged.
void mark_skeletons(std::vector<IntraRelationGraph>& graphs,
                    std::span<const SkeletonPattern> patterns, int top_m);

void save_patterns(const std::string& path, std::span<const SkeletonPattern> patterns);
std::vector<SkeletonPattern> load_patterns(const std::string& path);

/// Human-readable table: one line per pattern with support, edge count, code.
std::string format_pattern_table(std::span<const SkeletonPattern> patterns);

}  // namespace segcl
