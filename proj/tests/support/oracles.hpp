#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "segcl/dfs_code.hpp"
#include "segcl/graph.hpp"

namespace segcl::oracle {

/// Minimal DFS code by exhaustive enumeration of every valid DFS traversal,
/// written against the gSpan definition without touching the production
/// comparator or extension logic. Small graphs only.
DfsCode exhaustive_min_code(const LabeledGraph& g);

struct OraclePattern {
  DfsCode code;
  int support = 0;

  bool operator==(const OraclePattern&) const = default;
};

/// Frequent subgraphs by brute force: every connected edge subset of every
/// graph, canonicalized with exhaustive_min_code, deduplicated per graph,
/// then filtered by transaction support. Sorted by code.
std::vector<OraclePattern> brute_force_mine(std::span<const IntraRelationGraph> graphs,
                                            int min_support, int min_edges, int max_edges);

/// Central finite differences of `f` at `x`, one entry at a time.
Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                            const Eigen::MatrixXd& x, double h = 1e-5);

/// Random corpus graph with category-consistent edge types. Node surfaces
/// are unique per node so dedup never merges them.
IntraRelationGraph random_graph(std::mt19937_64& rng, const std::string& doc_id,
                                int max_nodes = 8, int max_edges = 10);

}  // namespace segcl::oracle
