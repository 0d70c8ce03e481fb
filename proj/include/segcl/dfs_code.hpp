#pragma once

#include <string>
#include <vector>

#include "segcl/graph.hpp"

namespace segcl {

/// Mining labels: node label = category rank, edge label = edge type rank.
int category_label(Category c);
Category category_from_label(int label);
int edge_type_label(EdgeType t);
EdgeType edge_type_from_label(int label);

/// One DFS-code tuple (i, j, label_i, edge_label, label_j) over discovery
/// indices. Forward edge: from < to. Backward edge: from > to.
struct DfsEdge {
  int from = 0;
  int to = 0;
  int from_label = 0;
  int edge_label = 0;
  int to_label = 0;

  bool is_forward() const { return from < to; }
  bool operator==(const DfsEdge&) const = default;
};

/// gSpan edge order. Structure first (backward-vs-forward rules on the
/// discovery indices), then (from_label, edge_label, to_label).
bool edge_less(const DfsEdge& a, const DfsEdge& b);

using DfsCode = std::vector<DfsEdge>;

/// Lexicographic order under edge_less; a proper prefix sorts first.
int compare_codes(const DfsCode& a, const DfsCode& b);
bool code_less(const DfsCode& a, const DfsCode& b);

/// Discovery indices on the rightmost path, rightmost vertex first,
/// ending at 0.
std::vector<int> rightmost_path(const DfsCode& code);

int vertex_count(const DfsCode& code);

std::string to_string(const DfsCode& code);

/// Small undirected labeled graph as the miner sees it.
struct LabeledGraph {
  struct LEdge {
    int u = 0;
    int v = 0;
    int label = 0;
  };
  struct Incidence {
    int other = 0;
    int edge = 0;  // index into edges
  };

  std::vector<int> vertex_labels;
  std::vector<LEdge> edges;

  int vertex_count() const { return static_cast<int>(vertex_labels.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
  const std::vector<std::vector<Incidence>>& incidence() const { return incidence_; }

  void finalize();

 private:
  std::vector<std::vector<Incidence>> incidence_;
};

/// Vertex i of the result = node position i of the graph.
LabeledGraph to_labeled(const IntraRelationGraph& g);

LabeledGraph code_to_graph(const DfsCode& code);

bool is_connected(const LabeledGraph& g);

/// One occurrence of a pattern prefix inside a labeled graph.
struct PatternEmbedding {
  std::vector<int> vertex_of;   // pattern index -> graph vertex
  std::vector<char> edge_used;  // graph edge index -> used flag
};

struct PatternExtension {
  DfsEdge tuple;
  int graph_edge = 0;
  int graph_vertex = -1;  // target graph vertex for forward extensions
};

/// All valid rightmost-path extensions of one embedding: backward edges from
/// the rightmost vertex to the rightmost path, forward edges from rightmost
/// path vertices to unmapped graph vertices.
void enumerate_extensions(const LabeledGraph& g, const std::vector<int>& rm_path,
                          const PatternEmbedding& emb,
                          std::vector<PatternExtension>& out);

/// Lexicographically minimal DFS code over all DFS orderings, built by
/// repeatedly taking the smallest valid rightmost-path extension across all
/// partial embeddings. Throws on disconnected input; a single vertex yields
/// the empty code.
DfsCode min_dfs_code(const LabeledGraph& g);

bool is_min(const DfsCode& code);

}  // namespace segcl
