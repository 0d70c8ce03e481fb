#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "segcl/events.hpp"
#include "segcl/vectors.hpp"

namespace segcl {

/// Unordered pair of endpoint categories; the six graph edge labels.
enum class EdgeType { EE, EP, EA, PP, PA, AA };

EdgeType edge_type_for(Category a, Category b);
std::string_view to_string(EdgeType t);
std::optional<EdgeType> edge_type_from_string(std::string_view s);

struct Node {
  int id = 0;
  std::string surface;
  Category category = Category::Argument;
  bool in_skeleton = false;  // written once by the skeleton miner
};

struct Edge {
  int u = 0;  // node ids, u < v
  int v = 0;
  EdgeType type = EdgeType::EE;
};

/// Per-document undirected labeled graph over deduplicated event elements.
/// Node ids are stable identifiers: contiguous after build_graph, possibly
/// sparse after pruning. Nodes are kept sorted by id, edges normalized to
/// u < v and sorted.
class IntraRelationGraph {
 public:
  std::string doc_id;
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
  bool empty() const { return nodes.empty(); }

  /// Position of a node id in `nodes`, or -1.
  int index_of(int node_id) const;
  const Node& node_by_id(int node_id) const;

  /// Neighbor positions per node position.
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }

  /// Dense boolean adjacency (by node position), symmetric, zero diagonal.
  Eigen::MatrixXd adjacency() const;

  /// Sorts nodes/edges, rebuilds the neighbor index, and checks all graph
  /// invariants. `where` prefixes error messages.
  void finalize(const std::string& where = "graph");

 private:
  std::vector<std::vector<int>> neighbors_;
};

enum class SimilarityMetric { ExactMatch, JaccardChar3gram, CosinePretrained };

std::optional<SimilarityMetric> similarity_metric_from_string(std::string_view s);
std::string_view to_string(SimilarityMetric m);

struct GraphBuildConfig {
  double similarity_threshold_y = 0.8;
  SimilarityMetric similarity_metric = SimilarityMetric::JaccardChar3gram;
  std::string pretrained_vectors;  // required for cosine-pretrained

  void validate() const;
};

/// Resolves the configured metric (loading pretrained vectors once) and
/// tracks out-of-vocabulary fallbacks for the cosine metric.
class SimilarityScorer {
 public:
  explicit SimilarityScorer(const GraphBuildConfig& cfg);

  double operator()(const EventElement& a, const EventElement& b) const;
  std::size_t oov_fallbacks() const { return oov_fallbacks_; }

 private:
  SimilarityMetric metric_;
  std::unique_ptr<WordVectors> vectors_;
  mutable std::size_t oov_fallbacks_ = 0;
  mutable std::set<std::string> logged_oov_;
};

/// Symmetric similarity in [0, 1]; 1.0 for identical surfaces under every
/// metric.
double element_similarity(const EventElement& a, const EventElement& b,
                          const GraphBuildConfig& cfg);

/// Builds the intra-relation graph for one document's blocks:
/// deduplicated element nodes, subject-predicate and predicate-object edges,
/// same-sentence entity pairs, and cross-block links for element pairs with
/// similarity >= y.
IntraRelationGraph build_graph(std::span<const EventBlock> blocks,
                               const GraphBuildConfig& cfg,
                               const SimilarityScorer* scorer = nullptr);

/// Groups blocks by doc_id (first-appearance order) and builds all graphs.
std::vector<IntraRelationGraph> build_graphs(
    std::span<const EventBlock> blocks, const GraphBuildConfig& cfg,
    int threads = 1);

/// Corpus graph file: {"version":1,"graphs":[{doc_id,nodes,edges}...]}.
void save_graphs(const std::string& path,
                 std::span<const IntraRelationGraph> graphs);
std::vector<IntraRelationGraph> load_graphs(const std::string& path);

/// Single-graph conveniences over the same format.
void save_graph(const std::string& path, const IntraRelationGraph& graph);
IntraRelationGraph load_graph(const std::string& path);

}  // namespace segcl
