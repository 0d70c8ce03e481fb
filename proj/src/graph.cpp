#include "segcl/graph.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "segcl/core.hpp"
#include "segcl/threads.hpp"

namespace segcl {
namespace {

using nlohmann::json;

std::mutex g_oov_mutex;

int category_rank(Category c) {
  switch (c) {
    case Category::Entity: return 0;
    case Category::Predicate: return 1;
    case Category::Argument: return 2;
  }
  return 2;
}

std::set<std::string> char_3grams(const std::string& s) {
  std::set<std::string> grams;
  if (s.size() >= 3) {
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) grams.insert(s.substr(i, 3));
  }
  return grams;
}

double jaccard_3gram(const std::string& a, const std::string& b) {
  const auto ga = char_3grams(a);
  const auto gb = char_3grams(b);
  if (ga.empty() && gb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& g : ga) inter += gb.count(g);
  const std::size_t uni = ga.size() + gb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

EdgeType edge_type_for(Category a, Category b) {
  int x = category_rank(a);
  int y = category_rank(b);
  if (x > y) std::swap(x, y);
  if (x == 0) {
    if (y == 0) return EdgeType::EE;
    if (y == 1) return EdgeType::EP;
    return EdgeType::EA;
  }
  if (x == 1) return y == 1 ? EdgeType::PP : EdgeType::PA;
  return EdgeType::AA;
}

std::string_view to_string(EdgeType t) {
  switch (t) {
    case EdgeType::EE: return "EE";
    case EdgeType::EP: return "EP";
    case EdgeType::EA: return "EA";
    case EdgeType::PP: return "PP";
    case EdgeType::PA: return "PA";
    case EdgeType::AA: return "AA";
  }
  return "AA";
}

std::optional<EdgeType> edge_type_from_string(std::string_view s) {
  if (s == "EE") return EdgeType::EE;
  if (s == "EP") return EdgeType::EP;
  if (s == "EA") return EdgeType::EA;
  if (s == "PP") return EdgeType::PP;
  if (s == "PA") return EdgeType::PA;
  if (s == "AA") return EdgeType::AA;
  return std::nullopt;
}

int IntraRelationGraph::index_of(int node_id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), node_id,
                             [](const Node& n, int id) { return n.id < id; });
  if (it == nodes.end() || it->id != node_id) return -1;
  return static_cast<int>(it - nodes.begin());
}

const Node& IntraRelationGraph::node_by_id(int node_id) const {
  const int pos = index_of(node_id);
  if (pos < 0) {
    throw Error("graph " + doc_id + ": unknown node id " + std::to_string(node_id));
  }
  return nodes[static_cast<std::size_t>(pos)];
}

Eigen::MatrixXd IntraRelationGraph::adjacency() const {
  const int n = node_count();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : edges) {
    const int i = index_of(e.u);
    const int j = index_of(e.v);
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

void IntraRelationGraph::finalize(const std::string& where) {
  std::sort(nodes.begin(), nodes.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].id == nodes[i - 1].id) {
      throw SchemaError(where + ": duplicate node id " + std::to_string(nodes[i].id));
    }
  }
  std::unordered_set<std::string> surfaces;
  for (const Node& n : nodes) {
    if (n.surface.empty()) {
      throw SchemaError(where + ": node " + std::to_string(n.id) + " has empty surface");
    }
    if (!surfaces.insert(n.surface).second) {
      throw SchemaError(where + ": duplicate node surface \"" + n.surface + "\"");
    }
  }

  for (Edge& e : edges) {
    if (e.u == e.v) {
      throw SchemaError(where + ": self-edge at node " + std::to_string(e.u));
    }
    if (e.u > e.v) std::swap(e.u, e.v);
    const int iu = index_of(e.u);
    const int iv = index_of(e.v);
    if (iu < 0 || iv < 0) {
      throw SchemaError(where + ": edge references missing node (" +
                        std::to_string(e.u) + ", " + std::to_string(e.v) + ")");
    }
    const EdgeType expect = edge_type_for(nodes[static_cast<std::size_t>(iu)].category,
                                          nodes[static_cast<std::size_t>(iv)].category);
    if (e.type != expect) {
      throw SchemaError(where + ": edge (" + std::to_string(e.u) + ", " +
                        std::to_string(e.v) + ") has type " + std::string(to_string(e.type)) +
                        " but endpoints imply " + std::string(to_string(expect)));
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.u, a.v) < std::tie(b.u, b.v);
  });
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i].u == edges[i - 1].u && edges[i].v == edges[i - 1].v) {
      throw SchemaError(where + ": duplicate edge (" + std::to_string(edges[i].u) +
                        ", " + std::to_string(edges[i].v) + ")");
    }
  }

  neighbors_.assign(nodes.size(), {});
  for (const Edge& e : edges) {
    const int iu = index_of(e.u);
    const int iv = index_of(e.v);
    neighbors_[static_cast<std::size_t>(iu)].push_back(iv);
    neighbors_[static_cast<std::size_t>(iv)].push_back(iu);
  }
  for (auto& adj : neighbors_) std::sort(adj.begin(), adj.end());
}

std::optional<SimilarityMetric> similarity_metric_from_string(std::string_view s) {
  if (s == "exact-match") return SimilarityMetric::ExactMatch;
  if (s == "jaccard-char-3gram") return SimilarityMetric::JaccardChar3gram;
  if (s == "cosine-pretrained") return SimilarityMetric::CosinePretrained;
  return std::nullopt;
}

std::string_view to_string(SimilarityMetric m) {
  switch (m) {
    case SimilarityMetric::ExactMatch: return "exact-match";
    case SimilarityMetric::JaccardChar3gram: return "jaccard-char-3gram";
    case SimilarityMetric::CosinePretrained: return "cosine-pretrained";
  }
  return "jaccard-char-3gram";
}

void GraphBuildConfig::validate() const {
  if (!(similarity_threshold_y >= 0.0 && similarity_threshold_y <= 1.0)) {
    throw SchemaError("similarity_threshold_y must be in [0, 1]");
  }
  if (similarity_metric == SimilarityMetric::CosinePretrained && pretrained_vectors.empty()) {
    throw SchemaError("cosine-pretrained similarity requires a pretrained_vectors file");
  }
}

SimilarityScorer::SimilarityScorer(const GraphBuildConfig& cfg)
    : metric_(cfg.similarity_metric) {
  cfg.validate();
  if (metric_ == SimilarityMetric::CosinePretrained) {
    vectors_ = std::make_unique<WordVectors>(WordVectors::load(cfg.pretrained_vectors));
  }
}

double SimilarityScorer::operator()(const EventElement& a, const EventElement& b) const {
  if (a.surface == b.surface) return 1.0;
  switch (metric_) {
    case SimilarityMetric::ExactMatch:
      return 0.0;
    case SimilarityMetric::JaccardChar3gram:
      return jaccard_3gram(a.surface, b.surface);
    case SimilarityMetric::CosinePretrained: {
      const Eigen::VectorXd* va = vectors_->find(a.surface);
      const Eigen::VectorXd* vb = vectors_->find(b.surface);
      if (va == nullptr || vb == nullptr) {
        std::lock_guard<std::mutex> lock(g_oov_mutex);
        ++oov_fallbacks_;
        const std::string& missing = (va == nullptr) ? a.surface : b.surface;
        if (logged_oov_.insert(missing).second) {
          std::cerr << "similarity: no pretrained vector for \"" << missing
                    << "\"; falling back to jaccard-char-3gram\n";
        }
        return jaccard_3gram(a.surface, b.surface);
      }
      const double cos = va->dot(*vb);
      return std::clamp(cos, 0.0, 1.0);
    }
  }
  return 0.0;
}

double element_similarity(const EventElement& a, const EventElement& b,
                          const GraphBuildConfig& cfg) {
  SimilarityScorer scorer(cfg);
  return scorer(a, b);
}

IntraRelationGraph build_graph(std::span<const EventBlock> blocks,
                               const GraphBuildConfig& cfg,
                               const SimilarityScorer* scorer) {
  cfg.validate();
  IntraRelationGraph g;
  if (blocks.empty()) {
    g.finalize();
    return g;
  }
  g.doc_id = blocks.front().doc_id;
  for (const EventBlock& b : blocks) {
    if (b.doc_id != g.doc_id) {
      throw SchemaError("build_graph: blocks mix doc ids \"" + g.doc_id +
                        "\" and \"" + b.doc_id + "\"");
    }
  }

  // Rule 1: one node per distinct surface, first occurrence fixes the
  // category.
  std::unordered_map<std::string, int> id_of;
  auto node_for = [&](const EventElement& e) {
    auto [it, inserted] = id_of.emplace(e.surface, static_cast<int>(g.nodes.size()));
    if (inserted) {
      g.nodes.push_back(Node{it->second, e.surface, e.category, false});
    }
    return it->second;
  };

  std::set<std::pair<int, int>> seen;
  auto add_edge = [&](int u, int v) {
    if (u == v) return;
    if (u > v) std::swap(u, v);
    if (!seen.insert({u, v}).second) return;
    const Category cu = g.nodes[static_cast<std::size_t>(u)].category;
    const Category cv = g.nodes[static_cast<std::size_t>(v)].category;
    g.edges.push_back(Edge{u, v, edge_type_for(cu, cv)});
  };

  // Rules 1 and 2: materialize nodes in block order and connect
  // subject-predicate and predicate-object inside each block.
  std::vector<std::array<int, 3>> block_nodes(blocks.size(), {-1, -1, -1});
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int slot = 0; slot < 3; ++slot) {
      const EventElement& e = blocks[b].elements[static_cast<std::size_t>(slot)];
      if (!e.absent()) block_nodes[b][static_cast<std::size_t>(slot)] = node_for(e);
    }
    const auto& ids = block_nodes[b];
    if (ids[0] >= 0 && ids[1] >= 0) add_edge(ids[0], ids[1]);
    if (ids[1] >= 0 && ids[2] >= 0) add_edge(ids[1], ids[2]);
  }

  // Rule 3: entities co-occurring in one sentence are connected.
  std::map<int, std::vector<int>> sentence_entities;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int id : block_nodes[b]) {
      if (id >= 0 && g.nodes[static_cast<std::size_t>(id)].category == Category::Entity) {
        sentence_entities[blocks[b].sentence_index].push_back(id);
      }
    }
  }
  for (auto& [sentence, ids] : sentence_entities) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) add_edge(ids[i], ids[j]);
    }
  }

  // Rule 4: link node pairs that occur in different blocks when their
  // similarity clears the threshold. Identical surfaces already share a
  // node, so only non-identical pairs can link here.
  std::vector<std::vector<std::size_t>> blocks_of(g.nodes.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int id : block_nodes[b]) {
      if (id >= 0) blocks_of[static_cast<std::size_t>(id)].push_back(b);
    }
  }
  std::optional<SimilarityScorer> local;
  if (scorer == nullptr) {
    local.emplace(cfg);
    scorer = &*local;
  }
  const double y = cfg.similarity_threshold_y;
  for (std::size_t u = 0; u < g.nodes.size(); ++u) {
    for (std::size_t v = u + 1; v < g.nodes.size(); ++v) {
      const auto& bu = blocks_of[u];
      const auto& bv = blocks_of[v];
      const bool cross_block =
          bu.size() > 1 || bv.size() > 1 || (!bu.empty() && !bv.empty() && bu[0] != bv[0]);
      if (!cross_block) continue;
      EventElement ea{g.nodes[u].surface, g.nodes[u].category};
      EventElement eb{g.nodes[v].surface, g.nodes[v].category};
      if ((*scorer)(ea, eb) >= y) add_edge(static_cast<int>(u), static_cast<int>(v));
    }
  }

  g.finalize("graph " + g.doc_id);
  return g;
}

std::vector<IntraRelationGraph> build_graphs(std::span<const EventBlock> blocks,
                                             const GraphBuildConfig& cfg,
                                             int threads) {
  cfg.validate();
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<EventBlock>> by_doc;
  for (const EventBlock& b : blocks) {
    auto [it, inserted] = by_doc.try_emplace(b.doc_id);
    if (inserted) order.push_back(b.doc_id);
    it->second.push_back(b);
  }

  SimilarityScorer scorer(cfg);
  std::vector<IntraRelationGraph> graphs(order.size());
  parallel_for(order.size(), threads, [&](std::size_t i) {
    const auto& doc_blocks = by_doc.at(order[i]);
    graphs[i] = build_graph(doc_blocks, cfg, &scorer);
  });
  return graphs;
}

namespace {

json graph_to_json(const IntraRelationGraph& g) {
  json nodes = json::array();
  for (const Node& n : g.nodes) {
    json jn;
    jn["id"] = n.id;
    jn["surface"] = n.surface;
    jn["category"] = std::string(to_string(n.category));
    if (n.in_skeleton) jn["in_skeleton"] = true;
    nodes.push_back(std::move(jn));
  }
  json edges = json::array();
  for (const Edge& e : g.edges) {
    json je;
    je["u"] = e.u;
    je["v"] = e.v;
    je["type"] = std::string(to_string(e.type));
    edges.push_back(std::move(je));
  }
  json jg;
  jg["doc_id"] = g.doc_id;
  jg["nodes"] = std::move(nodes);
  jg["edges"] = std::move(edges);
  return jg;
}

IntraRelationGraph graph_from_json(const json& jg, const std::string& where) {
  if (!jg.is_object()) throw SchemaError(where + ": graph entry must be an object");
  IntraRelationGraph g;
  if (!jg.contains("doc_id") || !jg.at("doc_id").is_string()) {
    throw SchemaError(where + ": missing string field doc_id");
  }
  g.doc_id = jg.at("doc_id").get<std::string>();
  if (!jg.contains("nodes") || !jg.at("nodes").is_array()) {
    throw SchemaError(where + ": missing array field nodes");
  }
  if (!jg.contains("edges") || !jg.at("edges").is_array()) {
    throw SchemaError(where + ": missing array field edges");
  }
  for (const json& jn : jg.at("nodes")) {
    if (!jn.is_object() || !jn.contains("id") || !jn.at("id").is_number_integer() ||
        !jn.contains("surface") || !jn.at("surface").is_string() ||
        !jn.contains("category") || !jn.at("category").is_string()) {
      throw SchemaError(where + ": node entries need integer id, string surface, string category");
    }
    const std::string cat = jn.at("category").get<std::string>();
    const auto category = category_from_string(cat);
    if (!category) {
      throw SchemaError(where + ": unknown category \"" + cat +
                        "\"; allowed categories: ENTITY, PREDICATE, ARGUMENT");
    }
    Node n;
    n.id = jn.at("id").get<int>();
    n.surface = jn.at("surface").get<std::string>();
    n.category = *category;
    n.in_skeleton = jn.value("in_skeleton", false);
    g.nodes.push_back(std::move(n));
  }
  for (const json& je : jg.at("edges")) {
    if (!je.is_object() || !je.contains("u") || !je.at("u").is_number_integer() ||
        !je.contains("v") || !je.at("v").is_number_integer() ||
        !je.contains("type") || !je.at("type").is_string()) {
      throw SchemaError(where + ": edge entries need integer u, integer v, string type");
    }
    const std::string type = je.at("type").get<std::string>();
    const auto et = edge_type_from_string(type);
    if (!et) {
      throw SchemaError(where + ": unknown edge type \"" + type +
                        "\"; allowed types: EE, EP, EA, PP, PA, AA");
    }
    g.edges.push_back(Edge{je.at("u").get<int>(), je.at("v").get<int>(), *et});
  }
  g.finalize(where + ": graph " + g.doc_id);
  return g;
}

}  // namespace

void save_graphs(const std::string& path, std::span<const IntraRelationGraph> graphs) {
  json root;
  root["version"] = kGraphFormatVersion;
  json arr = json::array();
  for (const IntraRelationGraph& g : graphs) arr.push_back(graph_to_json(g));
  root["graphs"] = std::move(arr);

  std::ofstream out(path);
  if (!out) throw IoError("cannot open graph file for writing: " + path);
  out << root.dump(2) << "\n";
  if (!out) throw IoError("failed writing graph file: " + path);
}

std::vector<IntraRelationGraph> load_graphs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file: " + path);
  const std::string where = "graph file " + path;
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw SchemaError(where + ": invalid JSON: " + e.what());
  }
  if (!root.is_object() || !root.contains("version") ||
      !root.at("version").is_number_integer()) {
    throw SchemaError(where + ": missing integer field version");
  }
  const int version = root.at("version").get<int>();
  if (version != kGraphFormatVersion) {
    throw SchemaError(where + ": unsupported version " + std::to_string(version) +
                      "; expected " + std::to_string(kGraphFormatVersion));
  }
  if (!root.contains("graphs") || !root.at("graphs").is_array()) {
    throw SchemaError(where + ": missing array field graphs");
  }
  std::vector<IntraRelationGraph> graphs;
  for (const json& jg : root.at("graphs")) {
    graphs.push_back(graph_from_json(jg, where));
  }
  return graphs;
}

void save_graph(const std::string& path, const IntraRelationGraph& graph) {
  save_graphs(path, std::span<const IntraRelationGraph>(&graph, 1));
}

IntraRelationGraph load_graph(const std::string& path) {
  auto graphs = load_graphs(path);
  if (graphs.size() != 1) {
    throw SchemaError("graph file " + path + ": expected exactly one graph, found " +
                      std::to_string(graphs.size()));
  }
  return std::move(graphs.front());
}

}  // namespace segcl
