#include "segcl/miner.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "segcl/core.hpp"
#include "segcl/threads.hpp"

namespace segcl {
namespace {

using nlohmann::json;

struct DfsEdgeLess {
  bool operator()(const DfsEdge& a, const DfsEdge& b) const { return edge_less(a, b); }
};

struct Occurrence {
  int graph = 0;
  PatternEmbedding emb;
};

int support_of(const std::vector<Occurrence>& occ) {
  int support = 0;
  int last = -1;
  for (const Occurrence& o : occ) {
    if (o.graph != last) {
      ++support;
      last = o.graph;
    }
  }
  return support;
}

struct MineState {
  std::span<const IntraRelationGraph> graphs;
  std::vector<LabeledGraph> labeled;
  const MinerConfig* cfg = nullptr;
};

std::vector<PatternMatches> collect_matches(const MineState& st,
                                            const std::vector<Occurrence>& occ) {
  std::vector<PatternMatches> out;
  std::set<std::vector<int>> sets;
  int current = -1;
  auto flush = [&] {
    if (current < 0 || sets.empty()) return;
    PatternMatches m;
    m.doc_id = st.graphs[static_cast<std::size_t>(current)].doc_id;
    m.node_sets.assign(sets.begin(), sets.end());
    out.push_back(std::move(m));
    sets.clear();
  };
  for (const Occurrence& o : occ) {
    if (o.graph != current) {
      flush();
      current = o.graph;
    }
    std::vector<int> ids;
    ids.reserve(o.emb.vertex_of.size());
    const auto& nodes = st.graphs[static_cast<std::size_t>(o.graph)].nodes;
    for (int v : o.emb.vertex_of) ids.push_back(nodes[static_cast<std::size_t>(v)].id);
    std::sort(ids.begin(), ids.end());
    sets.insert(std::move(ids));
  }
  flush();
  return out;
}

void mine_recursive(const MineState& st, const DfsCode& code,
                    const std::vector<Occurrence>& occ,
                    std::vector<SkeletonPattern>& out) {
  if (!is_min(code)) return;
  const int edges = static_cast<int>(code.size());
  if (edges >= st.cfg->min_edges) {
    SkeletonPattern p;
    p.code = code;
    p.support = support_of(occ);
    p.matches = collect_matches(st, occ);
    out.push_back(std::move(p));
  }
  if (edges >= st.cfg->max_edges) return;

  const std::vector<int> rm_path = rightmost_path(code);
  std::map<DfsEdge, std::vector<Occurrence>, DfsEdgeLess> children;
  std::vector<PatternExtension> exts;
  for (const Occurrence& o : occ) {
    exts.clear();
    enumerate_extensions(st.labeled[static_cast<std::size_t>(o.graph)], rm_path, o.emb, exts);
    for (const PatternExtension& ext : exts) {
      Occurrence grown{o.graph, o.emb};
      grown.emb.edge_used[static_cast<std::size_t>(ext.graph_edge)] = 1;
      if (ext.graph_vertex >= 0) grown.emb.vertex_of.push_back(ext.graph_vertex);
      children[ext.tuple].push_back(std::move(grown));
    }
  }
  for (auto& [tuple, child_occ] : children) {
    if (support_of(child_occ) < st.cfg->min_support) continue;
    DfsCode child = code;
    child.push_back(tuple);
    mine_recursive(st, child, child_occ, out);
  }
}

}  // namespace

std::optional<SeedOrder> seed_order_from_string(std::string_view s) {
  if (s == "ascending") return SeedOrder::Ascending;
  if (s == "descending") return SeedOrder::Descending;
  return std::nullopt;
}

std::string_view to_string(SeedOrder o) {
  return o == SeedOrder::Ascending ? "ascending" : "descending";
}

void MinerConfig::validate() const {
  if (min_support < 1) throw SchemaError("min_support must be >= 1");
  if (min_edges < 1) throw SchemaError("min_edges must be >= 1");
  if (min_edges > max_edges) throw SchemaError("min_edges must be <= max_edges");
  if (label_frequency_floor < 0) throw SchemaError("label_frequency_floor must be >= 0");
}

int resolve_min_support(int configured, std::size_t corpus_size) {
  if (configured > 0) return configured;
  const std::size_t tenth = (corpus_size + 9) / 10;
  return static_cast<int>(std::max<std::size_t>(2, tenth));
}

std::vector<IntraRelationGraph> prune_infrequent(
    std::span<const IntraRelationGraph> graphs, int floor) {
  if (floor < 0) throw SchemaError("label_frequency_floor must be >= 0");
  std::array<int, 3> category_graphs{0, 0, 0};
  std::array<int, 6> type_graphs{0, 0, 0, 0, 0, 0};
  for (const IntraRelationGraph& g : graphs) {
    std::array<bool, 3> has_cat{false, false, false};
    std::array<bool, 6> has_type{false, false, false, false, false, false};
    for (const Node& n : g.nodes) has_cat[static_cast<std::size_t>(category_label(n.category))] = true;
    for (const Edge& e : g.edges) has_type[static_cast<std::size_t>(edge_type_label(e.type))] = true;
    for (int c = 0; c < 3; ++c) category_graphs[static_cast<std::size_t>(c)] += has_cat[static_cast<std::size_t>(c)];
    for (int t = 0; t < 6; ++t) type_graphs[static_cast<std::size_t>(t)] += has_type[static_cast<std::size_t>(t)];
  }

  std::vector<IntraRelationGraph> out;
  out.reserve(graphs.size());
  for (const IntraRelationGraph& g : graphs) {
    IntraRelationGraph pruned;
    pruned.doc_id = g.doc_id;
    std::unordered_set<int> kept;
    for (const Node& n : g.nodes) {
      if (category_graphs[static_cast<std::size_t>(category_label(n.category))] >= floor) {
        pruned.nodes.push_back(n);
        kept.insert(n.id);
      }
    }
    for (const Edge& e : g.edges) {
      if (type_graphs[static_cast<std::size_t>(edge_type_label(e.type))] < floor) continue;
      if (!kept.count(e.u) || !kept.count(e.v)) continue;
      pruned.edges.push_back(e);
    }
    pruned.finalize("graph " + g.doc_id);
    out.push_back(std::move(pruned));
  }
  return out;
}

std::vector<SkeletonPattern> mine(std::span<const IntraRelationGraph> graphs,
                                  const MinerConfig& cfg, int threads) {
  cfg.validate();
  MineState st;
  st.graphs = graphs;
  st.cfg = &cfg;
  st.labeled.reserve(graphs.size());
  for (const IntraRelationGraph& g : graphs) st.labeled.push_back(to_labeled(g));

  std::map<DfsEdge, std::vector<Occurrence>, DfsEdgeLess> seeds;
  for (std::size_t gi = 0; gi < st.labeled.size(); ++gi) {
    const LabeledGraph& g = st.labeled[gi];
    for (int e = 0; e < g.edge_count(); ++e) {
      const auto& edge = g.edges[static_cast<std::size_t>(e)];
      const int ends[2][2] = {{edge.u, edge.v}, {edge.v, edge.u}};
      for (const auto& uv : ends) {
        DfsEdge t{0, 1, g.vertex_labels[static_cast<std::size_t>(uv[0])], edge.label,
                  g.vertex_labels[static_cast<std::size_t>(uv[1])]};
        Occurrence o;
        o.graph = static_cast<int>(gi);
        o.emb.vertex_of = {uv[0], uv[1]};
        o.emb.edge_used.assign(static_cast<std::size_t>(g.edge_count()), 0);
        o.emb.edge_used[static_cast<std::size_t>(e)] = 1;
        seeds[t].push_back(std::move(o));
      }
    }
  }

  std::vector<std::pair<DfsEdge, std::vector<Occurrence>>> frequent;
  for (auto& [tuple, occ] : seeds) {
    if (support_of(occ) >= cfg.min_support) frequent.emplace_back(tuple, std::move(occ));
  }
  if (cfg.seed_order == SeedOrder::Descending) {
    std::reverse(frequent.begin(), frequent.end());
  }

  std::vector<std::vector<SkeletonPattern>> per_seed(frequent.size());
  parallel_for(frequent.size(), threads, [&](std::size_t i) {
    mine_recursive(st, DfsCode{frequent[i].first}, frequent[i].second, per_seed[i]);
  });

  std::vector<SkeletonPattern> out;
  for (auto& bucket : per_seed) {
    for (auto& p : bucket) out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const SkeletonPattern& a, const SkeletonPattern& b) {
    return code_less(a.code, b.code);
  });
  return out;
}

void mark_skeletons(std::vector<IntraRelationGraph>& graphs,
                    std::span<const SkeletonPattern> patterns, int top_m) {
  std::vector<const SkeletonPattern*> ranked;
  ranked.reserve(patterns.size());
  for (const SkeletonPattern& p : patterns) ranked.push_back(&p);
  std::sort(ranked.begin(), ranked.end(),
            [](const SkeletonPattern* a, const SkeletonPattern* b) {
              if (a->support != b->support) return a->support > b->support;
              if (a->edge_count() != b->edge_count()) return a->edge_count() > b->edge_count();
              return code_less(a->code, b->code);
            });
  if (top_m < static_cast<int>(ranked.size())) {
    ranked.resize(static_cast<std::size_t>(std::max(top_m, 0)));
  }

  std::map<std::string, std::set<int>> flagged;
  for (const SkeletonPattern* p : ranked) {
    for (const PatternMatches& m : p->matches) {
      auto& ids = flagged[m.doc_id];
      for (const auto& node_set : m.node_sets) ids.insert(node_set.begin(), node_set.end());
    }
  }

  for (IntraRelationGraph& g : graphs) {
    auto it = flagged.find(g.doc_id);
    if (it == flagged.end() || it->second.empty()) {
      for (Node& n : g.nodes) n.in_skeleton = true;
      continue;
    }
    for (Node& n : g.nodes) n.in_skeleton = it->second.count(n.id) > 0;
  }
}

namespace {

json code_to_json(const DfsCode& code) {
  json arr = json::array();
  for (const DfsEdge& e : code) {
    arr.push_back(json::array({e.from, e.to,
                               std::string(to_string(category_from_label(e.from_label))),
                               std::string(to_string(edge_type_from_label(e.edge_label))),
                               std::string(to_string(category_from_label(e.to_label)))}));
  }
  return arr;
}

DfsCode code_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) {
    throw SchemaError(where + ": code must be a non-empty array of 5-tuples");
  }
  DfsCode code;
  for (const json& jt : arr) {
    if (!jt.is_array() || jt.size() != 5 || !jt[0].is_number_integer() ||
        !jt[1].is_number_integer() || !jt[2].is_string() || !jt[3].is_string() ||
        !jt[4].is_string()) {
      throw SchemaError(where + ": code tuples must be [i, j, category, edge_type, category]");
    }
    const auto from_cat = category_from_string(jt[2].get<std::string>());
    const auto type = edge_type_from_string(jt[3].get<std::string>());
    const auto to_cat = category_from_string(jt[4].get<std::string>());
    if (!from_cat || !to_cat) {
      throw SchemaError(where + ": unknown category in code tuple");
    }
    if (!type) {
      throw SchemaError(where + ": unknown edge type in code tuple");
    }
    code.push_back(DfsEdge{jt[0].get<int>(), jt[1].get<int>(), category_label(*from_cat),
                           edge_type_label(*type), category_label(*to_cat)});
  }
  if (code.front().from != 0 || code.front().to != 1) {
    throw SchemaError(where + ": first code tuple must start at (0, 1)");
  }
  return code;
}

}  // namespace

void save_patterns(const std::string& path, std::span<const SkeletonPattern> patterns) {
  json root;
  root["version"] = kPatternFormatVersion;
  json arr = json::array();
  for (const SkeletonPattern& p : patterns) {
    json jp;
    jp["code"] = code_to_json(p.code);
    jp["support"] = p.support;
    json matches = json::array();
    for (const PatternMatches& m : p.matches) {
      json jm;
      jm["doc_id"] = m.doc_id;
      jm["nodes"] = m.node_sets;
      matches.push_back(std::move(jm));
    }
    jp["matches"] = std::move(matches);
    arr.push_back(std::move(jp));
  }
  root["patterns"] = std::move(arr);

  std::ofstream out(path);
  if (!out) throw IoError("cannot open pattern file for writing: " + path);
  out << root.dump(2) << "\n";
  if (!out) throw IoError("failed writing pattern file: " + path);
}

std::vector<SkeletonPattern> load_patterns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pattern file: " + path);
  const std::string where = "pattern file " + path;
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
  if (version != kPatternFormatVersion) {
    throw SchemaError(where + ": unsupported version " + std::to_string(version) +
                      "; expected " + std::to_string(kPatternFormatVersion));
  }
  if (!root.contains("patterns") || !root.at("patterns").is_array()) {
    throw SchemaError(where + ": missing array field patterns");
  }
  std::vector<SkeletonPattern> out;
  for (const json& jp : root.at("patterns")) {
    if (!jp.is_object() || !jp.contains("code") || !jp.contains("support") ||
        !jp.at("support").is_number_integer() || !jp.contains("matches") ||
        !jp.at("matches").is_array()) {
      throw SchemaError(where + ": pattern entries need code, integer support, matches");
    }
    SkeletonPattern p;
    p.code = code_from_json(jp.at("code"), where);
    p.support = jp.at("support").get<int>();
    for (const json& jm : jp.at("matches")) {
      if (!jm.is_object() || !jm.contains("doc_id") || !jm.at("doc_id").is_string() ||
          !jm.contains("nodes") || !jm.at("nodes").is_array()) {
        throw SchemaError(where + ": match entries need doc_id and nodes");
      }
      PatternMatches m;
      m.doc_id = jm.at("doc_id").get<std::string>();
      for (const json& js : jm.at("nodes")) {
        if (!js.is_array()) throw SchemaError(where + ": nodes must be arrays of node ids");
        std::vector<int> ids;
        for (const json& ji : js) {
          if (!ji.is_number_integer()) {
            throw SchemaError(where + ": node ids must be integers");
          }
          ids.push_back(ji.get<int>());
        }
        m.node_sets.push_back(std::move(ids));
      }
      p.matches.push_back(std::move(m));
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string format_pattern_table(std::span<const SkeletonPattern> patterns) {
  std::ostringstream out;
  out << "support  edges  code\n";
  for (const SkeletonPattern& p : patterns) {
    out << std::setw(7) << p.support << "  " << std::setw(5) << p.edge_count() << "  "
        << to_string(p.code) << "\n";
  }
  return out.str();
}

}  // namespace segcl
