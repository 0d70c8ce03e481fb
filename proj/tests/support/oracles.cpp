#include "support/oracles.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "segcl/core.hpp"

namespace segcl::oracle {

namespace {

bool tuple_forward(const DfsEdge& t) { return t.to > t.from; }

/// gSpan tuple order, restated from the published definition.
bool tuple_less(const DfsEdge& a, const DfsEdge& b) {
  const bool af = tuple_forward(a);
  const bool bf = tuple_forward(b);
  if (!af && bf) return a.from < b.to;
  if (af && !bf) return a.to <= b.from;
  if (!af && !bf) {
    if (a.from != b.from) return a.from < b.from;
    if (a.to != b.to) return a.to < b.to;
  } else {
    if (a.to != b.to) return a.to < b.to;
    if (a.from != b.from) return a.from > b.from;
  }
  if (a.from_label != b.from_label) return a.from_label < b.from_label;
  if (a.edge_label != b.edge_label) return a.edge_label < b.edge_label;
  return a.to_label < b.to_label;
}

int tuple_cmp(const DfsEdge& a, const DfsEdge& b) {
  if (tuple_less(a, b)) return -1;
  if (tuple_less(b, a)) return 1;
  return 0;
}

bool code_lt(const DfsCode& a, const DfsCode& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int c = tuple_cmp(a[i], b[i]);
    if (c != 0) return c < 0;
  }
  return a.size() < b.size();
}

struct EnumState {
  const LabeledGraph* g = nullptr;
  std::vector<int> vertex_of;   // pattern index -> graph vertex
  std::vector<int> pattern_of;  // graph vertex -> pattern index or -1
  std::vector<int> parent;      // pattern index -> pattern parent (-1 for root)
  std::vector<char> used;       // graph edge flags
  int rightmost = 0;
  DfsCode code;
  DfsCode best;
  bool has_best = false;
};

std::vector<int> rm_path_of(const EnumState& st) {
  std::vector<int> path;
  for (int v = st.rightmost; v != -1; v = st.parent[static_cast<std::size_t>(v)]) {
    path.push_back(v);
  }
  return path;
}

void enumerate(EnumState& st) {
  // A completed prefix strictly above the incumbent can never win.
  if (st.has_best) {
    const std::size_t k = st.code.size();
    bool tight = k <= st.best.size();
    for (std::size_t i = 0; tight && i < k; ++i) {
      const int c = tuple_cmp(st.code[i], st.best[i]);
      if (c < 0) tight = false;
      if (c > 0) return;
    }
  }
  if (st.code.size() == static_cast<std::size_t>(st.g->edge_count())) {
    if (!st.has_best || code_lt(st.code, st.best)) {
      st.best = st.code;
      st.has_best = true;
    }
    return;
  }

  const std::vector<int> path = rm_path_of(st);
  const int rv = st.vertex_of[static_cast<std::size_t>(st.rightmost)];

  for (int e = 0; e < st.g->edge_count(); ++e) {
    if (st.used[static_cast<std::size_t>(e)]) continue;
    const auto& edge = st.g->edges[static_cast<std::size_t>(e)];
    const int pairs[2][2] = {{edge.u, edge.v}, {edge.v, edge.u}};
    for (const auto& uv : pairs) {
      const int from_p = st.pattern_of[static_cast<std::size_t>(uv[0])];
      const int to_p = st.pattern_of[static_cast<std::size_t>(uv[1])];

      if (from_p == st.rightmost && to_p != -1 && uv[0] == rv) {
        // backward: rightmost vertex to an earlier rightmost-path vertex
        const bool on_path = std::find(path.begin(), path.end(), to_p) != path.end();
        if (!on_path || to_p == st.parent[static_cast<std::size_t>(st.rightmost)]) continue;
        st.used[static_cast<std::size_t>(e)] = 1;
        st.code.push_back({from_p, to_p,
                           st.g->vertex_labels[static_cast<std::size_t>(uv[0])], edge.label,
                           st.g->vertex_labels[static_cast<std::size_t>(uv[1])]});
        enumerate(st);
        st.code.pop_back();
        st.used[static_cast<std::size_t>(e)] = 0;
      } else if (from_p != -1 && to_p == -1) {
        // forward: a rightmost-path vertex to a new vertex
        if (std::find(path.begin(), path.end(), from_p) == path.end()) continue;
        const int new_p = static_cast<int>(st.vertex_of.size());
        st.used[static_cast<std::size_t>(e)] = 1;
        st.vertex_of.push_back(uv[1]);
        st.pattern_of[static_cast<std::size_t>(uv[1])] = new_p;
        st.parent.push_back(from_p);
        const int prev_rm = st.rightmost;
        st.rightmost = new_p;
        st.code.push_back({from_p, new_p,
                           st.g->vertex_labels[static_cast<std::size_t>(uv[0])], edge.label,
                           st.g->vertex_labels[static_cast<std::size_t>(uv[1])]});
        enumerate(st);
        st.code.pop_back();
        st.rightmost = prev_rm;
        st.parent.pop_back();
        st.pattern_of[static_cast<std::size_t>(uv[1])] = -1;
        st.vertex_of.pop_back();
        st.used[static_cast<std::size_t>(e)] = 0;
      }
    }
  }
}

bool subset_connected(const LabeledGraph& g, std::uint32_t mask) {
  std::vector<int> verts;
  for (int e = 0; e < g.edge_count(); ++e) {
    if ((mask >> e) & 1u) {
      verts.push_back(g.edges[static_cast<std::size_t>(e)].u);
      verts.push_back(g.edges[static_cast<std::size_t>(e)].v);
    }
  }
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  if (verts.empty()) return false;

  std::map<int, std::vector<int>> adj;
  for (int e = 0; e < g.edge_count(); ++e) {
    if ((mask >> e) & 1u) {
      adj[g.edges[static_cast<std::size_t>(e)].u].push_back(g.edges[static_cast<std::size_t>(e)].v);
      adj[g.edges[static_cast<std::size_t>(e)].v].push_back(g.edges[static_cast<std::size_t>(e)].u);
    }
  }
  std::set<int> seen{verts[0]};
  std::vector<int> stack{verts[0]};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (seen.insert(w).second) stack.push_back(w);
    }
  }
  return seen.size() == verts.size();
}

LabeledGraph subgraph_of(const LabeledGraph& g, std::uint32_t mask) {
  LabeledGraph sub;
  std::map<int, int> remap;
  for (int e = 0; e < g.edge_count(); ++e) {
    if (!((mask >> e) & 1u)) continue;
    for (int v : {g.edges[static_cast<std::size_t>(e)].u, g.edges[static_cast<std::size_t>(e)].v}) {
      if (!remap.count(v)) {
        remap[v] = static_cast<int>(sub.vertex_labels.size());
        sub.vertex_labels.push_back(g.vertex_labels[static_cast<std::size_t>(v)]);
      }
    }
    sub.edges.push_back({remap[g.edges[static_cast<std::size_t>(e)].u],
                         remap[g.edges[static_cast<std::size_t>(e)].v],
                         g.edges[static_cast<std::size_t>(e)].label});
  }
  return sub;
}

}  // namespace

DfsCode exhaustive_min_code(const LabeledGraph& g) {
  if (g.edge_count() == 0) throw Error("exhaustive_min_code: empty graph");
  EnumState st;
  st.g = &g;
  st.pattern_of.assign(g.vertex_labels.size(), -1);
  st.used.assign(static_cast<std::size_t>(g.edge_count()), 0);

  for (int e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edges[static_cast<std::size_t>(e)];
    const int pairs[2][2] = {{edge.u, edge.v}, {edge.v, edge.u}};
    for (const auto& uv : pairs) {
      st.vertex_of = {uv[0], uv[1]};
      st.pattern_of[static_cast<std::size_t>(uv[0])] = 0;
      st.pattern_of[static_cast<std::size_t>(uv[1])] = 1;
      st.parent = {-1, 0};
      st.rightmost = 1;
      st.used[static_cast<std::size_t>(e)] = 1;
      st.code = {DfsEdge{0, 1, g.vertex_labels[static_cast<std::size_t>(uv[0])], edge.label,
                         g.vertex_labels[static_cast<std::size_t>(uv[1])]}};
      enumerate(st);
      st.used[static_cast<std::size_t>(e)] = 0;
      st.pattern_of[static_cast<std::size_t>(uv[0])] = -1;
      st.pattern_of[static_cast<std::size_t>(uv[1])] = -1;
    }
  }
  if (!st.has_best) throw Error("exhaustive_min_code: disconnected graph");
  return st.best;
}

std::vector<OraclePattern> brute_force_mine(std::span<const IntraRelationGraph> graphs,
                                            int min_support, int min_edges, int max_edges) {
  std::map<DfsCode, int, decltype(&code_lt)> counts(&code_lt);
  for (const IntraRelationGraph& ig : graphs) {
    const LabeledGraph g = to_labeled(ig);
    if (g.edge_count() > 31) throw Error("brute_force_mine: too many edges");
    std::set<DfsCode, decltype(&code_lt)> seen(&code_lt);
    const std::uint32_t limit = 1u << g.edge_count();
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      const int edges = std::popcount(mask);
      if (edges < min_edges || edges > max_edges) continue;
      if (!subset_connected(g, mask)) continue;
      seen.insert(exhaustive_min_code(subgraph_of(g, mask)));
    }
    for (const DfsCode& code : seen) counts[code] += 1;
  }

  std::vector<OraclePattern> out;
  for (const auto& [code, support] : counts) {
    if (support >= min_support) out.push_back({code, support});
  }
  return out;
}

Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                            const Eigen::MatrixXd& x, double h) {
  Eigen::MatrixXd grad(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double keep = probe(r, c);
      probe(r, c) = keep + h;
      const double up = f(probe);
      probe(r, c) = keep - h;
      const double down = f(probe);
      probe(r, c) = keep;
      grad(r, c) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

IntraRelationGraph random_graph(std::mt19937_64& rng, const std::string& doc_id,
                                int max_nodes, int max_edges) {
  const auto pick = [&rng](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  const int n = pick(2, max_nodes);
  IntraRelationGraph g;
  g.doc_id = doc_id;
  const Category cats[3] = {Category::Entity, Category::Predicate, Category::Argument};
  for (int i = 0; i < n; ++i) {
    Node node;
    node.id = i;
    node.surface = "n" + std::to_string(i);
    node.category = cats[pick(0, 2)];
    g.nodes.push_back(std::move(node));
  }

  std::vector<std::pair<int, int>> all_pairs;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) all_pairs.emplace_back(u, v);
  }
  std::shuffle(all_pairs.begin(), all_pairs.end(), rng);
  const int want = std::min<int>(pick(1, max_edges), static_cast<int>(all_pairs.size()));

  const auto type_for = [](Category a, Category b) {
    const int x = std::min(static_cast<int>(a), static_cast<int>(b));
    const int y = std::max(static_cast<int>(a), static_cast<int>(b));
    // Category order: Entity, Predicate, Argument.
    if (x == 0 && y == 0) return EdgeType::EE;
    if (x == 0 && y == 1) return EdgeType::EP;
    if (x == 0 && y == 2) return EdgeType::EA;
    if (x == 1 && y == 1) return EdgeType::PP;
    if (x == 1 && y == 2) return EdgeType::PA;
    return EdgeType::AA;
  };
  for (int e = 0; e < want; ++e) {
    const auto [u, v] = all_pairs[static_cast<std::size_t>(e)];
    Edge edge;
    edge.u = u;
    edge.v = v;
    edge.type = type_for(g.nodes[static_cast<std::size_t>(u)].category,
                         g.nodes[static_cast<std::size_t>(v)].category);
    g.edges.push_back(edge);
  }
  g.finalize("random graph " + doc_id);
  return g;
}

}  // namespace segcl::oracle
