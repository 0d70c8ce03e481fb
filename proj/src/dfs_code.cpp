#include "segcl/dfs_code.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "segcl/core.hpp"

namespace segcl {

int category_label(Category c) {
  switch (c) {
    case Category::Entity: return 0;
    case Category::Predicate: return 1;
    case Category::Argument: return 2;
  }
  return 2;
}

Category category_from_label(int label) {
  switch (label) {
    case 0: return Category::Entity;
    case 1: return Category::Predicate;
    default: return Category::Argument;
  }
}

int edge_type_label(EdgeType t) { return static_cast<int>(t); }

EdgeType edge_type_from_label(int label) { return static_cast<EdgeType>(label); }

bool edge_less(const DfsEdge& a, const DfsEdge& b) {
  const bool af = a.is_forward();
  const bool bf = b.is_forward();
  if (!af && !bf) {
    if (a.from != b.from) return a.from < b.from;
    if (a.to != b.to) return a.to < b.to;
  } else if (af && bf) {
    if (a.to != b.to) return a.to < b.to;
    if (a.from != b.from) return a.from > b.from;
  } else if (!af && bf) {
    if (a.from < b.to) return true;
    return false;
  } else {  // af && !bf
    if (a.to <= b.from) return true;
    return false;
  }
  return std::tie(a.from_label, a.edge_label, a.to_label) <
         std::tie(b.from_label, b.edge_label, b.to_label);
}

int compare_codes(const DfsCode& a, const DfsCode& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (edge_less(a[i], b[i])) return -1;
    if (edge_less(b[i], a[i])) return 1;
    if (!(a[i] == b[i])) {
      // Same order rank but different tuples cannot happen: edge_less is a
      // strict weak ordering refined down to full tuples.
      return a[i].from < b[i].from ? -1 : 1;
    }
  }
  if (a.size() == b.size()) return 0;
  return a.size() < b.size() ? -1 : 1;
}

bool code_less(const DfsCode& a, const DfsCode& b) { return compare_codes(a, b) < 0; }

std::vector<int> rightmost_path(const DfsCode& code) {
  std::vector<int> path;
  if (code.empty()) return path;
  int current = -1;
  for (const DfsEdge& e : code) {
    if (e.is_forward()) current = std::max(current, e.to);
  }
  if (current < 0) return path;
  path.push_back(current);
  while (current != 0) {
    for (auto it = code.rbegin(); it != code.rend(); ++it) {
      if (it->is_forward() && it->to == current) {
        current = it->from;
        path.push_back(current);
        break;
      }
    }
  }
  return path;
}

int vertex_count(const DfsCode& code) {
  int n = 0;
  for (const DfsEdge& e : code) n = std::max({n, e.from + 1, e.to + 1});
  return n;
}

std::string to_string(const DfsCode& code) {
  std::ostringstream out;
  for (std::size_t i = 0; i < code.size(); ++i) {
    const DfsEdge& e = code[i];
    if (i > 0) out << " ";
    out << "(" << e.from << "," << e.to << ","
        << to_string(category_from_label(e.from_label)) << ","
        << to_string(edge_type_from_label(e.edge_label)) << ","
        << to_string(category_from_label(e.to_label)) << ")";
  }
  return out.str();
}

void LabeledGraph::finalize() {
  incidence_.assign(vertex_labels.size(), {});
  for (int e = 0; e < edge_count(); ++e) {
    const LEdge& edge = edges[static_cast<std::size_t>(e)];
    incidence_[static_cast<std::size_t>(edge.u)].push_back({edge.v, e});
    incidence_[static_cast<std::size_t>(edge.v)].push_back({edge.u, e});
  }
}

LabeledGraph to_labeled(const IntraRelationGraph& g) {
  LabeledGraph out;
  out.vertex_labels.reserve(g.nodes.size());
  for (const Node& n : g.nodes) out.vertex_labels.push_back(category_label(n.category));
  out.edges.reserve(g.edges.size());
  for (const Edge& e : g.edges) {
    out.edges.push_back({g.index_of(e.u), g.index_of(e.v), edge_type_label(e.type)});
  }
  out.finalize();
  return out;
}

LabeledGraph code_to_graph(const DfsCode& code) {
  LabeledGraph g;
  g.vertex_labels.assign(static_cast<std::size_t>(vertex_count(code)), -1);
  for (const DfsEdge& e : code) {
    g.vertex_labels[static_cast<std::size_t>(e.from)] = e.from_label;
    g.vertex_labels[static_cast<std::size_t>(e.to)] = e.to_label;
    g.edges.push_back({e.from, e.to, e.edge_label});
  }
  g.finalize();
  return g;
}

bool is_connected(const LabeledGraph& g) {
  if (g.vertex_count() == 0) return true;
  std::vector<char> seen(static_cast<std::size_t>(g.vertex_count()), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& inc : g.incidence()[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(inc.other)]) {
        seen[static_cast<std::size_t>(inc.other)] = 1;
        ++reached;
        stack.push_back(inc.other);
      }
    }
  }
  return reached == g.vertex_count();
}

void enumerate_extensions(const LabeledGraph& g, const std::vector<int>& rm_path,
                          const PatternEmbedding& emb,
                          std::vector<PatternExtension>& out) {
  const int n = static_cast<int>(emb.vertex_of.size());
  std::vector<char> mapped(g.vertex_labels.size(), 0);
  for (int gv : emb.vertex_of) mapped[static_cast<std::size_t>(gv)] = 1;
  std::vector<int> pattern_of(g.vertex_labels.size(), -1);
  for (int p = 0; p < n; ++p) pattern_of[static_cast<std::size_t>(emb.vertex_of[static_cast<std::size_t>(p)])] = p;

  const int rm = rm_path.empty() ? 0 : rm_path.front();
  const int rm_gv = emb.vertex_of[static_cast<std::size_t>(rm)];

  // Backward: rightmost vertex to an earlier vertex on the rightmost path.
  for (const auto& inc : g.incidence()[static_cast<std::size_t>(rm_gv)]) {
    if (emb.edge_used[static_cast<std::size_t>(inc.edge)]) continue;
    const int p = pattern_of[static_cast<std::size_t>(inc.other)];
    if (p < 0 || p == rm) continue;
    if (std::find(rm_path.begin(), rm_path.end(), p) == rm_path.end()) continue;
    out.push_back({DfsEdge{rm, p, g.vertex_labels[static_cast<std::size_t>(rm_gv)],
                           g.edges[static_cast<std::size_t>(inc.edge)].label,
                           g.vertex_labels[static_cast<std::size_t>(inc.other)]},
                   inc.edge, -1});
  }

  // Forward: any rightmost-path vertex to an unmapped graph vertex.
  for (int p : rm_path) {
    const int gv = emb.vertex_of[static_cast<std::size_t>(p)];
    for (const auto& inc : g.incidence()[static_cast<std::size_t>(gv)]) {
      if (emb.edge_used[static_cast<std::size_t>(inc.edge)]) continue;
      if (mapped[static_cast<std::size_t>(inc.other)]) continue;
      out.push_back({DfsEdge{p, n, g.vertex_labels[static_cast<std::size_t>(gv)],
                             g.edges[static_cast<std::size_t>(inc.edge)].label,
                             g.vertex_labels[static_cast<std::size_t>(inc.other)]},
                     inc.edge, inc.other});
    }
  }
}

DfsCode min_dfs_code(const LabeledGraph& g) {
  if (!is_connected(g)) throw Error("min_dfs_code: disconnected graph");
  DfsCode code;
  if (g.edge_count() == 0) return code;

  std::vector<PatternEmbedding> embeddings;
  bool have_min = false;
  DfsEdge best{};
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edges[static_cast<std::size_t>(e)];
    const int ends[2][2] = {{edge.u, edge.v}, {edge.v, edge.u}};
    for (const auto& uv : ends) {
      DfsEdge t{0, 1, g.vertex_labels[static_cast<std::size_t>(uv[0])], edge.label,
                g.vertex_labels[static_cast<std::size_t>(uv[1])]};
      if (!have_min || edge_less(t, best)) {
        best = t;
        have_min = true;
        embeddings.clear();
      }
      if (t == best) {
        PatternEmbedding emb;
        emb.vertex_of = {uv[0], uv[1]};
        emb.edge_used.assign(static_cast<std::size_t>(g.edge_count()), 0);
        emb.edge_used[static_cast<std::size_t>(e)] = 1;
        embeddings.push_back(std::move(emb));
      }
    }
  }
  code.push_back(best);

  while (static_cast<int>(code.size()) < g.edge_count()) {
    const std::vector<int> rm_path = rightmost_path(code);
    bool found = false;
    DfsEdge min_tuple{};
    std::vector<PatternEmbedding> next;
    for (const PatternEmbedding& emb : embeddings) {
      std::vector<PatternExtension> exts;
      enumerate_extensions(g, rm_path, emb, exts);
      for (const PatternExtension& ext : exts) {
        if (!found || edge_less(ext.tuple, min_tuple)) {
          min_tuple = ext.tuple;
          found = true;
          next.clear();
        }
        if (ext.tuple == min_tuple) {
          PatternEmbedding grown = emb;
          grown.edge_used[static_cast<std::size_t>(ext.graph_edge)] = 1;
          if (ext.graph_vertex >= 0) grown.vertex_of.push_back(ext.graph_vertex);
          next.push_back(std::move(grown));
        }
      }
    }
    if (!found) throw Error("min_dfs_code: no extension found on a connected graph");
    code.push_back(min_tuple);
    embeddings = std::move(next);
  }
  return code;
}

bool is_min(const DfsCode& code) {
  if (code.empty()) return true;
  return min_dfs_code(code_to_graph(code)) == code;
}

}  // namespace segcl
