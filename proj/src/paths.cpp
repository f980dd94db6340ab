#include "spillnet/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spillnet::paths {

std::string PathScope::label() const {
  if (intra()) return ingest::to_string(from);
  return ingest::to_string(from) + "->" + ingest::to_string(to);
}

MajorPathSet major_paths(const net::SpilloverNetwork& net,
                         const PathScope& scope, double quantile) {
  if (!(quantile > 0.0) || quantile > 1.0)
    throw ConfigError("major_paths: quantile must be in (0, 1]");

  const int n = net.n();
  bool from_seen = false, to_seen = false;
  for (int i = 0; i < n; ++i) {
    Group g = net.group_of(i);
    if (g == scope.from) from_seen = true;
    if (g == scope.to) to_seen = true;
  }
  if (!from_seen || !to_seen)
    throw DataError("major_paths: scope group has no members");

  MajorPathSet out;
  out.scope = scope;
  std::vector<PathEdge> cand;
  for (int i = 0; i < n; ++i) {
    if (net.group_of(i) != scope.from) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i || net.group_of(j) != scope.to) continue;
      double s = net.intensity(i, j);
      if (s > 0.0) cand.push_back({net.nodes[i], net.nodes[j], s, 0});
    }
  }
  out.candidate_count = static_cast<int>(cand.size());
  if (cand.empty()) return out;

  std::sort(cand.begin(), cand.end(), [](const PathEdge& a, const PathEdge& b) {
    if (a.s != b.s) return a.s > b.s;
    if (a.from != b.from) return a.from < b.from;
    return a.to < b.to;
  });
  int k = static_cast<int>(std::ceil(quantile * cand.size() - 1e-9));
  k = std::clamp(k, 1, out.candidate_count);
  out.edges.assign(cand.begin(), cand.begin() + k);
  for (int r = 0; r < k; ++r) out.edges[r].rank = r + 1;
  out.cutoff = out.edges.back().s;
  return out;
}

std::vector<MajorPathSet> all_major_paths(const net::SpilloverNetwork& net,
                                          double quantile) {
  std::vector<Group> present;
  for (Group g : ingest::kMainGroups) {
    for (int i = 0; i < net.n(); ++i) {
      if (net.group_of(i) == g) {
        present.push_back(g);
        break;
      }
    }
  }
  std::vector<MajorPathSet> out;
  for (Group from : present)
    for (Group to : present)
      out.push_back(major_paths(net, {from, to}, quantile));
  return out;
}

GroupDigraph group_net_digraph(const net::SectorInfluenceMatrix& si) {
  GroupDigraph g;
  g.nodes.assign(std::begin(ingest::kMainGroups), std::end(ingest::kMainGroups));
  const int m = static_cast<int>(g.nodes.size());

  std::vector<int> at(m, -1);
  for (int k = 0; k < m; ++k) {
    for (std::size_t s = 0; s < si.groups.size(); ++s)
      if (si.groups[s] == g.nodes[k]) at[k] = static_cast<int>(s);
    if (at[k] < 0)
      throw DataError("group_net_digraph: main group " +
                      ingest::to_string(g.nodes[k]) + " missing");
  }

  g.gross.setZero(m, m);
  g.net.setZero(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      if (a != b) g.gross(a, b) = si.gross(at[a], at[b]);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      if (a != b) g.net(a, b) = std::max(0.0, g.gross(a, b) - g.gross(b, a));
  return g;
}

namespace {

struct ArbEdge {
  int u, v;
  double w;
  int orig;
};

// Chu-Liu/Edmonds, maximum arborescence rooted at `root`.  Returns false when
// some node has no incoming edge after contractions (root cannot reach it).
// On success `picked` holds one original edge id per non-root node.
bool solve_arb(int n, int root, const std::vector<ArbEdge>& edges,
               std::vector<int>& picked) {
  std::vector<int> best(n, -1);
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    const ArbEdge& e = edges[i];
    if (e.u == e.v || e.v == root) continue;
    if (best[e.v] < 0 || e.w > edges[best[e.v]].w) best[e.v] = i;
  }
  for (int v = 0; v < n; ++v)
    if (v != root && best[v] < 0) return false;

  std::vector<int> comp(n, -1), state(n, -1);
  std::vector<char> in_cycle(n, 0);
  int nc = 0;
  for (int v0 = 0; v0 < n; ++v0) {
    if (state[v0] != -1) continue;
    int v = v0;
    while (v != -1 && state[v] == -1) {
      state[v] = v0;
      v = v == root ? -1 : edges[best[v]].u;
    }
    if (v != -1 && state[v] == v0 && !in_cycle[v]) {
      int u = v;
      do {
        in_cycle[u] = 1;
        comp[u] = nc;
        u = edges[best[u]].u;
      } while (u != v);
      ++nc;
    }
  }
  if (nc == 0) {
    picked.clear();
    for (int v = 0; v < n; ++v)
      if (v != root) picked.push_back(edges[best[v]].orig);
    return true;
  }
  for (int v = 0; v < n; ++v)
    if (comp[v] < 0) comp[v] = nc++;

  // Contract cycles; edges entering a cycle are re-weighted against the cycle
  // edge they would displace.
  std::vector<ArbEdge> edges2;
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    const ArbEdge& e = edges[i];
    int cu = comp[e.u], cv = comp[e.v];
    if (cu == cv) continue;
    double w2 = e.w - (in_cycle[e.v] ? edges[best[e.v]].w : 0.0);
    edges2.push_back({cu, cv, w2, i});
  }
  std::vector<int> picked2;
  if (!solve_arb(nc, comp[root], edges2, picked2)) return false;

  std::vector<int> final_best = best;
  for (int idx : picked2) final_best[edges[idx].v] = idx;
  picked.clear();
  for (int v = 0; v < n; ++v)
    if (v != root) picked.push_back(edges[final_best[v]].orig);
  return true;
}

struct RootedTree {
  bool ok = false;
  double total = 0;
  std::vector<int> picked;
};

RootedTree try_root(int n, int root, const std::vector<ArbEdge>& edges) {
  RootedTree r;
  if (!solve_arb(n, root, edges, r.picked)) return r;
  r.ok = true;
  for (int idx : r.picked) r.total += edges[idx].w;
  return r;
}

}  // namespace

Arborescence max_arborescence(const GroupDigraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<ArbEdge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && g.net(u, v) > 0.0)
        edges.push_back({u, v, g.net(u, v), static_cast<int>(edges.size())});

  // Candidate roots in lexicographic tag order so exact ties keep the first.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return ingest::to_string(g.nodes[a]) < ingest::to_string(g.nodes[b]);
  });

  int best_root = -1;
  RootedTree best;
  for (int root : order) {
    RootedTree r = try_root(n, root, edges);
    if (!r.ok) continue;
    if (best_root < 0 || r.total > best.total) {
      best_root = root;
      best = std::move(r);
    }
  }
  if (best_root < 0)
    throw DataError("group digraph not spanning-connected");

  Arborescence arb;
  arb.root = g.nodes[best_root];
  arb.total_weight = best.total;
  std::sort(best.picked.begin(), best.picked.end(),
            [&](int a, int b) { return edges[a].v < edges[b].v; });
  for (int idx : best.picked)
    arb.edges.push_back(
        {g.nodes[edges[idx].u], g.nodes[edges[idx].v], edges[idx].w});
  return arb;
}

std::vector<UndirectedEdge> undirected_mst(const GroupDigraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  struct UE {
    int a, b;
    double w;
  };
  std::vector<UE> all;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      double w = std::max(g.net(a, b), g.net(b, a));
      if (w > 0.0) all.push_back({a, b, w});
    }
  std::sort(all.begin(), all.end(), [](const UE& x, const UE& y) {
    if (x.w != y.w) return x.w > y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::vector<UndirectedEdge> tree;
  for (const UE& e : all) {
    int ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    parent[ra] = rb;
    tree.push_back({g.nodes[e.a], g.nodes[e.b], e.w});
  }
  if (static_cast<int>(tree.size()) != n - 1)
    throw DataError("group digraph not spanning-connected");
  return tree;
}

NodeArborescence node_arborescence(const net::SpilloverNetwork& net) {
  const int n = net.n();
  if (n < 2) throw DataError("node_arborescence: need at least 2 nodes");
  std::vector<ArbEdge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double w = net.intensity(i, j) - net.intensity(j, i);
      if (w > 0.0) edges.push_back({i, j, w, static_cast<int>(edges.size())});
    }

  int best_root = -1;
  RootedTree best;
  for (int root = 0; root < n; ++root) {  // nodes are code-sorted already
    RootedTree r = try_root(n, root, edges);
    if (!r.ok) continue;
    if (best_root < 0 || r.total > best.total) {
      best_root = root;
      best = std::move(r);
    }
  }
  if (best_root < 0)
    throw DataError("node net digraph not spanning-connected");

  NodeArborescence arb;
  arb.root = net.nodes[best_root];
  arb.total_weight = best.total;
  std::sort(best.picked.begin(), best.picked.end(),
            [&](int a, int b) { return edges[a].v < edges[b].v; });
  for (int idx : best.picked)
    arb.edges.push_back(
        {net.nodes[edges[idx].u], net.nodes[edges[idx].v], edges[idx].w});
  return arb;
}

}  // namespace spillnet::paths
