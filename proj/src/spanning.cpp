#include <algorithm>
#include <map>
#include <numeric>

#include "bt/spanning.hpp"

namespace bt {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

bool intersects(const std::vector<int>& a, const std::vector<int>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j)
      ++i;
    else
      ++j;
  }
  return false;
}

// Greedy split of one oversized cluster. `eta` holds mergeable pairs with
// positive weight, keyed by local indices (r < s).
std::vector<NodeSet> greedy_split(const NodeSet& nodes, const std::map<std::pair<int, int>, double>& eta, int B) {
  const int m = static_cast<int>(nodes.size());
  std::vector<std::vector<std::pair<int, double>>> adj(m);
  for (const auto& [rs, v] : eta) {
    adj[rs.first].emplace_back(rs.second, v);
    adj[rs.second].emplace_back(rs.first, v);
  }
  std::vector<char> taken(m, 0);
  std::vector<NodeSet> out;
  while (true) {
    const std::pair<int, int>* seed = nullptr;
    double best = 0.0;
    for (const auto& [rs, v] : eta) {
      if (taken[rs.first] || taken[rs.second]) continue;
      if (!seed || v > best) {
        seed = &rs;
        best = v;
      }
    }
    if (!seed) break;
    std::vector<int> members{seed->first, seed->second};
    taken[seed->first] = taken[seed->second] = 1;
    std::vector<double> gain(m, 0.0);
    std::vector<char> linked(m, 0);
    auto absorb = [&](int r) {
      for (auto [t, v] : adj[r]) {
        gain[t] += v;
        linked[t] = 1;
      }
    };
    absorb(seed->first);
    absorb(seed->second);
    while (static_cast<int>(members.size()) < B) {
      int pick = -1;
      for (int t = 0; t < m; ++t) {
        if (taken[t] || !linked[t]) continue;
        if (pick < 0 || gain[t] > gain[pick]) pick = t;
      }
      if (pick < 0) break;
      taken[pick] = 1;
      members.push_back(pick);
      absorb(pick);
    }
    NodeSet c;
    for (int r : members) c.push_back(nodes[r]);
    std::sort(c.begin(), c.end());
    out.push_back(std::move(c));
  }
  for (int r = 0; r < m; ++r)
    if (!taken[r]) out.push_back({nodes[r]});
  return out;
}

}  // namespace

std::vector<NodeSet> split_clusters(const Graph& g, const BlockTree& bt, std::span<const double> w, int B) {
  if (B < 1) throw DomainError("B must be at least 1");
  if (w.size() != g.num_edges()) throw DomainError("one weight per edge required");
  const int n = g.num_nodes();
  std::vector<NodeSet> out;
  if (B == 1) {
    for (NodeId v = 0; v < n; ++v) out.push_back({v});
    return out;
  }

  std::vector<int> sub_of(n, -1);
  std::vector<int> local(n, -1);
  std::vector<char> in_children(n, 0);
  for (int k = 0; k < bt.num_clusters(); ++k) {
    const NodeSet& nodes = bt.clusters[k];
    std::vector<NodeSet> parts;
    if (static_cast<int>(nodes.size()) <= B) {
      parts.push_back(nodes);
    } else {
      const int m = static_cast<int>(nodes.size());
      for (int i = 0; i < m; ++i) local[nodes[i]] = i;
      std::map<std::pair<int, int>, double> eta;
      auto add = [&](int a, int b, double v) {
        if (a > b) std::swap(a, b);
        eta[{a, b}] += v;
      };
      for (int i = 0; i < m; ++i) {
        const NodeId r = nodes[i];
        auto nb = g.neighbors(r);
        auto ids = g.incident_edges(r);
        for (std::size_t a = 0; a < nb.size(); ++a)
          if (local[nb[a]] > i) add(i, local[nb[a]], w[ids[a]]);
      }
      if (k != 0) {
        for (int c : bt.children[k])
          for (NodeId t : bt.clusters[c]) in_children[t] = 1;
        // Paths r - t - s through child-cluster nodes t.
        for (int i = 0; i < m; ++i) {
          const NodeId r = nodes[i];
          auto nb = g.neighbors(r);
          auto ids = g.incident_edges(r);
          for (std::size_t a = 0; a < nb.size(); ++a) {
            const NodeId t = nb[a];
            if (!in_children[t]) continue;
            auto nb2 = g.neighbors(t);
            auto ids2 = g.incident_edges(t);
            for (std::size_t b = 0; b < nb2.size(); ++b) {
              const NodeId s = nb2[b];
              if (local[s] > i && bt.cluster_of[s] == k) add(i, local[s], w[ids[a]] + w[ids2[b]]);
            }
          }
        }
        for (int c : bt.children[k])
          for (NodeId t : bt.clusters[c]) in_children[t] = 0;

        // Pairs are mergeable only when attached to a common parent sub-cluster.
        const int p = bt.parent[k];
        std::vector<std::vector<int>> attach(m);
        for (int i = 0; i < m; ++i) {
          for (NodeId u : g.neighbors(nodes[i]))
            if (bt.cluster_of[u] == p) attach[i].push_back(sub_of[u]);
          std::sort(attach[i].begin(), attach[i].end());
          attach[i].erase(std::unique(attach[i].begin(), attach[i].end()), attach[i].end());
        }
        std::erase_if(eta, [&](const auto& kv) { return !intersects(attach[kv.first.first], attach[kv.first.second]); });
      }
      std::erase_if(eta, [](const auto& kv) { return !(kv.second > 0.0); });
      parts = greedy_split(nodes, eta, B);
      for (NodeId v : nodes) local[v] = -1;
    }
    for (auto& part : parts) {
      for (NodeId v : part) sub_of[v] = static_cast<int>(out.size());
      out.push_back(std::move(part));
    }
  }
  return out;
}

ClusterGraph cluster_graph_weights(const Graph& g, std::span<const NodeSet> clusters, std::span<const double> w) {
  const int n = g.num_nodes();
  std::vector<int> of(n, -1);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (NodeId v : clusters[c]) {
      if (!g.contains(v) || of[v] != -1) throw DomainError("clusters must partition the nodes");
      of[v] = static_cast<int>(c);
    }
  if (std::count(of.begin(), of.end(), -1)) throw DomainError("clusters must partition the nodes");
  std::map<std::pair<int, int>, double> acc;
  const auto& edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    int a = of[edges[e].u];
    int b = of[edges[e].v];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    acc[{a, b}] += w[e];
  }
  ClusterGraph cg;
  cg.num_clusters = static_cast<int>(clusters.size());
  for (const auto& [ij, v] : acc) {
    cg.edges.push_back(ij);
    cg.weights.push_back(v);
  }
  return cg;
}

std::vector<std::pair<int, int>> mwst(const ClusterGraph& cg) {
  std::vector<std::size_t> order(cg.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cg.weights[a] != cg.weights[b]) return cg.weights[a] > cg.weights[b];
    return cg.edges[a] < cg.edges[b];
  });
  UnionFind uf(cg.num_clusters);
  std::vector<std::pair<int, int>> tree;
  for (std::size_t e : order)
    if (uf.unite(cg.edges[e].first, cg.edges[e].second)) tree.push_back(cg.edges[e]);
  if (cg.num_clusters > 0 && static_cast<int>(tree.size()) != cg.num_clusters - 1)
    throw GraphError("cluster graph is disconnected");
  std::sort(tree.begin(), tree.end());
  return tree;
}

BlockTree default_block_tree(const Graph& g) {
  const RootSearchResult r = heuristic_root_search(g);
  return construct_block_tree(g, r.root);
}

SpanningBlockTree spanning_block_tree(const Graph& g, std::span<const double> w, int B, const BlockTree* base) {
  if (B < 1) throw DomainError("B must be at least 1");
  if (!is_connected(g)) throw GraphError("graph not connected; decompose it into connected components first");
  std::optional<BlockTree> own;
  if (!base && B > 1) {
    own = default_block_tree(g);
    base = &*own;
  }
  std::vector<NodeSet> clusters = B > 1 ? split_clusters(g, *base, w, B) : split_clusters(g, BlockTree{}, w, 1);
  const ClusterGraph cg = cluster_graph_weights(g, clusters, w);
  const auto tree = mwst(cg);

  int root = 0;
  const NodeId anchor = base ? base->clusters[0].front() : 0;
  for (std::size_t c = 0; c < clusters.size(); ++c)
    if (std::binary_search(clusters[c].begin(), clusters[c].end(), anchor)) root = static_cast<int>(c);

  SpanningBlockTree out;
  out.block_tree = make_block_tree(g.num_nodes(), std::move(clusters), tree, root);
  const BlockTree& bt = out.block_tree;
  const auto& edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int a = bt.cluster_of[edges[e].u];
    const int b = bt.cluster_of[edges[e].v];
    if (a == b || bt.adjacent(a, b)) {
      out.retained_edges.push_back(e);
      out.total_weight += w[e];
    } else {
      out.dropped_weight += w[e];
    }
  }
  return out;
}

}  // namespace bt
