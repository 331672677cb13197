#include "bt/block_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "layering.hpp"

namespace bt {

namespace detail {

void LayeringWorkspace::resize(int n) {
  if (static_cast<int>(layer.size()) == n) return;
  layer.assign(n, -1);
  uf.assign(n, 0);
  anchor.assign(n, -1);
  anchor_stamp.assign(n, 0);
  size.assign(n, 0);
  order.clear();
  order.reserve(n);
  stamp = 0;
}

NodeId LayeringWorkspace::find(NodeId x) {
  while (uf[x] != x) {
    uf[x] = uf[uf[x]];
    x = uf[x];
  }
  return x;
}

void LayeringWorkspace::unite(NodeId a, NodeId b) {
  a = find(a);
  b = find(b);
  if (a == b) return;
  if (size[a] < size[b]) std::swap(a, b);
  uf[b] = a;
  size[a] += size[b];
}

int run_layering(const Graph& g, std::span<const NodeId> root, LayeringWorkspace& ws) {
  const int n = g.num_nodes();
  ws.resize(n);
  std::fill(ws.layer.begin(), ws.layer.end(), -1);
  ws.order.clear();
  ws.layer_start.clear();

  // Forward pass: successive neighbour layers V_1, V_2, ... of the root.
  ws.layer_start.push_back(0);
  for (NodeId v : root) {
    if (!g.contains(v)) throw DomainError("root node " + std::to_string(v) + " outside graph");
    if (ws.layer[v] == -1) {
      ws.layer[v] = 0;
      ws.order.push_back(v);
    }
  }
  std::size_t head = 0;
  int depth = 0;
  while (head < ws.order.size()) {
    const std::size_t layer_end = ws.order.size();
    for (; head < layer_end; ++head) {
      const NodeId v = ws.order[head];
      for (NodeId w : g.neighbors(v)) {
        if (ws.layer[w] == -1) {
          ws.layer[w] = depth + 1;
          ws.order.push_back(w);
        }
      }
    }
    if (ws.order.size() > layer_end) {
      ws.layer_start.push_back(layer_end);
      ++depth;
    }
  }
  ws.layer_start.push_back(ws.order.size());
  if (static_cast<int>(ws.order.size()) != n)
    throw GraphError("graph not connected; decompose it into connected components first");

  for (NodeId v = 0; v < n; ++v) {
    ws.uf[v] = v;
    ws.size[v] = 1;
  }
  // The root cluster is never split.
  for (std::size_t i = 1; i < ws.layer_start[1]; ++i) ws.unite(ws.order[0], ws.order[i]);

  // Split each later layer into connected components of its induced subgraph.
  for (std::size_t i = ws.layer_start[1]; i < ws.order.size(); ++i) {
    const NodeId v = ws.order[i];
    for (NodeId w : g.neighbors(v))
      if (w > v && ws.layer[w] == ws.layer[v]) ws.unite(v, w);
  }

  // Backward pass: merge every component of layer L-1 touched by a common
  // (already final) component of layer L.
  const int num_layers = static_cast<int>(ws.layer_start.size()) - 1;
  for (int L = num_layers - 1; L >= 2; --L) {
    ++ws.stamp;
    for (std::size_t i = ws.layer_start[L]; i < ws.layer_start[L + 1]; ++i) {
      const NodeId u = ws.order[i];
      const NodeId cu = ws.find(u);
      for (NodeId v : g.neighbors(u)) {
        if (ws.layer[v] != L - 1) continue;
        if (ws.anchor_stamp[cu] != ws.stamp) {
          ws.anchor_stamp[cu] = ws.stamp;
          ws.anchor[cu] = v;
        } else {
          ws.unite(ws.anchor[cu], v);
        }
      }
    }
  }
  return num_layers;
}

int layering_width(const Graph& g, std::span<const NodeId> root, LayeringWorkspace& ws) {
  run_layering(g, root, ws);
  int width = 0;
  for (NodeId v : ws.order) {
    if (ws.uf[v] == v) width = std::max(width, ws.size[v]);
  }
  return width;
}

}  // namespace detail

BlockTree make_block_tree(int n, std::vector<NodeSet> clusters, std::span<const std::pair<int, int>> tree_edges,
                          int root) {
  const int l = static_cast<int>(clusters.size());
  if (l == 0) throw DomainError("block-tree needs at least one cluster");
  if (root < 0 || root >= l) throw DomainError("root cluster index out of range");
  std::vector<int> owner(n, -1);
  for (int c = 0; c < l; ++c) {
    if (clusters[c].empty()) throw DomainError("empty cluster");
    for (NodeId v : clusters[c]) {
      if (v < 0 || v >= n) throw DomainError("cluster node out of range");
      if (owner[v] != -1) throw DomainError("node " + std::to_string(v) + " in two clusters");
      owner[v] = c;
    }
  }
  for (int v = 0; v < n; ++v)
    if (owner[v] == -1) throw DomainError("node " + std::to_string(v) + " in no cluster");
  if (static_cast<int>(tree_edges.size()) != l - 1) throw DomainError("tree needs exactly l-1 edges");

  std::vector<std::vector<int>> adj(l);
  for (auto [a, b] : tree_edges) {
    if (a < 0 || b < 0 || a >= l || b >= l || a == b) throw DomainError("bad tree edge");
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> old_parent(l, -2), old_scale(l, 0);
  std::vector<int> bfs{root};
  old_parent[root] = -1;
  for (std::size_t h = 0; h < bfs.size(); ++h) {
    const int c = bfs[h];
    for (int d : adj[c]) {
      if (old_parent[d] != -2) continue;
      old_parent[d] = c;
      old_scale[d] = old_scale[c] + 1;
      bfs.push_back(d);
    }
  }
  if (static_cast<int>(bfs.size()) != l) throw DomainError("tree edges do not connect all clusters");

  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::vector<int> order(l);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (old_scale[a] != old_scale[b]) return old_scale[a] < old_scale[b];
    return clusters[a].front() < clusters[b].front();
  });
  std::vector<int> new_index(l);
  for (int i = 0; i < l; ++i) new_index[order[i]] = i;

  BlockTree bt;
  bt.clusters.resize(l);
  bt.parent.assign(l, -1);
  bt.scale.assign(l, 0);
  bt.children.assign(l, {});
  bt.cluster_of.assign(n, -1);
  for (int i = 0; i < l; ++i) {
    const int old = order[i];
    bt.clusters[i] = std::move(clusters[old]);
    bt.scale[i] = old_scale[old];
    bt.parent[i] = old_parent[old] < 0 ? -1 : new_index[old_parent[old]];
    for (NodeId v : bt.clusters[i]) bt.cluster_of[v] = i;
  }
  for (int i = 1; i < l; ++i) {
    bt.children[bt.parent[i]].push_back(i);
    bt.edges.emplace_back(bt.parent[i], i);
  }
  return bt;
}

BlockTree construct_block_tree(const Graph& g, std::span<const NodeId> root_cluster) {
  if (root_cluster.empty()) throw DomainError("root cluster must be non-empty");
  detail::LayeringWorkspace ws;
  detail::run_layering(g, root_cluster, ws);
  const int n = g.num_nodes();

  std::vector<int> cluster_id(n, -1);
  std::vector<NodeSet> clusters;
  for (NodeId v : ws.order) {
    const NodeId r = ws.find(v);
    if (cluster_id[r] == -1) {
      cluster_id[r] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[cluster_id[r]].push_back(v);
  }
  // Each non-root cluster attaches to exactly one cluster in the previous layer.
  std::vector<std::pair<int, int>> edges;
  std::vector<char> has_parent(clusters.size(), 0);
  for (NodeId u : ws.order) {
    if (ws.layer[u] == 0) continue;
    const int cu = cluster_id[ws.find(u)];
    if (has_parent[cu]) continue;
    for (NodeId v : g.neighbors(u)) {
      if (ws.layer[v] == ws.layer[u] - 1) {
        edges.emplace_back(cluster_id[ws.find(v)], cu);
        has_parent[cu] = 1;
        break;
      }
    }
  }
  return make_block_tree(n, std::move(clusters), edges, 0);
}

int block_width(const BlockTree& bt) {
  std::size_t w = 0;
  for (const auto& c : bt.clusters) w = std::max(w, c.size());
  return static_cast<int>(w);
}

bool same_structure(const BlockTree& a, const BlockTree& b) {
  if (a.num_clusters() != b.num_clusters()) return false;
  auto canon = [](const BlockTree& t) {
    std::vector<NodeSet> clusters = t.clusters;
    for (auto& c : clusters) std::sort(c.begin(), c.end());
    std::set<std::pair<NodeSet, NodeSet>> edges;
    for (auto [p, c] : t.edges) {
      const NodeSet& x = clusters[p];
      const NodeSet& y = clusters[c];
      edges.insert(x < y ? std::make_pair(x, y) : std::make_pair(y, x));
    }
    std::sort(clusters.begin(), clusters.end());
    return std::make_pair(clusters, edges);
  };
  return canon(a) == canon(b);
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ValidationReport validate_block_tree(const Graph& g, const BlockTree& bt) {
  ValidationReport report;
  const int n = g.num_nodes();
  const int l = bt.num_clusters();

  ValidationCheck partition{"partition", true, ""};
  std::vector<int> owner(n, -1);
  std::ostringstream pd;
  for (int c = 0; c < l; ++c) {
    for (NodeId v : bt.clusters[c]) {
      if (v < 0 || v >= n) {
        partition.passed = false;
        pd << "node " << v << " out of range; ";
      } else if (owner[v] != -1) {
        partition.passed = false;
        pd << "node " << g.label(v) << " in clusters " << owner[v] << " and " << c << "; ";
      } else {
        owner[v] = c;
      }
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    if (owner[v] == -1) {
      partition.passed = false;
      pd << "node " << g.label(v) << " uncovered; ";
    }
  }
  partition.detail = pd.str();
  report.checks.push_back(partition);

  ValidationCheck tree{"tree", true, ""};
  std::ostringstream td;
  std::vector<std::vector<int>> adj(l);
  if (static_cast<int>(bt.edges.size()) != l - 1) {
    tree.passed = false;
    td << bt.edges.size() << " edges for " << l << " clusters; ";
  }
  std::vector<int> uf(l);
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (auto [a, b] : bt.edges) {
    if (a < 0 || b < 0 || a >= l || b >= l) {
      tree.passed = false;
      td << "edge (" << a << "," << b << ") out of range; ";
      continue;
    }
    adj[a].push_back(b);
    adj[b].push_back(a);
    const int ra = find(a), rb = find(b);
    if (ra == rb) {
      tree.passed = false;
      td << "edge (" << a << "," << b << ") closes a cycle; ";
    } else {
      uf[ra] = rb;
    }
  }
  for (int c = 1; c < l; ++c) {
    if (find(c) != find(0)) {
      tree.passed = false;
      td << "cluster " << c << " disconnected; ";
    }
  }
  tree.detail = td.str();
  report.checks.push_back(tree);

  ValidationCheck scale{"scale", true, ""};
  std::ostringstream sd;
  if (static_cast<int>(bt.scale.size()) != l || static_cast<int>(bt.parent.size()) != l) {
    scale.passed = false;
    sd << "scale/parent arrays sized wrong; ";
  } else {
    if (l > 0 && (bt.scale[0] != 0 || bt.parent[0] != -1)) {
      scale.passed = false;
      sd << "root scale/parent wrong; ";
    }
    for (auto [p, c] : bt.edges) {
      if (p < 0 || c < 0 || p >= l || c >= l) continue;
      if (bt.parent[c] != p || bt.scale[c] != bt.scale[p] + 1) {
        scale.passed = false;
        sd << "edge (" << p << "," << c << ") inconsistent with parent/scale; ";
      }
    }
  }
  scale.detail = sd.str();
  report.checks.push_back(scale);

  ValidationCheck coverage{"edge_coverage", true, ""};
  std::ostringstream cd;
  std::set<std::pair<int, int>> tree_pairs;
  for (auto [a, b] : bt.edges) tree_pairs.emplace(std::min(a, b), std::max(a, b));
  for (const Edge& e : g.edges()) {
    const int cu = owner[e.u], cv = owner[e.v];
    if (cu < 0 || cv < 0 || cu == cv) continue;
    if (!tree_pairs.count({std::min(cu, cv), std::max(cu, cv)})) {
      coverage.passed = false;
      cd << "edge " << g.label(e.u) << "-" << g.label(e.v) << " joins non-adjacent clusters " << cu << "," << cv
         << "; ";
    }
  }
  coverage.detail = cd.str();
  report.checks.push_back(coverage);
  return report;
}

InferenceCost inference_cost(const BlockTree& bt, int domain_size) {
  if (domain_size < 2) throw DomainError("domain size must be >= 2");
  InferenceCost cost;
  if (bt.edges.empty()) {
    cost.exponent = bt.num_clusters() ? static_cast<int>(bt.clusters[0].size()) : 0;
  } else {
    for (auto [a, b] : bt.edges)
      cost.exponent = std::max(cost.exponent, static_cast<int>(bt.clusters[a].size() + bt.clusters[b].size()));
  }
  cost.log10_cost = cost.exponent * std::log10(static_cast<double>(domain_size));
  std::uint64_t value = 1;
  bool fits = true;
  for (int i = 0; i < cost.exponent && fits; ++i) {
    if (value > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(domain_size))
      fits = false;
    else
      value *= static_cast<std::uint64_t>(domain_size);
  }
  if (fits) cost.cost = value;
  return cost;
}

}  // namespace bt
