#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bt/common.hpp"
#include "bt/graph.hpp"

namespace bt {

// Tree over disjoint node clusters. Cluster 0 is the root. In canonical form
// clusters are ordered by (scale, smallest node id) and each cluster's nodes
// are sorted, so every parent precedes its children.
struct BlockTree {
  std::vector<NodeSet> clusters;
  std::vector<std::pair<int, int>> edges;  // (parent, child)
  std::vector<int> parent;                 // -1 for the root
  std::vector<std::vector<int>> children;
  std::vector<int> scale;
  std::vector<int> cluster_of;             // node -> cluster index

  int num_clusters() const { return static_cast<int>(clusters.size()); }
  int num_nodes() const { return static_cast<int>(cluster_of.size()); }
  bool adjacent(int a, int b) const { return parent[a] == b || parent[b] == a; }
};

// Builds a canonical BlockTree from a cluster partition and undirected tree
// edges, rooted at clusters[root]. Throws DomainError if the edges do not form
// a spanning tree over the clusters or the clusters do not partition 0..n-1.
BlockTree make_block_tree(int n, std::vector<NodeSet> clusters, std::span<const std::pair<int, int>> tree_edges,
                          int root);

BlockTree construct_block_tree(const Graph& g, std::span<const NodeId> root_cluster);

int block_width(const BlockTree& bt);

// Root-independent structural equality: same partition and same cluster adjacency.
bool same_structure(const BlockTree& a, const BlockTree& b);

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool ok() const;
  const ValidationCheck* find(const std::string& name) const;
};

// Checks: "partition", "tree", "scale", "edge_coverage".
ValidationReport validate_block_tree(const Graph& g, const BlockTree& bt);

struct RootSearchResult {
  NodeSet root;
  int width = 0;
};

inline constexpr int kDefaultExhaustiveCap = 16;
inline constexpr int kDefaultHeuristicThreshold = 300;

RootSearchResult exhaustive_block_treewidth(const Graph& g, int cap = kDefaultExhaustiveCap,
                                            Execution exec = Execution::parallel);
RootSearchResult heuristic_root_search(const Graph& g, int size_threshold = kDefaultHeuristicThreshold,
                                       Execution exec = Execution::parallel);

// Block-width for each candidate root, evaluated independently per candidate.
std::vector<int> widths_for_roots(const Graph& g, std::span<const NodeSet> roots, Execution exec);

struct InferenceCost {
  int exponent = 0;                    // max over tree edges of |C_i| + |C_j|
  double log10_cost = 0.0;             // exponent * log10(K)
  std::optional<std::uint64_t> cost;   // K^exponent when it fits in 64 bits
};

InferenceCost inference_cost(const BlockTree& bt, int domain_size);

}  // namespace bt
