#pragma once

#include <span>
#include <utility>
#include <vector>

#include "bt/block_tree.hpp"
#include "bt/graph.hpp"

namespace bt {

// Edge weights are always aligned with g.edges().

// Splits every cluster of `bt` larger than B into clusters of size <= B using
// the greedy eta-weight rule. Clusters are processed root first.
std::vector<NodeSet> split_clusters(const Graph& g, const BlockTree& bt, std::span<const double> w, int B);

// Weighted graph over clusters; edges sorted by (i, j) with i < j.
struct ClusterGraph {
  int num_clusters = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> weights;
};

ClusterGraph cluster_graph_weights(const Graph& g, std::span<const NodeSet> clusters, std::span<const double> w);

// Maximum-weight spanning tree (Kruskal). Ties break by smaller (i, j).
// Throws GraphError if the cluster graph is disconnected.
std::vector<std::pair<int, int>> mwst(const ClusterGraph& cg);

struct SpanningBlockTree {
  BlockTree block_tree;
  std::vector<std::size_t> retained_edges;  // indices into g.edges(), ascending
  double total_weight = 0.0;
  double dropped_weight = 0.0;
};

// `base` is the block-tree of the full graph to split; when absent it is
// built from heuristic_root_search. It does not depend on the weights, so
// callers running many weightings of one graph should compute it once.
SpanningBlockTree spanning_block_tree(const Graph& g, std::span<const double> w, int B,
                                      const BlockTree* base = nullptr);

BlockTree default_block_tree(const Graph& g);

}  // namespace bt
