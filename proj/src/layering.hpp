#pragma once

#include <span>
#include <vector>

#include "bt/graph.hpp"

namespace bt::detail {

// Scratch state for one block-tree construction. Reused across candidate
// roots so searches allocate once per thread.
struct LayeringWorkspace {
  std::vector<int> layer;
  std::vector<NodeId> order;            // nodes grouped by layer, BFS order
  std::vector<std::size_t> layer_start; // offsets into order, one past the end at back()
  std::vector<NodeId> uf;
  std::vector<int> size;
  std::vector<NodeId> anchor;
  std::vector<unsigned> anchor_stamp;
  unsigned stamp = 0;

  void resize(int n);
  NodeId find(NodeId x);
  void unite(NodeId a, NodeId b);
};

// Forward and backward passes; afterwards find(v) identifies v's cluster.
// Returns the number of layers.
int run_layering(const Graph& g, std::span<const NodeId> root, LayeringWorkspace& ws);

int layering_width(const Graph& g, std::span<const NodeId> root, LayeringWorkspace& ws);

}  // namespace bt::detail
