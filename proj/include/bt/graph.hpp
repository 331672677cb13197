#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bt/common.hpp"

namespace bt {

// Undirected edge, always stored with u < v.
struct Edge {
  NodeId u;
  NodeId v;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Immutable undirected graph over dense ids 0..n-1 with CSR adjacency.
// Edges are sorted lexicographically; adjacency lists are sorted ascending.
// An unweighted graph reports weight 1 for every edge.
class Graph {
 public:
  class Builder;

  Graph() = default;

  static Graph from_edges(int n, std::span<const Edge> edges,
                          std::optional<std::vector<double>> weights = std::nullopt,
                          std::vector<std::string> labels = {});

  int num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }

  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
  }
  // Edge indices aligned with neighbors(v).
  std::span<const std::size_t> incident_edges(NodeId v) const {
    return {adj_edge_.data() + offsets_[v], adj_edge_.data() + offsets_[v + 1]};
  }
  int degree(NodeId v) const { return static_cast<int>(offsets_[v + 1] - offsets_[v]); }

  std::optional<std::size_t> edge_index(NodeId a, NodeId b) const;
  bool has_edge(NodeId a, NodeId b) const { return edge_index(a, b).has_value(); }

  bool has_weights() const { return !weights_.empty(); }
  double weight(std::size_t edge) const { return weights_.empty() ? 1.0 : weights_[edge]; }
  // All-ones when the graph is unweighted.
  std::vector<double> weights() const;

  const std::string& label(NodeId v) const { return labels_[v]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<NodeId> find_label(std::string_view label) const;

  bool contains(NodeId v) const { return v >= 0 && v < n_; }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> weights_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adj_;
  std::vector<std::size_t> adj_edge_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> label_index_;
};

// Incremental construction keyed by labels; ids are assigned in first-appearance order.
class Graph::Builder {
 public:
  NodeId add_node(const std::string& label);
  // Duplicate edges collapse; the last weight given wins. Self-loops throw DomainError.
  void add_edge(const std::string& a, const std::string& b, std::optional<double> weight = {});
  void add_edge(NodeId a, NodeId b, std::optional<double> weight = {});
  int num_nodes() const { return static_cast<int>(labels_.size()); }
  Graph build() const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::pair<Edge, std::optional<double>>> edges_;
  std::unordered_map<std::uint64_t, std::size_t> edge_slot_;
};

Graph parse_graph(std::string_view text);
Graph load_graph(const std::string& path);
std::string serialize_graph(const Graph& g);

NodeSet neighbors_of_set(const Graph& g, std::span<const NodeId> s);
bool is_connected(const Graph& g);

// Convenience generators; labels are 1-based indices.
Graph make_path(int n);
Graph make_grid(int rows, int cols);
Graph make_complete(int n);
// side x side grid plus `hubs` extra nodes joined to every grid node and to each other.
Graph make_hub_grid(int side, int hubs);

std::vector<NodeId> labels_to_ids(const Graph& g, std::span<const std::string> labels);
std::string format_label_set(const Graph& g, std::span<const NodeId> nodes);

}  // namespace bt
