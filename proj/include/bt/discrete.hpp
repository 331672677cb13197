#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bt/block_tree.hpp"
#include "bt/common.hpp"
#include "bt/graph.hpp"

namespace bt {

// Table over the joint configurations of `clique` (sorted ascending node ids),
// row-major with the last member varying fastest.
struct Potential {
  NodeSet clique;
  std::vector<double> table;
};

// Boundary nodes feed the interior through directed arcs (boundary -> interior).
// Each boundary node carries a prior table.
struct BoundarySpec {
  NodeSet nodes;
  std::vector<std::pair<NodeId, NodeId>> arcs;
  std::vector<std::vector<double>> priors;  // aligned with nodes
};

struct DiscreteModel {
  Graph graph;                      // undirected edges only; arcs live in boundary
  std::vector<int> domain_sizes;    // per node, >= 2
  std::vector<Potential> potentials;
  std::optional<BoundarySpec> boundary;

  // Throws DomainError on any invariant violation.
  void validate() const;
  // graph plus arc edges plus co-parent marriages; equals graph without a boundary.
  Graph structure_graph() const;
};

// Product of the potentials assigned to one tree edge, as a rows x cols table
// over (parent cluster config, child cluster config). The true factor value is
// exp(log_scale) * table[row * cols + col].
struct EdgeFactor {
  int parent = -1;
  int child = -1;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> table;
  double log_scale = 0.0;
};

struct EdgeFactorization {
  BlockTree block_tree;
  std::vector<int> domain_sizes;
  std::vector<EdgeFactor> factors;   // aligned with block_tree.edges
  std::vector<int> assignment;       // potential index -> edge index (-1: single-cluster tree)
  // Only used when the block-tree has a single cluster.
  std::vector<double> root_table;
  double root_log_scale = 0.0;

  // log of the product of all factors at a full joint configuration.
  double log_value(std::span<const int> x) const;
};

struct MarginalSet {
  std::vector<std::vector<double>> node;     // per node distribution
  std::vector<std::vector<double>> cluster;  // per cluster joint (empty for brute force)
  std::vector<std::vector<double>> edge;     // per tree edge joint, rows x cols (optional)
};

struct InferenceOptions {
  bool normalize_messages = true;
  double budget = 1e8;       // max table entries per edge
  bool edge_joints = false;
};

// Number of joint configurations of a sorted node set.
std::size_t config_count(std::span<const int> domain_sizes, std::span<const NodeId> nodes);

EdgeFactorization map_potentials(const DiscreteModel& m, const BlockTree& bt);
MarginalSet marginals_from_factorization(const EdgeFactorization& f, const InferenceOptions& opt = {});

// For models with a boundary the block-tree root must be the boundary set.
MarginalSet bt_marginals(const DiscreteModel& m, const BlockTree& bt, const InferenceOptions& opt = {});

inline constexpr std::size_t kBruteForceMaxStates = 20'000'000;
MarginalSet brute_force_marginals(const DiscreteModel& m, Execution exec = Execution::parallel,
                                  std::size_t max_states = kBruteForceMaxStates);

struct BoundaryBlockTree {
  BlockTree block_tree;
  EdgeFactorization factorization;  // priors and boundary normaliser folded into the root edge
};

BoundaryBlockTree boundary_block_tree(const DiscreteModel& m);

}  // namespace bt
