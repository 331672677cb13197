#pragma once

#include <span>
#include <vector>

#include "bt/discrete.hpp"

namespace bt::detail {

// Config index of a cluster (nodes sorted) from a full assignment.
std::size_t config_index(std::span<const int> domain_sizes, std::span<const NodeId> nodes, std::span<const int> x);

// Digits of a cluster config index, one per cluster node.
void decode_config(std::span<const int> domain_sizes, std::span<const NodeId> nodes, std::size_t index,
                   std::span<int> digits);

// Leaves-to-root messages; up[c] is indexed by the configs of parent(c).
std::vector<std::vector<double>> upward_messages(const EdgeFactorization& f, bool normalize);

void check_budget(const EdgeFactorization& f, double budget);

}  // namespace bt::detail
