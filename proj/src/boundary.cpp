#include <algorithm>
#include <cmath>

#include "bt/discrete.hpp"
#include "discrete_detail.hpp"

namespace bt {

namespace detail {

// Multiplies the root's first-child edge factor by prior(x_B) / Z(x_B), where
// Z(x_B) is the interior partition function given the boundary configuration.
void fold_boundary(EdgeFactorization& f, const DiscreteModel& m) {
  const BlockTree& bt = f.block_tree;
  const BoundarySpec& b = *m.boundary;
  if (bt.clusters[0] != b.nodes) throw DomainError("block-tree root must equal the boundary node set");
  if (bt.children[0].empty()) throw DomainError("boundary model needs at least one interior cluster");

  const auto up = upward_messages(f, true);
  const std::size_t rows = config_count(f.domain_sizes, bt.clusters[0]);
  std::vector<double> w(rows, 1.0);
  std::vector<int> digits(b.nodes.size());
  for (std::size_t r = 0; r < rows; ++r) {
    decode_config(f.domain_sizes, b.nodes, r, digits);
    double z = 1.0;
    for (int c : bt.children[0]) z *= up[c][r];
    if (!(z > 0.0)) throw NumericalError("interior partition function underflowed for a boundary configuration");
    double prior = 1.0;
    for (std::size_t i = 0; i < b.nodes.size(); ++i) prior *= b.priors[i][digits[i]];
    w[r] = prior / z;
  }
  const double mx = *std::max_element(w.begin(), w.end());

  const int first = bt.children[0].front();
  auto it = std::find_if(f.factors.begin(), f.factors.end(), [&](const EdgeFactor& e) { return e.child == first; });
  EdgeFactor& e = *it;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < e.cols; ++j) e.table[r * e.cols + j] *= w[r] / mx;
  e.log_scale += std::log(mx);
}

}  // namespace detail

BoundaryBlockTree boundary_block_tree(const DiscreteModel& m) {
  if (!m.boundary) throw DomainError("model has no boundary");
  m.validate();
  const Graph sg = m.structure_graph();
  BoundaryBlockTree out;
  out.block_tree = construct_block_tree(sg, m.boundary->nodes);
  out.factorization = map_potentials(m, out.block_tree);
  detail::fold_boundary(out.factorization, m);
  return out;
}

}  // namespace bt
