#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bt/block_tree.hpp"
#include "bt/common.hpp"

namespace bt {

using SparseMatrix = Eigen::SparseMatrix<double>;

// What to do with entries of V that couple clusters which are not adjacent in
// the block-tree. `drop` solves with the block-tree part of V only, which is the
// splitting matrix V_S when the block-tree comes from a spanning subgraph.
enum class OffTreeEntries { reject, drop };

// Block Gaussian elimination of a symmetric positive definite V along a
// block-tree: leaves are eliminated first, then back-substitution runs from
// the root. Clusters at the same scale are processed in parallel.
class BlockTreeSolver {
 public:
  BlockTreeSolver(const SparseMatrix& V, const BlockTree& bt, OffTreeEntries off = OffTreeEntries::reject,
                  Execution exec = Execution::parallel);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  // Diagonal of V^{-1} restricted to the block-tree part of V.
  Eigen::VectorXd inverse_diagonal() const;

  const BlockTree& block_tree() const { return bt_; }

 private:
  BlockTree bt_;
  Execution exec_;
  std::vector<std::vector<int>> levels_;          // clusters grouped by scale
  std::vector<Eigen::LLT<Eigen::MatrixXd>> fact_; // Schur-complemented diagonal blocks
  std::vector<Eigen::MatrixXd> coupling_;         // V(C_k, C_parent)
  std::vector<Eigen::MatrixXd> gain_;             // fact_k^{-1} * coupling_k

  Eigen::MatrixXd gather(const Eigen::MatrixXd& b, int k) const;
};

}  // namespace bt
