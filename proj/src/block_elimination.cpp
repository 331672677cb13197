#include <omp.h>

#include "bt/block_elimination.hpp"

namespace bt {

namespace {

template <typename F>
void for_each_in_level(const std::vector<int>& level, Execution exec, F&& body) {
  const auto count = static_cast<std::int64_t>(level.size());
  if (exec == Execution::serial || count < 2) {
    for (std::int64_t i = 0; i < count; ++i) body(level[i]);
    return;
  }
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < count; ++i) body(level[i]);
}

}  // namespace

BlockTreeSolver::BlockTreeSolver(const SparseMatrix& V, const BlockTree& bt, OffTreeEntries off, Execution exec)
    : bt_(bt), exec_(exec) {
  const int n = bt.num_nodes();
  const int l = bt.num_clusters();
  if (V.rows() != n || V.cols() != n) throw DomainError("matrix size does not match block-tree");

  std::vector<int> pos(n);
  for (const auto& c : bt.clusters)
    for (std::size_t i = 0; i < c.size(); ++i) pos[c[i]] = static_cast<int>(i);

  std::vector<Eigen::MatrixXd> diag(l);
  coupling_.resize(l);
  gain_.resize(l);
  fact_.resize(l);
  for (int k = 0; k < l; ++k) {
    const auto sz = static_cast<Eigen::Index>(bt.clusters[k].size());
    diag[k] = Eigen::MatrixXd::Zero(sz, sz);
    if (k != 0)
      coupling_[k] = Eigen::MatrixXd::Zero(sz, static_cast<Eigen::Index>(bt.clusters[bt.parent[k]].size()));
  }
  for (int j = 0; j < V.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(V, j); it; ++it) {
      const auto i = static_cast<int>(it.row());
      const int ci = bt.cluster_of[i];
      const int cj = bt.cluster_of[j];
      if (ci == cj)
        diag[ci](pos[i], pos[j]) = it.value();
      else if (bt.parent[ci] == cj)
        coupling_[ci](pos[i], pos[j]) = it.value();
      else if (bt.parent[cj] == ci)
        coupling_[cj](pos[j], pos[i]) = it.value();
      else if (off == OffTreeEntries::reject && it.value() != 0.0)
        throw DomainError("matrix couples clusters that are not adjacent in the block-tree");
    }
  }

  int max_scale = 0;
  for (int s : bt.scale) max_scale = std::max(max_scale, s);
  levels_.assign(max_scale + 1, {});
  for (int k = 0; k < l; ++k) levels_[bt.scale[k]].push_back(k);

  // Each cluster absorbs its (already factored) children, then factors itself.
  std::vector<char> failed(l, 0);
  for (int s = max_scale; s >= 0; --s) {
    for_each_in_level(levels_[s], exec, [&](int k) {
      for (int c : bt_.children[k]) diag[k].noalias() -= coupling_[c].transpose() * gain_[c];
      fact_[k].compute(diag[k]);
      if (fact_[k].info() != Eigen::Success) {
        failed[k] = 1;
        return;
      }
      if (k != 0) gain_[k] = fact_[k].solve(coupling_[k]);
    });
    for (int k : levels_[s])
      if (failed[k])
        throw NumericalError("matrix is not positive definite (elimination failed at cluster " + std::to_string(k) +
                             ")");
  }
}

Eigen::MatrixXd BlockTreeSolver::gather(const Eigen::MatrixXd& b, int k) const {
  const auto& c = bt_.clusters[k];
  Eigen::MatrixXd out(static_cast<Eigen::Index>(c.size()), b.cols());
  for (std::size_t i = 0; i < c.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = b.row(c[i]);
  return out;
}

Eigen::MatrixXd BlockTreeSolver::solve(const Eigen::MatrixXd& b) const {
  const int l = bt_.num_clusters();
  if (b.rows() != bt_.num_nodes()) throw DomainError("right-hand side has wrong length");
  std::vector<Eigen::MatrixXd> z(l);
  const int max_scale = static_cast<int>(levels_.size()) - 1;
  for (int s = max_scale; s >= 0; --s) {
    for_each_in_level(levels_[s], exec_, [&](int k) {
      Eigen::MatrixXd r = gather(b, k);
      for (int c : bt_.children[k]) r.noalias() -= coupling_[c].transpose() * z[c];
      z[k] = fact_[k].solve(r);
    });
  }
  for (int s = 1; s <= max_scale; ++s)
    for_each_in_level(levels_[s], exec_, [&](int k) { z[k].noalias() -= gain_[k] * z[bt_.parent[k]]; });

  Eigen::MatrixXd x(b.rows(), b.cols());
  for (int k = 0; k < l; ++k) {
    const auto& c = bt_.clusters[k];
    for (std::size_t i = 0; i < c.size(); ++i) x.row(c[i]) = z[k].row(static_cast<Eigen::Index>(i));
  }
  return x;
}

Eigen::VectorXd BlockTreeSolver::solve(const Eigen::VectorXd& b) const {
  return solve(Eigen::MatrixXd(b)).col(0);
}

Eigen::VectorXd BlockTreeSolver::inverse_diagonal() const {
  const int l = bt_.num_clusters();
  std::vector<Eigen::MatrixXd> P(l);
  for (std::size_t s = 0; s < levels_.size(); ++s) {
    for_each_in_level(levels_[s], exec_, [&](int k) {
      const auto sz = static_cast<Eigen::Index>(bt_.clusters[k].size());
      P[k] = fact_[k].solve(Eigen::MatrixXd::Identity(sz, sz));
      if (k != 0) P[k].noalias() += gain_[k] * P[bt_.parent[k]] * gain_[k].transpose();
    });
  }
  Eigen::VectorXd d(bt_.num_nodes());
  for (int k = 0; k < l; ++k) {
    const auto& c = bt_.clusters[k];
    for (std::size_t i = 0; i < c.size(); ++i) d[c[i]] = P[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  }
  return d;
}

}  // namespace bt
