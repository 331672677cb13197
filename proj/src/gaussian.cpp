#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "bt/gaussian.hpp"

namespace bt {

namespace {

std::vector<Eigen::Index> indices(const NodeSet& c) { return {c.begin(), c.end()}; }

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(what + " is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace

GaussianModel::GaussianModel(SparseMatrix J, std::vector<std::string> labels) : J_(std::move(J)) {
  if (J_.rows() != J_.cols()) throw DomainError("information matrix must be square");
  J_.makeCompressed();
  const SparseMatrix diff = SparseMatrix(J_.transpose()) - J_;
  for (int j = 0; j < diff.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(diff, j); it; ++it)
      if (std::abs(it.value()) > 1e-12) throw DomainError("information matrix is not symmetric");
  std::vector<Edge> edges;
  for (int j = 0; j < J_.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(J_, j); it; ++it)
      if (it.row() < j && it.value() != 0.0) edges.push_back({static_cast<NodeId>(it.row()), j});
  graph_ = Graph::from_edges(static_cast<int>(J_.rows()), edges, std::nullopt, std::move(labels));
}

const Eigen::MatrixXd& GaussianModel::covariance() const {
  if (!sigma_) sigma_ = spd_inverse(Eigen::MatrixXd(J_), "information matrix");
  return *sigma_;
}

void Observation::validate(int n) const {
  if (y.size() != n || h.size() != n || r.size() != n) throw DomainError("observation dimensions do not match model");
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (!(r[i] > 0.0)) throw DomainError("noise variances must be strictly positive");
}

BlockCovariance::BlockCovariance(const GaussianModel& m, const BlockTree& bt) : bt_(bt), sigma_(m.covariance()) {
  if (bt.num_nodes() != m.size()) throw DomainError("block-tree and model sizes differ");
}

Eigen::MatrixXd BlockCovariance::block(int i, int j) const {
  return sigma_(indices(bt_.clusters[i]), indices(bt_.clusters[j]));
}

StateSpaceRep state_space(const BlockCovariance& bc) {
  const BlockTree& bt = bc.block_tree();
  const int l = bt.num_clusters();
  StateSpaceRep ss;
  ss.A.resize(l);
  ss.Qu.resize(l);
  ss.F.resize(l);
  ss.Qw.resize(l);
  for (int k = 1; k < l; ++k) {
    const int p = bt.parent[k];
    const Eigen::MatrixXd Skk = bc.block(k, k);
    const Eigen::MatrixXd Spp = bc.block(p, p);
    const Eigen::MatrixXd Skp = bc.block(k, p);
    Eigen::LLT<Eigen::MatrixXd> lp(Spp), lk(Skk);
    if (lp.info() != Eigen::Success)
      throw NumericalError("covariance block of cluster " + std::to_string(p) + " is singular");
    if (lk.info() != Eigen::Success)
      throw NumericalError("covariance block of cluster " + std::to_string(k) + " is singular");
    ss.A[k] = lp.solve(Skp.transpose()).transpose();
    ss.Qu[k] = Skk - ss.A[k] * Skp.transpose();
    ss.F[k] = lk.solve(Skp).transpose();
    ss.Qw[k] = Spp - ss.F[k] * Skp;
  }
  return ss;
}

StateSpaceResiduals state_space_residuals(const BlockCovariance& bc, const StateSpaceRep& ss) {
  const BlockTree& bt = bc.block_tree();
  const int l = bt.num_clusters();
  StateSpaceResiduals r;
  r.min_qu_eigenvalue = std::numeric_limits<double>::infinity();
  r.min_qw_eigenvalue = std::numeric_limits<double>::infinity();
  for (int k = 1; k < l; ++k) {
    const int p = bt.parent[k];
    const Eigen::MatrixXd Skk = bc.block(k, k);
    const Eigen::MatrixXd Spp = bc.block(p, p);
    const Eigen::MatrixXd Skp = bc.block(k, p);
    r.orthogonality = std::max(r.orthogonality, max_abs(Skp - ss.A[k] * Spp));
    r.reconstruction =
        std::max(r.reconstruction, max_abs(ss.A[k] * Spp * ss.A[k].transpose() + ss.Qu[k] - Skk));
    r.backward_orthogonality = std::max(r.backward_orthogonality, max_abs(Skp.transpose() - ss.F[k] * Skk));
    r.backward_reconstruction =
        std::max(r.backward_reconstruction, max_abs(ss.F[k] * Skk * ss.F[k].transpose() + ss.Qw[k] - Spp));
    r.min_qu_eigenvalue = std::min(r.min_qu_eigenvalue, min_eigenvalue(ss.Qu[k]));
    r.min_qw_eigenvalue = std::min(r.min_qw_eigenvalue, min_eigenvalue(ss.Qw[k]));
  }
  // u_k = x_k - A_k x_parent(k) must be uncorrelated across clusters.
  for (int k = 1; k < l; ++k) {
    const int pk = bt.parent[k];
    for (int m = k + 1; m < l; ++m) {
      const int pm = bt.parent[m];
      const Eigen::MatrixXd c = bc.block(k, m) - ss.A[k] * bc.block(pk, m) - bc.block(k, pm) * ss.A[m].transpose() +
                                ss.A[k] * bc.block(pk, pm) * ss.A[m].transpose();
      r.whiteness = std::max(r.whiteness, max_abs(c));
    }
  }
  if (l == 1) r.min_qu_eigenvalue = r.min_qw_eigenvalue = 0.0;
  return r;
}

InformationForm information_form(const GaussianModel& m, const Observation& obs) {
  obs.validate(m.size());
  InformationForm f;
  const Eigen::VectorXd gain = obs.h.cwiseProduct(obs.r.cwiseInverse());
  f.b = gain.cwiseProduct(obs.y);
  std::vector<Eigen::Triplet<double>> diag;
  for (int i = 0; i < m.size(); ++i) diag.emplace_back(i, i, gain[i] * obs.h[i]);
  SparseMatrix D(m.size(), m.size());
  D.setFromTriplets(diag.begin(), diag.end());
  f.V = m.information() + D;
  f.V.makeCompressed();
  return f;
}

Estimate exact_estimate(const GaussianModel& m, const Observation& obs, const std::optional<BlockTree>& bt,
                        Execution exec) {
  const InformationForm f = information_form(m, obs);
  Estimate e;
  if (bt) {
    BlockTreeSolver solver(f.V, *bt, OffTreeEntries::reject, exec);
    e.xhat = solver.solve(f.b);
    e.phat_diag = solver.inverse_diagonal();
    return e;
  }
  Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(f.V)};
  if (llt.info() != Eigen::Success) throw NumericalError("information-form matrix is not positive definite");
  e.xhat = llt.solve(f.b);
  e.phat_diag = llt.solve(Eigen::MatrixXd::Identity(m.size(), m.size())).diagonal();
  return e;
}

Eigen::VectorXd covariance_form_estimate(const GaussianModel& m, const Observation& obs) {
  obs.validate(m.size());
  const Eigen::MatrixXd& S = m.covariance();
  const Eigen::MatrixXd SH = S * obs.h.asDiagonal();
  Eigen::MatrixXd inner = obs.h.asDiagonal() * SH;
  inner.diagonal() += obs.r;
  Eigen::LLT<Eigen::MatrixXd> llt(inner);
  if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance is not positive definite");
  return SH * llt.solve(obs.y);
}

}  // namespace bt
