#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bt/block_elimination.hpp"
#include "bt/block_tree.hpp"
#include "bt/graph.hpp"

namespace bt {

// Zero-mean Gaussian model x ~ N(0, J^{-1}); the graph is the off-diagonal
// nonzero pattern of J.
class GaussianModel {
 public:
  GaussianModel() = default;
  // Throws DomainError if J is not square or not symmetric within 1e-12.
  explicit GaussianModel(SparseMatrix J, std::vector<std::string> labels = {});

  const SparseMatrix& information() const { return J_; }
  const Graph& graph() const { return graph_; }
  int size() const { return static_cast<int>(J_.rows()); }
  // Dense J^{-1}; computed on first use. Throws NumericalError if J is not PD.
  const Eigen::MatrixXd& covariance() const;

 private:
  SparseMatrix J_;
  Graph graph_;
  mutable std::optional<Eigen::MatrixXd> sigma_;
};

// y = H x + n with diagonal H and diagonal noise covariance R.
struct Observation {
  Eigen::VectorXd y;
  Eigen::VectorXd h;
  Eigen::VectorXd r;

  void validate(int n) const;
};

// Covariance blocks between clusters, in canonical cluster node order.
class BlockCovariance {
 public:
  BlockCovariance(const GaussianModel& m, const BlockTree& bt);

  const BlockTree& block_tree() const { return bt_; }
  Eigen::MatrixXd block(int i, int j) const;

 private:
  BlockTree bt_;
  Eigen::MatrixXd sigma_;
};

// Per-cluster matrices of the forward (root to leaves) and backward linear
// representations. Entries for the root are empty.
struct StateSpaceRep {
  std::vector<Eigen::MatrixXd> A;   // |C_k| x |C_parent|
  std::vector<Eigen::MatrixXd> Qu;  // |C_k| x |C_k|
  std::vector<Eigen::MatrixXd> F;   // |C_parent| x |C_k|
  std::vector<Eigen::MatrixXd> Qw;  // |C_parent| x |C_parent|
};

StateSpaceRep state_space(const BlockCovariance& bc);

// Largest absolute entry of each identity that the representation must satisfy.
struct StateSpaceResiduals {
  double orthogonality = 0.0;     // Sigma(k,p) - A_k Sigma(p,p)
  double reconstruction = 0.0;    // A_k Sigma(p,p) A_k^T + Qu_k - Sigma(k,k)
  double whiteness = 0.0;         // E[u_k u_m^T] for k != m
  double backward_orthogonality = 0.0;  // Sigma(p,k) - F_k Sigma(k,k)
  double backward_reconstruction = 0.0; // F_k Sigma(k,k) F_k^T + Qw_k - Sigma(p,p)
  double min_qu_eigenvalue = 0.0;
  double min_qw_eigenvalue = 0.0;
};

StateSpaceResiduals state_space_residuals(const BlockCovariance& bc, const StateSpaceRep& ss);

struct InformationForm {
  SparseMatrix V;
  Eigen::VectorXd b;
};

InformationForm information_form(const GaussianModel& m, const Observation& obs);

struct Estimate {
  Eigen::VectorXd xhat;
  Eigen::VectorXd phat_diag;
};

// Solves the information form by block elimination over `bt` when given,
// otherwise by a dense Cholesky factorization.
Estimate exact_estimate(const GaussianModel& m, const Observation& obs,
                        const std::optional<BlockTree>& bt = std::nullopt, Execution exec = Execution::parallel);

// Sigma H^T (H Sigma H^T + R)^{-1} y with dense matrices. Intended for small n.
Eigen::VectorXd covariance_form_estimate(const GaussianModel& m, const Observation& obs);

}  // namespace bt
