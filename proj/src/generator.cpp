#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>

#include "bt/approx_est.hpp"

namespace bt {

double spectral_radius(const SparseMatrix& A, double tol, int max_iter) {
  const Eigen::Index n = A.rows();
  if (n == 0) return 0.0;
  // The shift by I keeps bipartite graphs (eigenvalues +-rho) from oscillating.
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = A * v + v;
    lambda = v.dot(w);
    const double resid = (w - lambda * v).norm();
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (resid <= tol * lambda) break;
  }
  return lambda - 1.0;
}

GeneratedModel generate_model(const GeneratorSpec& spec) {
  const Graph& g = spec.graph;
  const int n = g.num_nodes();
  if (!(spec.target_rho > 0.0 && spec.target_rho < 1.0)) throw DomainError("target_rho must lie in (0, 1)");
  if (!(spec.noise_variance > 0.0)) throw DomainError("noise variance must be positive");
  if (!is_connected(g)) throw GraphError("graph not connected; decompose it into connected components first");
  if (g.num_edges() == 0) throw DomainError("graph has no edges; spectral radius is zero");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<double> s(g.num_edges());
  for (double& v : s) v = uniform(rng);

  std::vector<Eigen::Triplet<double>> abs_t;
  for (std::size_t e = 0; e < s.size(); ++e) {
    abs_t.emplace_back(g.edges()[e].u, g.edges()[e].v, std::abs(s[e]));
    abs_t.emplace_back(g.edges()[e].v, g.edges()[e].u, std::abs(s[e]));
  }
  SparseMatrix abs_s(n, n);
  abs_s.setFromTriplets(abs_t.begin(), abs_t.end());

  GeneratedModel out;
  out.raw_rho = spectral_radius(abs_s);
  if (!(out.raw_rho > 0.0)) throw DomainError("spectral radius of |S| is zero");
  out.scale = spec.target_rho / out.raw_rho;

  std::vector<Eigen::Triplet<double>> jt;
  for (int i = 0; i < n; ++i) jt.emplace_back(i, i, 1.0);
  for (std::size_t e = 0; e < s.size(); ++e) {
    const double v = -out.scale * s[e];
    jt.emplace_back(g.edges()[e].u, g.edges()[e].v, v);
    jt.emplace_back(g.edges()[e].v, g.edges()[e].u, v);
  }
  SparseMatrix J(n, n);
  J.setFromTriplets(jt.begin(), jt.end());

  // x = P^{-1} U^{-1} z with P J P^T = U^T U gives Cov(x) = J^{-1}.
  Eigen::SimplicialLLT<SparseMatrix> llt(J);
  if (llt.info() != Eigen::Success) throw NumericalError("generated information matrix is not positive definite");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = normal(rng);
  out.x = llt.permutationPinv() * Eigen::VectorXd(llt.matrixU().solve(z));

  const double sd = std::sqrt(spec.noise_variance);
  out.obs.y.resize(n);
  for (int i = 0; i < n; ++i) out.obs.y[i] = out.x[i] + sd * normal(rng);
  out.obs.h = Eigen::VectorXd::Ones(n);
  out.obs.r = Eigen::VectorXd::Constant(n, spec.noise_variance);
  out.model = GaussianModel(std::move(J), g.labels());
  return out;
}

}  // namespace bt
