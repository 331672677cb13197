#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bt/block_elimination.hpp"
#include "bt/block_tree.hpp"
#include "bt/gaussian.hpp"
#include "bt/graph.hpp"

namespace bt {

// V = V_S - K_S where V_S keeps the diagonal of V and the entries on the edges of S.
struct SplitPair {
  SparseMatrix VS;
  SparseMatrix KS;
};

// Throws DomainError if an edge of S is not a nonzero of V.
SplitPair matrix_split(const SparseMatrix& V, std::span<const Edge> S);

// Graph of the off-diagonal nonzero pattern of a square matrix.
Graph matrix_graph(const SparseMatrix& V);

// V(u, v) for every edge of g, aligned with g.edges().
std::vector<double> edge_values(const Graph& g, const SparseMatrix& V);

// (|h_u| + |h_v|) |V(u,v)| / (1 - |V(u,v)|) per edge. `h_abs` holds |h| per node.
// Throws DomainError if some |V(u,v)| >= 1.
std::vector<double> weights_from_residual(const Graph& g, std::span<const double> values, const Eigen::VectorXd& h_abs);

// Same with h = b - V x.
std::vector<double> adaptive_weights(const Graph& g, const SparseMatrix& V, const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& x);

struct Strategy {
  enum class Kind { fixed_tree, tree, block_tree };
  Kind kind = Kind::tree;
  int width = 1;     // B; 1 for tree strategies
  int refresh = 1;   // iterations between subgraph updates (adaptive kinds)

  // "fixed-tree", "tree" or "bt:B".
  static Strategy parse(const std::string& text);
  std::string name() const;
};

struct IterationOptions {
  double tol = 1e-6;
  int max_iter = 2000;
  Execution exec = Execution::parallel;
  // Block-tree of the full graph used for splitting; computed once when absent.
  const BlockTree* base = nullptr;
};

// Row i describes the state after iteration i; row 0 is the initial guess.
struct IterationTrace {
  std::vector<double> residual;        // ||h_i||^2 / ||h_0||^2
  std::vector<std::string> subgraph;   // subgraph kind used in iteration i
  std::vector<double> wall_ms;
  Eigen::MatrixXd x;
  bool converged = false;
  int iterations = 0;

  // First iteration whose residual ratio is below `ratio`, or -1.
  int iterations_to(double ratio) const;
};

// Stationary iteration V_S x_k = K_S x_{k-1} + b from x_0 = 0, carried out as
// x_k = x_{k-1} + V_S^{-1} (b - V x_{k-1}). Converged once ||h|| <= tol ||h_0||.
IterationTrace iterate_estimate(const SparseMatrix& V, const Eigen::VectorXd& b, const Strategy& strategy,
                                const IterationOptions& opt = {});

// Solves V P = I with all columns iterated together; adaptive weights use the
// per-node row norms of the residual matrix.
struct ErrorCovariance {
  Eigen::VectorXd diag;
  IterationTrace trace;
};

ErrorCovariance error_covariance_diag(const SparseMatrix& V, const Strategy& strategy,
                                      const IterationOptions& opt = {});

struct GeneratorSpec {
  Graph graph;
  std::uint64_t seed = 0;
  double target_rho = 0.99;
  double noise_variance = 10.0;
};

struct GeneratedModel {
  GaussianModel model;
  Observation obs;
  Eigen::VectorXd x;       // the sample behind y
  double raw_rho = 0.0;    // spectral radius of |S| before rescaling
  double scale = 1.0;      // factor applied to S
};

GeneratedModel generate_model(const GeneratorSpec& spec);

// Largest eigenvalue of a nonnegative symmetric matrix by power iteration on I + A.
double spectral_radius(const SparseMatrix& A, double tol = 1e-10, int max_iter = 100000);

}  // namespace bt
