#include <chrono>
#include <cmath>

#include "bt/approx_est.hpp"
#include "bt/spanning.hpp"

namespace bt {

SplitPair matrix_split(const SparseMatrix& V, std::span<const Edge> S) {
  const Eigen::Index n = V.rows();
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, V.coeff(i, i));
  for (const Edge& e : S) {
    if (e.u < 0 || e.v >= n) throw DomainError("subgraph edge outside matrix");
    const double a = V.coeff(e.u, e.v);
    const double b = V.coeff(e.v, e.u);
    if (a == 0.0 && b == 0.0) throw DomainError("subgraph edge is not an edge of the matrix graph");
    t.emplace_back(e.u, e.v, a);
    t.emplace_back(e.v, e.u, b);
  }
  SplitPair s;
  s.VS.resize(n, n);
  s.VS.setFromTriplets(t.begin(), t.end(), [](double, double b) { return b; });
  s.KS = s.VS - V;
  s.KS.prune(0.0);
  return s;
}

Graph matrix_graph(const SparseMatrix& V) {
  if (V.rows() != V.cols()) throw DomainError("matrix must be square");
  std::vector<Edge> edges;
  for (int j = 0; j < V.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(V, j); it; ++it)
      if (it.row() != j && it.value() != 0.0) edges.push_back(make_edge(static_cast<NodeId>(it.row()), j));
  return Graph::from_edges(static_cast<int>(V.rows()), edges);
}

std::vector<double> edge_values(const Graph& g, const SparseMatrix& V) {
  std::vector<double> out;
  out.reserve(g.num_edges());
  for (const Edge& e : g.edges()) out.push_back(V.coeff(e.u, e.v));
  return out;
}

std::vector<double> weights_from_residual(const Graph& g, std::span<const double> values, const Eigen::VectorXd& h_abs) {
  std::vector<double> w(g.num_edges());
  const auto& edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double a = std::abs(values[e]);
    if (a >= 1.0)
      throw DomainError("|V(u,v)| >= 1 on an edge; adaptive weights need a walk-summable, unit-diagonal model");
    w[e] = (h_abs[edges[e].u] + h_abs[edges[e].v]) * a / (1.0 - a);
  }
  return w;
}

std::vector<double> adaptive_weights(const Graph& g, const SparseMatrix& V, const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& x) {
  const Eigen::VectorXd h = b - V * x;
  return weights_from_residual(g, edge_values(g, V), h.cwiseAbs());
}

Strategy Strategy::parse(const std::string& text) {
  Strategy s;
  if (text == "tree") return s;
  if (text == "fixed-tree") {
    s.kind = Kind::fixed_tree;
    return s;
  }
  if (text.rfind("bt:", 0) == 0) {
    int B = 0;
    try {
      std::size_t used = 0;
      B = std::stoi(text.substr(3), &used);
      if (used != text.size() - 3) B = 0;
    } catch (const std::exception&) {
      B = 0;
    }
    if (B < 1) throw DomainError("bad block width in strategy '" + text + "'");
    s.kind = Kind::block_tree;
    s.width = B;
    return s;
  }
  throw DomainError("unknown strategy '" + text + "' (expected tree, fixed-tree or bt:B)");
}

std::string Strategy::name() const {
  switch (kind) {
    case Kind::fixed_tree:
      return "fixed-tree";
    case Kind::tree:
      return "tree";
    case Kind::block_tree:
      return "bt:" + std::to_string(width);
  }
  return "";
}

int IterationTrace::iterations_to(double ratio) const {
  for (std::size_t i = 0; i < residual.size(); ++i)
    if (residual[i] < ratio) return static_cast<int>(i);
  return -1;
}

namespace {

using Clock = std::chrono::steady_clock;

// Per-node magnitude of the residual: |h_u| for one right-hand side, the row
// 2-norm for several.
Eigen::VectorXd residual_magnitude(const Eigen::MatrixXd& h) {
  return h.cols() == 1 ? Eigen::VectorXd(h.col(0).cwiseAbs()) : Eigen::VectorXd(h.rowwise().norm());
}

IterationTrace run_iteration(const SparseMatrix& V, const Eigen::MatrixXd& b, const Strategy& strategy,
                             const IterationOptions& opt) {
  if (!(opt.tol > 0.0)) throw DomainError("tol must be positive");
  if (opt.max_iter < 1) throw DomainError("max_iter must be positive");
  if (strategy.refresh < 1) throw DomainError("refresh must be positive");
  const Eigen::Index n = V.rows();
  if (V.cols() != n || b.rows() != n) throw DomainError("dimension mismatch");

  const Graph g = matrix_graph(V);
  const std::vector<double> values = edge_values(g, V);
  const bool edgeless = g.num_edges() == 0;
  if (!edgeless && !is_connected(g))
    throw GraphError("graph not connected; decompose it into connected components first");

  std::optional<BlockTree> own_base;
  const BlockTree* base = opt.base;
  if (!edgeless && strategy.kind == Strategy::Kind::block_tree && strategy.width > 1 && !base) {
    own_base = default_block_tree(g);
    base = &*own_base;
  }

  IterationTrace tr;
  tr.x = Eigen::MatrixXd::Zero(n, b.cols());
  Eigen::MatrixXd h = b;
  const double h0 = h.squaredNorm();
  tr.residual.push_back(1.0);
  tr.subgraph.push_back("none");
  tr.wall_ms.push_back(0.0);
  const std::string kind = edgeless ? "diagonal" : strategy.name();

  if (h0 == 0.0) {
    tr.residual.push_back(0.0);
    tr.subgraph.push_back(kind);
    tr.wall_ms.push_back(0.0);
    tr.iterations = 1;
    tr.converged = true;
    return tr;
  }

  const Eigen::VectorXd diag = V.diagonal();
  std::optional<BlockTreeSolver> solver;
  const int width = strategy.kind == Strategy::Kind::block_tree ? strategy.width : 1;
  const double stop = opt.tol * opt.tol;

  for (int it = 1; it <= opt.max_iter; ++it) {
    const auto t0 = Clock::now();
    if (!edgeless) {
      bool rebuild = !solver.has_value();
      if (strategy.kind != Strategy::Kind::fixed_tree && (it - 1) % strategy.refresh == 0) rebuild = true;
      if (rebuild) {
        std::vector<double> w;
        if (strategy.kind == Strategy::Kind::fixed_tree)
          w = weights_from_residual(g, values, Eigen::VectorXd::Constant(n, 0.5));
        else
          w = weights_from_residual(g, values, residual_magnitude(h));
        const SpanningBlockTree sbt = spanning_block_tree(g, w, width, base);
        solver.emplace(V, sbt.block_tree, OffTreeEntries::drop, opt.exec);
      }
      tr.x += solver->solve(h);
    } else {
      tr.x += diag.cwiseInverse().asDiagonal() * h;
    }
    h = b - V * tr.x;
    const double ratio = h.squaredNorm() / h0;
    tr.residual.push_back(ratio);
    tr.subgraph.push_back(kind);
    tr.wall_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    tr.iterations = it;
    if (!std::isfinite(ratio)) throw NumericalError("iteration diverged");
    if (ratio <= stop) {
      tr.converged = true;
      break;
    }
  }
  return tr;
}

}  // namespace

IterationTrace iterate_estimate(const SparseMatrix& V, const Eigen::VectorXd& b, const Strategy& strategy,
                                const IterationOptions& opt) {
  return run_iteration(V, Eigen::MatrixXd(b), strategy, opt);
}

ErrorCovariance error_covariance_diag(const SparseMatrix& V, const Strategy& strategy, const IterationOptions& opt) {
  ErrorCovariance out;
  out.trace = run_iteration(V, Eigen::MatrixXd::Identity(V.rows(), V.rows()), strategy, opt);
  out.diag = out.trace.x.diagonal();
  return out;
}

}  // namespace bt
