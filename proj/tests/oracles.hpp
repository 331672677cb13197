#pragma once

// Independent reference implementations and random generators for tests.
// Nothing here calls the library's algorithms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bt/discrete.hpp"
#include "bt/graph.hpp"

namespace oracle {

using bt::Edge;
using bt::Graph;
using bt::NodeId;

inline std::string fixture(const std::string& name) { return std::string(BT_FIXTURE_DIR) + "/" + name; }

// Random connected graph: random spanning tree plus extra edges.
inline Graph random_connected_graph(std::mt19937_64& rng, int n, double extra_prob) {
  std::vector<Edge> edges;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    edges.push_back(bt::make_edge(perm[i], perm[pick(rng)]));
  }
  std::bernoulli_distribution coin(extra_prob);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (coin(rng)) edges.push_back({a, b});
  return Graph::from_edges(n, edges);
}

inline std::vector<double> random_weights(std::mt19937_64& rng, std::size_t m, double lo = 0.1, double hi = 5.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> w(m);
  for (double& x : w) x = u(rng);
  return w;
}

// Pairwise model with one potential per edge plus a unary per node.
inline bt::DiscreteModel random_pairwise_model(std::mt19937_64& rng, const Graph& g, int max_domain = 2) {
  bt::DiscreteModel m;
  m.graph = g;
  std::uniform_int_distribution<int> dom(2, max_domain);
  for (int v = 0; v < g.num_nodes(); ++v) m.domain_sizes.push_back(dom(rng));
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (const Edge& e : g.edges()) {
    bt::Potential p{{e.u, e.v}, {}};
    p.table.resize(static_cast<std::size_t>(m.domain_sizes[e.u] * m.domain_sizes[e.v]));
    for (double& x : p.table) x = u(rng);
    m.potentials.push_back(p);
  }
  for (int v = 0; v < g.num_nodes(); ++v) {
    bt::Potential p{{v}, std::vector<double>(m.domain_sizes[v])};
    for (double& x : p.table) x = u(rng);
    m.potentials.push_back(p);
  }
  return m;
}

// Plain recursive enumeration of p(x) = prod psi / Z.
inline std::vector<std::vector<double>> enumerate_marginals(const bt::DiscreteModel& m) {
  const int n = m.graph.num_nodes();
  std::vector<std::vector<double>> marg(n);
  for (int v = 0; v < n; ++v) marg[v].assign(m.domain_sizes[v], 0.0);
  std::vector<int> x(n, 0);
  double z = 0.0;
  std::function<void(int)> rec = [&](int v) {
    if (v == n) {
      double w = 1.0;
      for (const auto& p : m.potentials) {
        std::size_t idx = 0;
        for (NodeId u : p.clique) idx = idx * m.domain_sizes[u] + x[u];
        w *= p.table[idx];
      }
      z += w;
      for (int u = 0; u < n; ++u) marg[u][x[u]] += w;
      return;
    }
    for (int s = 0; s < m.domain_sizes[v]; ++s) {
      x[v] = s;
      rec(v + 1);
    }
  };
  rec(0);
  for (auto& row : marg)
    for (double& p : row) p /= z;
  return marg;
}

inline double max_marginal_dev(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double d = 0.0;
  for (std::size_t v = 0; v < a.size(); ++v)
    for (std::size_t s = 0; s < a[v].size(); ++s) d = std::max(d, std::abs(a[v][s] - b[v][s]));
  return d;
}

// Prim's algorithm on a dense weight matrix (NaN = no edge). Returns total weight.
inline double prim_max_weight(int n, const std::vector<std::pair<int, int>>& edges, const std::vector<double>& w) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Constant(n, n, std::nan(""));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    W(edges[e].first, edges[e].second) = w[e];
    W(edges[e].second, edges[e].first) = w[e];
  }
  std::vector<char> in(n, 0);
  in[0] = 1;
  double total = 0.0;
  for (int step = 1; step < n; ++step) {
    double best = -std::numeric_limits<double>::infinity();
    int pick = -1;
    for (int a = 0; a < n; ++a)
      if (in[a])
        for (int b = 0; b < n; ++b)
          if (!in[b] && !std::isnan(W(a, b)) && W(a, b) > best) {
            best = W(a, b);
            pick = b;
          }
    if (pick < 0) return std::nan("");
    in[pick] = 1;
    total += best;
  }
  return total;
}

// Best spanning tree by checking every (n-1)-edge subset.
inline double exhaustive_max_spanning_tree(int n, const std::vector<std::pair<int, int>>& edges,
                                           const std::vector<double>& w) {
  const int m = static_cast<int>(edges.size());
  const int k = n - 1;
  double best = -std::numeric_limits<double>::infinity();
  if (k == 0) return 0.0;
  std::vector<int> comb(k);
  std::iota(comb.begin(), comb.end(), 0);
  if (k > m) return std::nan("");
  while (true) {
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    bool acyclic = true;
    double total = 0.0;
    for (int e : comb) {
      int a = find(edges[e].first), b = find(edges[e].second);
      if (a == b) {
        acyclic = false;
        break;
      }
      parent[a] = b;
      total += w[e];
    }
    if (acyclic) best = std::max(best, total);
    int i = k - 1;
    while (i >= 0 && comb[i] == m - k + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
  return best;
}

// Walk-summable model J = I - c S on g with dense spectral radius computation.
inline Eigen::SparseMatrix<double> random_walk_summable(std::mt19937_64& rng, const Graph& g, double rho) {
  const int n = g.num_nodes();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const Edge& e : g.edges()) S(e.u, e.v) = S(e.v, e.u) = u(rng);
  const double r = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S.cwiseAbs()).eigenvalues().cwiseAbs().maxCoeff();
  if (r > 0) S *= rho / r;
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) - S;
  return J.sparseView();
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

// Relabels a graph by a permutation: new id of v is perm[v].
inline Graph permute_graph(const Graph& g, const std::vector<int>& perm) {
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) edges.push_back(bt::make_edge(perm[e.u], perm[e.v]));
  return Graph::from_edges(g.num_nodes(), edges);
}

}  // namespace oracle
