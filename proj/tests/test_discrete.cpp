#include <doctest.h>

#include <random>

#include "bt/discrete.hpp"
#include "bt/io.hpp"
#include "oracles.hpp"

using namespace bt;

namespace {

DiscreteModel two_node(std::vector<double> table) {
  DiscreteModel m;
  m.graph = make_path(2);
  m.domain_sizes = {2, 2};
  m.potentials.push_back({{0, 1}, std::move(table)});
  return m;
}

NodeSet random_root(std::mt19937_64& rng, int n) {
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  NodeSet root(perm.begin(), perm.begin() + 1 + static_cast<int>(rng() % std::max(1, n / 2)));
  std::sort(root.begin(), root.end());
  return root;
}

// p(x) = prod normalised priors * prod psi / Z(x_boundary), by nested enumeration.
std::vector<std::vector<double>> boundary_oracle(const DiscreteModel& m) {
  const int n = m.graph.num_nodes();
  const auto& b = *m.boundary;
  std::vector<char> is_b(n, 0);
  for (NodeId v : b.nodes) is_b[v] = 1;
  std::vector<NodeId> inner;
  for (NodeId v = 0; v < n; ++v)
    if (!is_b[v]) inner.push_back(v);
  std::vector<std::vector<double>> marg(n);
  for (NodeId v = 0; v < n; ++v) marg[v].assign(m.domain_sizes[v], 0.0);
  std::vector<int> x(n, 0);
  auto psi = [&] {
    double w = 1.0;
    for (const auto& p : m.potentials) {
      std::size_t idx = 0;
      for (NodeId u : p.clique) idx = idx * m.domain_sizes[u] + x[u];
      w *= p.table[idx];
    }
    return w;
  };
  auto each = [&](const std::vector<NodeId>& nodes, auto&& body) {
    for (NodeId v : nodes) x[v] = 0;
    while (true) {
      body();
      std::size_t i = nodes.size();
      while (i > 0) {
        NodeId v = nodes[i - 1];
        if (++x[v] < m.domain_sizes[v]) break;
        x[v] = 0;
        --i;
      }
      if (i == 0) return;
    }
  };
  each(b.nodes, [&] {
    double prior = 1.0;
    for (std::size_t i = 0; i < b.nodes.size(); ++i) {
      double s = 0.0;
      for (double p : b.priors[i]) s += p;
      prior *= b.priors[i][x[b.nodes[i]]] / s;
    }
    double z = 0.0;
    each(inner, [&] { z += psi(); });
    each(inner, [&] {
      const double w = prior * psi() / z;
      for (NodeId v = 0; v < n; ++v) marg[v][x[v]] += w;
    });
  });
  return marg;
}

DiscreteModel random_boundary_model(std::mt19937_64& rng) {
  // Two boundary nodes (ids 4, 5) feeding a 4-node interior cycle.
  DiscreteModel m;
  std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  m.graph = Graph::from_edges(6, edges);
  m.domain_sizes = {2, 2, 2, 2, 2, 2};
  std::uniform_real_distribution<double> u(0.1, 3.0);
  auto table = [&](std::size_t k) {
    std::vector<double> t(k);
    for (double& x : t) x = u(rng);
    return t;
  };
  for (const Edge& e : edges) m.potentials.push_back({{e.u, e.v}, table(4)});
  BoundarySpec b;
  b.nodes = {4, 5};
  b.arcs = {{4, 0}, {5, 2}, {5, 1}};
  b.priors = {table(2), table(2)};
  m.potentials.push_back({{0, 4}, table(4)});
  m.potentials.push_back({{2, 5}, table(4)});
  m.potentials.push_back({{1, 5}, table(4)});
  m.boundary = b;
  return m;
}

}  // namespace

TEST_CASE("brute force hand examples") {
  DiscreteModel single;
  single.graph = Graph::from_edges(1, std::vector<Edge>{});
  single.domain_sizes = {2};
  single.potentials.push_back({{0}, {2.0, 2.0}});
  const auto s = brute_force_marginals(single);
  CHECK(s.node[0][0] == doctest::Approx(0.5));

  const auto t = brute_force_marginals(two_node({1, 2, 3, 4}));
  CHECK(t.node[0][0] == doctest::Approx(0.3));
  CHECK(t.node[0][1] == doctest::Approx(0.7));
  CHECK(t.node[1][0] == doctest::Approx(0.4));
}

TEST_CASE("single-cluster block-tree sums directly") {
  const DiscreteModel m = two_node({1, 2, 3, 4});
  const BlockTree bt = make_block_tree(2, {{0, 1}}, std::vector<std::pair<int, int>>{}, 0);
  const MarginalSet r = bt_marginals(m, bt);
  CHECK(r.node[0][1] == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(r.cluster[0][3] == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("uniform chain gives uniform marginals") {
  const DiscreteModel m = load_discrete_model(oracle::fixture("chain3_uniform.json"));
  const MarginalSet r = bt_marginals(m, construct_block_tree(m.graph, NodeSet{0}));
  for (const auto& p : r.node) {
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
  }
}

TEST_CASE("potential assignment on the six-cluster example") {
  const DiscreteModel m = load_discrete_model(oracle::fixture("fig1c_model.json"));
  std::vector<std::string> root{"1"};
  const BlockTree bt = construct_block_tree(m.graph, labels_to_ids(m.graph, root));
  const EdgeFactorization f = map_potentials(m, bt);
  // File order: 1-2 1-3 2-4 3-4 3-6 4-6 4-7 5-8 6-7 6-8 7-9 8-9; edges ordered by child cluster.
  CHECK(f.assignment == std::vector<int>{0, 0, 1, 1, 1, 1, 2, 3, 2, 2, 4, 4});
  CHECK(bt.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {3, 5}});
}

TEST_CASE("potential inside the root goes to the first child edge") {
  DiscreteModel m;
  m.graph = make_path(3);
  m.domain_sizes = {2, 2, 2};
  m.potentials.push_back({{0, 1}, {1, 2, 3, 4}});
  const BlockTree bt = construct_block_tree(m.graph, NodeSet{0, 1});
  const EdgeFactorization f = map_potentials(m, bt);
  CHECK(f.assignment == std::vector<int>{0});
  CHECK(f.factors.size() == 1);
}

TEST_CASE("property: edge-factor product equals the potential product pointwise") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 60; ++t) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const Graph g = oracle::random_connected_graph(rng, n, 0.3);
    const DiscreteModel m = oracle::random_pairwise_model(rng, g, 3);
    const EdgeFactorization f = map_potentials(m, construct_block_tree(g, random_root(rng, n)));
    std::vector<int> x(n, 0);
    for (int trial = 0; trial < 50; ++trial) {
      double direct = 0.0;
      for (NodeId v = 0; v < n; ++v) x[v] = static_cast<int>(rng() % m.domain_sizes[v]);
      for (const auto& p : m.potentials) {
        std::size_t idx = 0;
        for (NodeId u : p.clique) idx = idx * m.domain_sizes[u] + x[u];
        direct += std::log(p.table[idx]);
      }
      CHECK(std::abs(f.log_value(x) - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST_CASE("property: block-tree marginals match enumeration") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 150; ++t) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const Graph g = oracle::random_connected_graph(rng, n, 0.35);
    const DiscreteModel m = oracle::random_pairwise_model(rng, g, 3);
    const MarginalSet r = bt_marginals(m, construct_block_tree(g, random_root(rng, n)));
    CHECK(oracle::max_marginal_dev(r.node, oracle::enumerate_marginals(m)) < 1e-10);
    CHECK(oracle::max_marginal_dev(brute_force_marginals(m).node, oracle::enumerate_marginals(m)) < 1e-12);
    for (const auto& c : r.cluster) {
      double s = 0.0;
      for (double p : c) {
        CHECK(p >= 0.0);
        s += p;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("3x3 grid with random couplings") {
  std::mt19937_64 rng(23);
  const Graph g = make_grid(3, 3);
  const DiscreteModel m = oracle::random_pairwise_model(rng, g);
  const MarginalSet r = bt_marginals(m, construct_block_tree(g, NodeSet{0}));
  CHECK(oracle::max_marginal_dev(r.node, brute_force_marginals(m).node) < 1e-10);
}

TEST_CASE("property: marginals do not depend on the root") {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 80; ++t) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const Graph g = oracle::random_connected_graph(rng, n, 0.3);
    const DiscreteModel m = oracle::random_pairwise_model(rng, g);
    const MarginalSet a = bt_marginals(m, construct_block_tree(g, random_root(rng, n)));
    const MarginalSet b = bt_marginals(m, construct_block_tree(g, random_root(rng, n)));
    CHECK(oracle::max_marginal_dev(a.node, b.node) < 1e-9);
  }
}

TEST_CASE("property: message normalisation does not change marginals") {
  std::mt19937_64 rng(25);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const Graph g = oracle::random_connected_graph(rng, n, 0.3);
    const DiscreteModel m = oracle::random_pairwise_model(rng, g, 3);
    const BlockTree bt = construct_block_tree(g, random_root(rng, n));
    InferenceOptions raw;
    raw.normalize_messages = false;
    CHECK(oracle::max_marginal_dev(bt_marginals(m, bt).node, bt_marginals(m, bt, raw).node) < 1e-9);
  }
}

TEST_CASE("property: edge joints are calibrated with cluster joints") {
  std::mt19937_64 rng(26);
  InferenceOptions opt;
  opt.edge_joints = true;
  for (int t = 0; t < 40; ++t) {
    const int n = 3 + static_cast<int>(rng() % 6);
    const Graph g = oracle::random_connected_graph(rng, n, 0.3);
    const DiscreteModel m = oracle::random_pairwise_model(rng, g, 3);
    const BlockTree bt = construct_block_tree(g, random_root(rng, n));
    const EdgeFactorization f = map_potentials(m, bt);
    const MarginalSet r = marginals_from_factorization(f, opt);
    REQUIRE(r.edge.size() == f.factors.size());
    for (std::size_t k = 0; k < f.factors.size(); ++k) {
      const EdgeFactor& e = f.factors[k];
      std::vector<double> rows(e.rows, 0.0), cols(e.cols, 0.0);
      for (std::size_t i = 0; i < e.rows; ++i)
        for (std::size_t j = 0; j < e.cols; ++j) {
          rows[i] += r.edge[k][i * e.cols + j];
          cols[j] += r.edge[k][i * e.cols + j];
        }
      for (std::size_t i = 0; i < e.rows; ++i) CHECK(std::abs(rows[i] - r.cluster[e.parent][i]) < 1e-10);
      for (std::size_t j = 0; j < e.cols; ++j) CHECK(std::abs(cols[j] - r.cluster[e.child][j]) < 1e-10);
    }
  }
}

TEST_CASE("budget and validation errors") {
  DiscreteModel m;
  m.graph = make_complete(10);
  m.domain_sizes.assign(10, 2);
  const BlockTree bt = construct_block_tree(m.graph, NodeSet{0});
  InferenceOptions opt;
  opt.budget = 100;
  try {
    bt_marginals(m, bt, opt);
    FAIL("expected BudgetError");
  } catch (const BudgetError& e) {
    CHECK(e.exponent() == 10);
  }

  CHECK_THROWS_AS(two_node({1, 0, 1, 1}).validate(), DomainError);
  CHECK_THROWS_AS(two_node({1, 1, 1}).validate(), DomainError);
  DiscreteModel bad;
  bad.graph = make_path(3);
  bad.domain_sizes = {2, 2, 2};
  bad.potentials.push_back({{0, 2}, {1, 1, 1, 1}});
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(brute_force_marginals(m, Execution::serial, 100), CapError);
}

TEST_CASE("boundary model of the 3x3 grid roots at the boundary") {
  const DiscreteModel m = load_discrete_model(oracle::fixture("fig3_boundary.json"));
  const BoundaryBlockTree b = boundary_block_tree(m);
  std::vector<std::vector<std::string>> labels;
  for (const auto& c : b.block_tree.clusters) {
    std::vector<std::string> l;
    for (NodeId v : c) l.push_back(m.graph.label(v));
    std::sort(l.begin(), l.end());
    labels.push_back(l);
  }
  CHECK(labels == std::vector<std::vector<std::string>>{
                      {"a", "b", "c", "d"}, {"1", "3", "7", "9"}, {"2", "4", "6", "8"}, {"5"}});
  CHECK(b.block_tree.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}});
  const MarginalSet r = marginals_from_factorization(b.factorization);
  CHECK(oracle::max_marginal_dev(r.node, boundary_oracle(m)) < 1e-10);
  CHECK(oracle::max_marginal_dev(r.node, brute_force_marginals(m).node) < 1e-10);
}

TEST_CASE("boundary model with uniform priors and flat potentials is uniform") {
  DiscreteModel m = load_discrete_model(oracle::fixture("fig3_boundary.json"));
  for (auto& p : m.potentials) std::fill(p.table.begin(), p.table.end(), 1.0);
  for (auto& p : m.boundary->priors) std::fill(p.begin(), p.end(), 0.3);
  const MarginalSet r = marginals_from_factorization(boundary_block_tree(m).factorization);
  for (const auto& p : r.node) CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("property: random boundary models match the boundary oracle") {
  std::mt19937_64 rng(27);
  for (int t = 0; t < 50; ++t) {
    const DiscreteModel m = random_boundary_model(rng);
    const BoundaryBlockTree b = boundary_block_tree(m);
    CHECK(b.block_tree.clusters[0] == NodeSet{4, 5});
    const auto ref = boundary_oracle(m);
    CHECK(oracle::max_marginal_dev(marginals_from_factorization(b.factorization).node, ref) < 1e-10);
    CHECK(oracle::max_marginal_dev(bt_marginals(m, b.block_tree).node, ref) < 1e-10);
    CHECK(oracle::max_marginal_dev(brute_force_marginals(m).node, ref) < 1e-12);
  }
}

TEST_CASE("boundary validation") {
  DiscreteModel m = load_discrete_model(oracle::fixture("fig3_boundary.json"));
  DiscreteModel no_boundary = m;
  no_boundary.boundary.reset();
  CHECK_THROWS_AS(boundary_block_tree(no_boundary), DomainError);
  DiscreteModel only_boundary = m;
  const NodeSet b = m.boundary->nodes;
  only_boundary.potentials.push_back({{b[0]}, {1.0, 2.0}});
  CHECK_THROWS_AS(only_boundary.validate(), DomainError);
  DiscreteModel reversed = m;
  std::swap(reversed.boundary->arcs[0].first, reversed.boundary->arcs[0].second);
  CHECK_THROWS_AS(reversed.validate(), DomainError);
}
