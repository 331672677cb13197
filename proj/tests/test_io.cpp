#include <doctest.h>

#include <random>

#include "bt/io.hpp"
#include "oracles.hpp"

using namespace bt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("triplets are 1-based and mirrored") {
  const SparseMatrix J = parse_triplets("# comment\n1 1 2\n2 2 2\n1 2 -0.5\n2 1 -0.5\n3 3 1\n2 3 0.25\n");
  REQUIRE(J.rows() == 3);
  CHECK(J.coeff(0, 1) == -0.5);
  CHECK(J.coeff(2, 1) == 0.25);
  CHECK(J.coeff(1, 2) == 0.25);
  CHECK(J.nonZeros() == 7);
}

TEST_CASE("triplet errors") {
  CHECK_THROWS_WITH_AS(parse_triplets("1 1 1\n0 1 2\n"), doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_AS(parse_triplets("1 1 1\n1 1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_triplets("1 2 1\n2 1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_triplets("1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_triplets("1 2 abc\n"), ParseError);
  CHECK_THROWS_AS(parse_triplets(""), ParseError);
}

TEST_CASE("triplets round trip") {
  std::mt19937_64 rng(61);
  const SparseMatrix J = oracle::random_walk_summable(rng, make_grid(4, 4), 0.9);
  const SparseMatrix K = parse_triplets(serialize_triplets(J));
  CHECK((MatrixXd(J) - MatrixXd(K)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("observation parsing broadcasts scalars") {
  const Observation o = parse_observation(Json::parse(R"({"y": [1, 2], "R": 3})"), 2);
  CHECK(o.h == VectorXd::Ones(2));
  CHECK(o.r == VectorXd::Constant(2, 3.0));
  CHECK_THROWS_AS(parse_observation(Json::parse(R"({"H": 1})"), 2), ParseError);
  CHECK_THROWS_AS(parse_observation(Json::parse(R"({"y": [1, 2, 3]})"), 2), DomainError);
  CHECK_THROWS_AS(parse_observation(Json::parse(R"({"y": [1, 2], "R": [1, -1]})"), 2), DomainError);
  const Observation back = parse_observation(observation_json(o), 2);
  CHECK(back.y == o.y);
  CHECK(back.r == o.r);
}

TEST_CASE("discrete model tables follow the listed clique order") {
  const Json doc = Json::parse(R"({
    "graph": {"nodes": ["a", "b"], "edges": [["a", "b"]]},
    "domains": {"b": 3},
    "potentials": [{"clique": ["b", "a"], "table": [1, 2, 3, 4, 5, 6]}]
  })");
  const DiscreteModel m = parse_discrete_model(doc);
  CHECK(m.domain_sizes == std::vector<int>{2, 3});
  REQUIRE(m.potentials.size() == 1);
  CHECK(m.potentials[0].clique == NodeSet{0, 1});
  // Listed order (b, a): entry (b=j, a=i) at j*2+i; sorted order (a, b) at i*3+j.
  CHECK(m.potentials[0].table == std::vector<double>{1, 3, 5, 2, 4, 6});
}

TEST_CASE("discrete model files") {
  const DiscreteModel chain = load_discrete_model(oracle::fixture("chain3_uniform.json"));
  CHECK(chain.graph.num_nodes() == 3);
  CHECK(chain.domain_sizes == std::vector<int>{2, 2, 2});
  const DiscreteModel b = load_discrete_model(oracle::fixture("fig3_boundary.json"));
  REQUIRE(b.boundary.has_value());
  CHECK(b.boundary->nodes.size() == 4);
  CHECK(b.graph.num_nodes() == 13);
  CHECK_THROWS_AS(parse_discrete_model(Json::parse(R"({"potentials": []})")), ParseError);
  CHECK_THROWS_AS(load_discrete_model(oracle::fixture("missing.json")), ParseError);
}

TEST_CASE("block-tree and marginal JSON") {
  const Graph g = load_graph(oracle::fixture("fig1a.edges"));
  const Json j = block_tree_json(g, construct_block_tree(g, NodeSet{0}));
  CHECK(j["clusters"].size() == 5);
  CHECK(j["clusters"][1] == Json::array({"2", "3"}));
  CHECK(j["edges"][0] == Json::array({0, 1}));
  CHECK(j["root"] == 0);

  MarginalSet m;
  m.node = std::vector<std::vector<double>>(g.num_nodes(), {0.25, 0.75});
  const Json mj = marginals_json(g, m);
  CHECK(mj["9"][1] == 0.75);
}

TEST_CASE("trace CSV") {
  IterationTrace tr;
  tr.residual = {1.0, 0.125};
  tr.subgraph = {"none", "tree"};
  tr.wall_ms = {0.0, 1.5};
  CHECK(trace_csv(tr) == "iteration,residual,subgraph_kind,wall_ms\n0,1,none,0\n1,0.125,tree,1.5\n");
}
