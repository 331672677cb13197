#include <doctest.h>

#include <random>

#include "bt/graph.hpp"
#include "oracles.hpp"

using namespace bt;

TEST_CASE("parse_graph reads labels, weights, comments and isolated nodes") {
  const Graph g = parse_graph("# header\n a b 0.5\nb c\n\n  d\nc a 2\n");
  CHECK(g.num_nodes() == 4);
  CHECK(g.num_edges() == 3);
  CHECK(g.label(0) == "a");
  CHECK(g.label(3) == "d");
  CHECK(g.degree(3) == 0);
  REQUIRE(g.has_weights());
  CHECK(g.weight(*g.edge_index(0, 1)) == doctest::Approx(0.5));
  CHECK(g.weight(*g.edge_index(1, 2)) == doctest::Approx(1.0));
}

TEST_CASE("node ids follow first appearance") {
  const Graph g = parse_graph("5 2\n2 9\n");
  CHECK(g.label(0) == "5");
  CHECK(g.label(1) == "2");
  CHECK(g.label(2) == "9");
}

TEST_CASE("duplicate edges collapse and the last weight wins") {
  const Graph g = parse_graph("1 2 1.5\n2 1 4\n");
  CHECK(g.num_edges() == 1);
  CHECK(g.weight(0) == doctest::Approx(4.0));
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_graph("1 2\n1 1\n"), doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(parse_graph("1 2 x\n"), doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_AS(parse_graph("1 2 3 4\n"), ParseError);
  CHECK_THROWS_AS(parse_graph("# nothing\n"), ParseError);
}

TEST_CASE("serialize_graph round trips") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Graph g0 = oracle::random_connected_graph(rng, 12, 0.2);
    const auto w = oracle::random_weights(rng, g0.num_edges());
    const Graph g = Graph::from_edges(g0.num_nodes(), g0.edges(), w);
    const Graph h = parse_graph(serialize_graph(g));
    REQUIRE(h.num_nodes() == g.num_nodes());
    REQUIRE(h.edges() == g.edges());
    for (std::size_t e = 0; e < g.num_edges(); ++e) CHECK(h.weight(e) == g.weight(e));
  }
}

TEST_CASE("adjacency is sorted and consistent with edges") {
  std::mt19937_64 rng(4);
  const Graph g = oracle::random_connected_graph(rng, 30, 0.1);
  std::size_t degree_sum = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    auto nb = g.neighbors(v);
    CHECK(std::is_sorted(nb.begin(), nb.end()));
    for (std::size_t i = 0; i < nb.size(); ++i) CHECK(g.edges()[g.incident_edges(v)[i]] == make_edge(v, nb[i]));
    degree_sum += nb.size();
  }
  CHECK(degree_sum == 2 * g.num_edges());
}

TEST_CASE("generators") {
  const Graph grid = make_grid(3, 4);
  CHECK(grid.num_nodes() == 12);
  CHECK(grid.num_edges() == 3 * 3 + 2 * 4);
  CHECK(grid.has_edge(0, 1));
  CHECK(grid.has_edge(0, 4));
  CHECK_FALSE(grid.has_edge(3, 4));
  CHECK(grid.label(0) == "1");

  const Graph hub = make_hub_grid(3, 2);
  CHECK(hub.num_nodes() == 11);
  CHECK(hub.degree(9) == 10);
  CHECK(hub.has_edge(9, 10));

  CHECK(make_complete(5).num_edges() == 10);
  CHECK(make_path(4).num_edges() == 3);
}

TEST_CASE("connectivity and neighbor sets") {
  CHECK(is_connected(make_grid(2, 2)));
  CHECK_FALSE(is_connected(load_graph(oracle::fixture("disconnected.edges"))));
  const Graph p = make_path(5);
  CHECK(neighbors_of_set(p, NodeSet{1, 2}) == NodeSet{0, 1, 2, 3});
  CHECK(neighbors_of_set(p, NodeSet{0, 4}) == NodeSet{1, 3});
  CHECK_THROWS_AS(neighbors_of_set(p, NodeSet{7}), DomainError);
}

TEST_CASE("label helpers") {
  const Graph g = parse_graph("x y\ny z\n");
  std::vector<std::string> labels{"z", "x", "z"};
  CHECK(labels_to_ids(g, labels) == NodeSet{0, 2});
  CHECK(format_label_set(g, NodeSet{0, 2}) == "[x,z]");
  std::vector<std::string> bad{"q"};
  CHECK_THROWS_AS(labels_to_ids(g, bad), DomainError);
}
