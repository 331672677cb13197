#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "bt/approx_est.hpp"
#include "bt/block_tree.hpp"
#include "bt/discrete.hpp"
#include "bt/gaussian.hpp"
#include "bt/spanning.hpp"

namespace bt {

using Json = nlohmann::json;

std::string read_file(const std::string& path);

// {"clusters": [[labels]], "edges": [[i, j]], "root": 0}
Json block_tree_json(const Graph& g, const BlockTree& bt);
// Block-tree JSON plus retained_edges (label pairs), total_weight, dropped_weight.
Json spanning_json(const Graph& g, const SpanningBlockTree& s);

// Potential tables are row-major over the clique members in the order listed,
// last member fastest. `base_dir` resolves a graph given as a file path.
DiscreteModel parse_discrete_model(const Json& doc, const std::string& base_dir = ".");
DiscreteModel load_discrete_model(const std::string& path);

Json marginals_json(const Graph& g, const MarginalSet& m);

// Coordinate triplets "i j value", 1-based. An entry given once is mirrored;
// when both (i, j) and (j, i) appear they must agree.
SparseMatrix parse_triplets(std::string_view text);
SparseMatrix load_triplets(const std::string& path);
std::string serialize_triplets(const SparseMatrix& J);

// {"y": [...], "H": [...] or scalar, "R": [...] or scalar}; H defaults to 1.
Observation parse_observation(const Json& doc, int n);
Observation load_observation(const std::string& path, int n);
Json observation_json(const Observation& obs);

// Header iteration,residual,subgraph_kind,wall_ms.
std::string trace_csv(const IterationTrace& tr);

Json vector_json(const Eigen::VectorXd& v);

}  // namespace bt
