#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "bt/io.hpp"

namespace bt {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

Json labels_json(const Graph& g, std::span<const NodeId> nodes) {
  Json a = Json::array();
  for (NodeId v : nodes) a.push_back(g.label(v));
  return a;
}

std::string label_of(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw ParseError("node labels must be strings or integers", 0);
}

NodeId lookup(const Graph& g, const Json& j) {
  const std::string label = label_of(j);
  auto id = g.find_label(label);
  if (!id) throw DomainError("unknown node '" + label + "'");
  return *id;
}

std::vector<double> reals(const Json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array of numbers", 0);
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ParseError(std::string(what) + " must be an array of numbers", 0);
    out.push_back(x.get<double>());
  }
  return out;
}

// Re-indexes a table given over `listed` member order into ascending-id order.
Potential sorted_potential(const std::vector<NodeId>& listed, const std::vector<double>& table,
                           const std::vector<int>& domains) {
  const std::size_t k = listed.size();
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return listed[a] < listed[b]; });
  Potential p;
  for (std::size_t i : perm) p.clique.push_back(listed[i]);
  for (std::size_t i = 1; i < k; ++i)
    if (p.clique[i] == p.clique[i - 1]) throw DomainError("repeated node in potential clique");
  std::size_t total = 1;
  for (NodeId v : listed) total *= static_cast<std::size_t>(domains[v]);
  if (table.size() != total) throw DomainError("potential table size mismatch");

  std::vector<std::size_t> listed_stride(k);
  std::size_t s = 1;
  for (std::size_t i = k; i-- > 0;) {
    listed_stride[i] = s;
    s *= static_cast<std::size_t>(domains[listed[i]]);
  }
  p.table.resize(total);
  std::vector<int> digit(k, 0);  // digits in sorted order
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < k; ++i) src += static_cast<std::size_t>(digit[i]) * listed_stride[perm[i]];
    p.table[idx] = table[src];
    for (std::size_t i = k; i-- > 0;) {
      if (++digit[i] < domains[p.clique[i]]) break;
      digit[i] = 0;
    }
  }
  return p;
}

}  // namespace

Json block_tree_json(const Graph& g, const BlockTree& bt) {
  Json doc;
  doc["clusters"] = Json::array();
  for (const auto& c : bt.clusters) doc["clusters"].push_back(labels_json(g, c));
  doc["edges"] = Json::array();
  for (auto [p, c] : bt.edges) doc["edges"].push_back({p, c});
  doc["root"] = 0;
  return doc;
}

Json spanning_json(const Graph& g, const SpanningBlockTree& s) {
  Json doc = block_tree_json(g, s.block_tree);
  doc["retained_edges"] = Json::array();
  for (std::size_t e : s.retained_edges)
    doc["retained_edges"].push_back({g.label(g.edges()[e].u), g.label(g.edges()[e].v)});
  doc["total_weight"] = s.total_weight;
  doc["dropped_weight"] = s.dropped_weight;
  return doc;
}

DiscreteModel parse_discrete_model(const Json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ParseError("model must be a JSON object", 0);
  if (!doc.contains("graph")) throw ParseError("model needs a \"graph\" entry", 0);
  const Json& gj = doc["graph"];
  Graph::Builder builder;
  if (gj.is_string()) {
    std::filesystem::path p(gj.get<std::string>());
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    const Graph file_graph = load_graph(p.string());
    for (const auto& l : file_graph.labels()) builder.add_node(l);
    for (std::size_t e = 0; e < file_graph.num_edges(); ++e) builder.add_edge(file_graph.edges()[e].u, file_graph.edges()[e].v);
  } else if (gj.is_object()) {
    if (gj.contains("nodes"))
      for (const auto& v : gj["nodes"]) builder.add_node(label_of(v));
    if (gj.contains("edges"))
      for (const auto& e : gj["edges"]) {
        if (!e.is_array() || e.size() != 2) throw ParseError("graph edges must be [a, b] pairs", 0);
        builder.add_edge(label_of(e[0]), label_of(e[1]));
      }
  } else {
    throw ParseError("\"graph\" must be a file path or {\"nodes\", \"edges\"}", 0);
  }
  if (doc.contains("boundary")) {
    const Json& b = doc["boundary"];
    if (b.contains("nodes"))
      for (const auto& v : b["nodes"]) builder.add_node(label_of(v));
  }

  DiscreteModel m;
  m.graph = builder.build();
  const int n = m.graph.num_nodes();
  m.domain_sizes.assign(n, 2);
  if (doc.contains("domains")) {
    for (const auto& [label, k] : doc["domains"].items()) {
      auto id = m.graph.find_label(label);
      if (!id) throw DomainError("unknown node '" + label + "' in domains");
      if (!k.is_number_integer()) throw ParseError("domain sizes must be integers", 0);
      m.domain_sizes[*id] = k.get<int>();
    }
  }
  for (int k : m.domain_sizes)
    if (k < 2) throw DomainError("every domain size must be >= 2");

  if (doc.contains("potentials")) {
    for (const auto& pj : doc["potentials"]) {
      if (!pj.contains("clique") || !pj.contains("table")) throw ParseError("potential needs clique and table", 0);
      std::vector<NodeId> listed;
      for (const auto& v : pj["clique"]) listed.push_back(lookup(m.graph, v));
      if (listed.empty()) throw DomainError("potential with empty clique");
      m.potentials.push_back(sorted_potential(listed, reals(pj["table"], "table"), m.domain_sizes));
    }
  }

  if (doc.contains("boundary")) {
    const Json& b = doc["boundary"];
    BoundarySpec spec;
    for (const auto& v : b.value("nodes", Json::array())) spec.nodes.push_back(lookup(m.graph, v));
    std::sort(spec.nodes.begin(), spec.nodes.end());
    spec.nodes.erase(std::unique(spec.nodes.begin(), spec.nodes.end()), spec.nodes.end());
    if (spec.nodes.empty()) throw DomainError("boundary is empty; build a plain block-tree instead");
    for (const auto& a : b.value("arcs", Json::array())) {
      if (!a.is_array() || a.size() != 2) throw ParseError("arcs must be [boundary, interior] pairs", 0);
      spec.arcs.emplace_back(lookup(m.graph, a[0]), lookup(m.graph, a[1]));
    }
    const Json priors = b.value("priors", Json::object());
    for (NodeId v : spec.nodes) {
      const std::string& label = m.graph.label(v);
      if (priors.contains(label))
        spec.priors.push_back(reals(priors[label], "prior"));
      else
        spec.priors.emplace_back(m.domain_sizes[v], 1.0);
    }
    m.boundary = std::move(spec);
  }
  m.validate();
  return m;
}

DiscreteModel load_discrete_model(const std::string& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
  return parse_discrete_model(doc, std::filesystem::path(path).parent_path().string());
}

Json marginals_json(const Graph& g, const MarginalSet& m) {
  Json doc = Json::object();
  for (NodeId v = 0; v < g.num_nodes(); ++v) doc[g.label(v)] = m.node[v];
  return doc;
}

SparseMatrix parse_triplets(std::string_view text) {
  std::map<std::pair<long, long>, double> entries;
  long n = 0;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream in(line);
    std::vector<std::string> tok;
    for (std::string t; in >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 3) throw ParseError("expected 'i j value'", line_no);
    long i = 0, j = 0;
    double v = 0.0;
    auto parse_index = [&](const std::string& s, long& out) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || p != s.data() + s.size() || out < 1)
        throw ParseError("indices must be positive integers (1-based)", line_no);
    };
    parse_index(tok[0], i);
    parse_index(tok[1], j);
    auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), v);
    if (ec != std::errc() || p != tok[2].data() + tok[2].size()) throw ParseError("malformed value", line_no);
    const std::pair<long, long> key{i - 1, j - 1};
    if (auto it = entries.find(key); it != entries.end() && it->second != v)
      throw ParseError("conflicting duplicate entry", line_no);
    entries[key] = v;
    n = std::max({n, i, j});
  }
  if (n == 0) throw ParseError("matrix has no entries", 0);
  std::vector<Eigen::Triplet<double>> t;
  for (const auto& [ij, v] : entries) {
    const auto [i, j] = ij;
    if (i != j) {
      auto mirror = entries.find({j, i});
      if (mirror == entries.end())
        t.emplace_back(j, i, v);
      else if (mirror->second != v)
        throw ParseError("asymmetric entries at (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")", 0);
    }
    t.emplace_back(i, j, v);
  }
  SparseMatrix J(n, n);
  J.setFromTriplets(t.begin(), t.end());
  J.makeCompressed();
  return J;
}

SparseMatrix load_triplets(const std::string& path) { return parse_triplets(read_file(path)); }

std::string serialize_triplets(const SparseMatrix& J) {
  std::ostringstream out;
  out.precision(17);
  for (int j = 0; j < J.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(J, j); it; ++it)
      if (it.row() <= j) out << it.row() + 1 << ' ' << j + 1 << ' ' << it.value() << '\n';
  return out.str();
}

Observation parse_observation(const Json& doc, int n) {
  if (!doc.is_object() || !doc.contains("y")) throw ParseError("observation needs \"y\"", 0);
  auto vec = [&](const char* key, double fallback) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, fallback);
    if (!doc.contains(key)) return v;
    const Json& j = doc[key];
    if (j.is_number()) return Eigen::VectorXd(Eigen::VectorXd::Constant(n, j.get<double>()));
    const auto r = reals(j, key);
    if (static_cast<int>(r.size()) != n)
      throw DomainError(std::string("\"") + key + "\" has " + std::to_string(r.size()) + " entries, expected " +
                        std::to_string(n));
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(r.data(), n));
  };
  Observation obs;
  obs.y = vec("y", 0.0);
  obs.h = vec("H", 1.0);
  obs.r = vec("R", 1.0);
  obs.validate(n);
  return obs;
}

Observation load_observation(const std::string& path, int n) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
  return parse_observation(doc, n);
}

Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json observation_json(const Observation& obs) {
  return Json{{"y", vector_json(obs.y)}, {"H", vector_json(obs.h)}, {"R", vector_json(obs.r)}};
}

std::string trace_csv(const IterationTrace& tr) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,residual,subgraph_kind,wall_ms\n";
  for (std::size_t i = 0; i < tr.residual.size(); ++i)
    out << i << ',' << tr.residual[i] << ',' << tr.subgraph[i] << ',' << tr.wall_ms[i] << '\n';
  return out.str();
}

}  // namespace bt
