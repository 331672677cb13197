#include "bt/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

namespace bt {

namespace {

std::uint64_t edge_key(Edge e) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.u)) << 32) |
         static_cast<std::uint32_t>(e.v);
}

bool is_comment_or_blank(std::string_view line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string_view::npos || line[pos] == '#';
}

}  // namespace

Graph Graph::from_edges(int n, std::span<const Edge> edges, std::optional<std::vector<double>> weights,
                        std::vector<std::string> labels) {
  if (n < 0) throw DomainError("negative node count");
  if (weights && weights->size() != edges.size())
    throw DomainError("weight count does not match edge count");
  if (!labels.empty() && static_cast<int>(labels.size()) != n)
    throw DomainError("label count does not match node count");

  Graph g;
  g.n_ = n;
  if (labels.empty()) {
    labels.reserve(n);
    for (int i = 0; i < n; ++i) labels.push_back(std::to_string(i + 1));
  }
  g.labels_ = std::move(labels);
  for (int i = 0; i < n; ++i) {
    if (!g.label_index_.emplace(g.labels_[i], i).second)
      throw DomainError("duplicate node label '" + g.labels_[i] + "'");
  }

  // Sort by edge, keeping the last occurrence of duplicates.
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Edge> normalized(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge e = edges[i];
    if (e.u == e.v) throw DomainError("self-loop on node " + std::to_string(e.u));
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) throw DomainError("edge endpoint out of range");
    normalized[i] = make_edge(e.u, e.v);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return normalized[a] < normalized[b]; });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (k + 1 < order.size() && normalized[order[k + 1]] == normalized[i]) continue;
    g.edges_.push_back(normalized[i]);
    if (weights) g.weights_.push_back((*weights)[i]);
  }

  std::vector<std::size_t> degree(n + 1, 0);
  for (const Edge& e : g.edges_) {
    ++degree[e.u];
    ++degree[e.v];
  }
  g.offsets_.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + degree[v];
  g.adj_.resize(2 * g.edges_.size());
  g.adj_edge_.resize(2 * g.edges_.size());
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  // Edges are sorted, so each adjacency list comes out sorted except for the
  // interleaving of lower and higher neighbours; sort afterwards.
  for (std::size_t k = 0; k < g.edges_.size(); ++k) {
    const Edge e = g.edges_[k];
    g.adj_[fill[e.u]] = e.v;
    g.adj_edge_[fill[e.u]++] = k;
    g.adj_[fill[e.v]] = e.u;
    g.adj_edge_[fill[e.v]++] = k;
  }
  for (int v = 0; v < n; ++v) {
    const std::size_t b = g.offsets_[v], en = g.offsets_[v + 1];
    std::vector<std::pair<NodeId, std::size_t>> tmp;
    tmp.reserve(en - b);
    for (std::size_t i = b; i < en; ++i) tmp.emplace_back(g.adj_[i], g.adj_edge_[i]);
    std::sort(tmp.begin(), tmp.end());
    for (std::size_t i = b; i < en; ++i) {
      g.adj_[i] = tmp[i - b].first;
      g.adj_edge_[i] = tmp[i - b].second;
    }
  }
  return g;
}

std::optional<std::size_t> Graph::edge_index(NodeId a, NodeId b) const {
  if (!contains(a) || !contains(b) || a == b) return std::nullopt;
  if (degree(a) > degree(b)) std::swap(a, b);
  auto nb = neighbors(a);
  auto it = std::lower_bound(nb.begin(), nb.end(), b);
  if (it == nb.end() || *it != b) return std::nullopt;
  return adj_edge_[offsets_[a] + static_cast<std::size_t>(it - nb.begin())];
}

std::vector<double> Graph::weights() const {
  if (weights_.empty()) return std::vector<double>(edges_.size(), 1.0);
  return weights_;
}

std::optional<NodeId> Graph::find_label(std::string_view label) const {
  auto it = label_index_.find(std::string(label));
  if (it == label_index_.end()) return std::nullopt;
  return it->second;
}

NodeId Graph::Builder::add_node(const std::string& label) {
  auto [it, inserted] = index_.emplace(label, static_cast<NodeId>(labels_.size()));
  if (inserted) labels_.push_back(label);
  return it->second;
}

void Graph::Builder::add_edge(const std::string& a, const std::string& b, std::optional<double> weight) {
  if (a == b) throw DomainError("self-loop on node '" + a + "'");
  const NodeId ia = add_node(a);
  const NodeId ib = add_node(b);
  add_edge(ia, ib, weight);
}

void Graph::Builder::add_edge(NodeId a, NodeId b, std::optional<double> weight) {
  if (a == b) throw DomainError("self-loop on node " + std::to_string(a));
  const Edge e = make_edge(a, b);
  auto [it, inserted] = edge_slot_.emplace(edge_key(e), edges_.size());
  if (inserted)
    edges_.emplace_back(e, weight);
  else
    edges_[it->second].second = weight;
}

Graph Graph::Builder::build() const {
  std::vector<Edge> edges;
  edges.reserve(edges_.size());
  bool weighted = false;
  for (const auto& [e, w] : edges_) {
    edges.push_back(e);
    weighted = weighted || w.has_value();
  }
  std::optional<std::vector<double>> weights;
  if (weighted) {
    weights.emplace();
    for (const auto& [e, w] : edges_) weights->push_back(w.value_or(1.0));
  }
  return Graph::from_edges(num_nodes(), edges, std::move(weights), labels_);
}

Graph parse_graph(std::string_view text) {
  Graph::Builder builder;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_comment_or_blank(line)) continue;

    std::istringstream in{std::string(line)};
    std::vector<std::string> tokens;
    for (std::string tok; in >> tok;) tokens.push_back(tok);
    if (tokens.size() == 1) {
      builder.add_node(tokens[0]);
    } else if (tokens.size() == 2 || tokens.size() == 3) {
      if (tokens[0] == tokens[1]) throw ParseError("self-loop on '" + tokens[0] + "'", line_no);
      std::optional<double> weight;
      if (tokens.size() == 3) {
        double w = 0.0;
        const char* first = tokens[2].data();
        const char* last = first + tokens[2].size();
        auto [ptr, ec] = std::from_chars(first, last, w);
        if (ec != std::errc() || ptr != last)
          throw ParseError("malformed weight '" + tokens[2] + "'", line_no);
        weight = w;
      }
      builder.add_edge(tokens[0], tokens[1], weight);
    } else {
      throw ParseError("expected '<a> <b> [<weight>]', got " + std::to_string(tokens.size()) + " fields",
                       line_no);
    }
  }
  if (builder.num_nodes() == 0) throw ParseError("graph has no nodes", 0);
  return builder.build();
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_graph(buf.str());
}

std::string serialize_graph(const Graph& g) {
  std::ostringstream out;
  out.precision(17);
  std::vector<bool> touched(g.num_nodes(), false);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const Edge e = g.edges()[k];
    touched[e.u] = touched[e.v] = true;
  }
  // Declare every node first so ids survive a re-parse in the same order.
  for (NodeId v = 0; v < g.num_nodes(); ++v) out << g.label(v) << '\n';
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const Edge e = g.edges()[k];
    out << g.label(e.u) << ' ' << g.label(e.v);
    if (g.has_weights()) out << ' ' << g.weight(k);
    out << '\n';
  }
  return out.str();
}

NodeSet neighbors_of_set(const Graph& g, std::span<const NodeId> s) {
  std::vector<char> mark(g.num_nodes(), 0);
  NodeSet out;
  for (NodeId v : s) {
    if (!g.contains(v)) throw DomainError("node " + std::to_string(v) + " outside graph");
    for (NodeId w : g.neighbors(v)) {
      if (!mark[w]) {
        mark[w] = 1;
        out.push_back(w);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_connected(const Graph& g) {
  const int n = g.num_nodes();
  if (n <= 1) return true;
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (NodeId w : g.neighbors(v)) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

Graph make_path(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph::from_edges(n, edges);
}

Graph make_grid(int rows, int cols) {
  std::vector<Edge> edges;
  auto id = [cols](int r, int c) { return static_cast<NodeId>(r * cols + c); };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1)});
      if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c)});
    }
  }
  return Graph::from_edges(rows * cols, edges);
}

Graph make_complete(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
  return Graph::from_edges(n, edges);
}

Graph make_hub_grid(int side, int hubs) {
  const Graph grid = make_grid(side, side);
  std::vector<Edge> edges = grid.edges();
  const int base = side * side;
  for (int h = 0; h < hubs; ++h) {
    for (int v = 0; v < base; ++v) edges.push_back({v, base + h});
    for (int h2 = h + 1; h2 < hubs; ++h2) edges.push_back({base + h, base + h2});
  }
  return Graph::from_edges(base + hubs, edges);
}

std::vector<NodeId> labels_to_ids(const Graph& g, std::span<const std::string> labels) {
  std::vector<NodeId> ids;
  ids.reserve(labels.size());
  for (const auto& l : labels) {
    auto id = g.find_label(l);
    if (!id) throw DomainError("unknown node label '" + l + "'");
    ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::string format_label_set(const Graph& g, std::span<const NodeId> nodes) {
  std::string out = "[";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += ',';
    out += g.label(nodes[i]);
  }
  return out + "]";
}

}  // namespace bt
