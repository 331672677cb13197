#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <omp.h>

#include "bt/discrete.hpp"
#include "discrete_detail.hpp"

namespace bt {

namespace detail {

std::size_t config_index(std::span<const int> domain_sizes, std::span<const NodeId> nodes, std::span<const int> x) {
  std::size_t idx = 0;
  for (NodeId v : nodes) idx = idx * domain_sizes[v] + x[v];
  return idx;
}

void decode_config(std::span<const int> domain_sizes, std::span<const NodeId> nodes, std::size_t index,
                   std::span<int> digits) {
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const auto k = static_cast<std::size_t>(domain_sizes[nodes[i]]);
    digits[i] = static_cast<int>(index % k);
    index /= k;
  }
}

void check_budget(const EdgeFactorization& f, double budget) {
  const BlockTree& bt = f.block_tree;
  double worst = 0.0;
  int exponent = 0;
  if (f.factors.empty()) {
    worst = static_cast<double>(config_count(f.domain_sizes, bt.clusters[0]));
    exponent = static_cast<int>(bt.clusters[0].size());
  }
  for (const auto& e : f.factors) {
    worst = std::max(worst, static_cast<double>(e.rows) * static_cast<double>(e.cols));
    exponent = std::max(exponent, static_cast<int>(bt.clusters[e.parent].size() + bt.clusters[e.child].size()));
  }
  if (worst > budget)
    throw BudgetError("inference cost " + std::to_string(worst) + " table entries exceeds budget (exponent " +
                          std::to_string(exponent) + ")",
                      exponent);
}

namespace {

void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (s > 0.0)
    for (double& x : v) x /= s;
}

}  // namespace

std::vector<std::vector<double>> upward_messages(const EdgeFactorization& f, bool normalize_messages) {
  const BlockTree& bt = f.block_tree;
  const int l = bt.num_clusters();
  std::vector<std::vector<double>> up(l);
  // Children come after parents in canonical order, so a reverse sweep is leaves-first.
  for (int k = static_cast<int>(f.factors.size()) - 1; k >= 0; --k) {
    const EdgeFactor& e = f.factors[k];
    const int c = e.child;
    std::vector<double> incoming(e.cols, 1.0);
    for (int g : bt.children[c]) {
      const auto& m = up[g];
      for (std::size_t j = 0; j < e.cols; ++j) incoming[j] *= m[j];
    }
    std::vector<double> msg(e.rows, 0.0);
    for (std::size_t i = 0; i < e.rows; ++i) {
      const double* row = e.table.data() + i * e.cols;
      double s = 0.0;
      for (std::size_t j = 0; j < e.cols; ++j) s += row[j] * incoming[j];
      msg[i] = s;
    }
    if (normalize_messages) normalize(msg);
    up[c] = std::move(msg);
  }
  return up;
}

}  // namespace detail

using detail::config_index;
using detail::decode_config;

std::size_t config_count(std::span<const int> domain_sizes, std::span<const NodeId> nodes) {
  std::size_t count = 1;
  for (NodeId v : nodes) {
    const auto k = static_cast<std::size_t>(domain_sizes[v]);
    if (count > std::numeric_limits<std::size_t>::max() / k) return std::numeric_limits<std::size_t>::max();
    count *= k;
  }
  return count;
}

Graph DiscreteModel::structure_graph() const {
  if (!boundary) return graph;
  std::vector<Edge> edges = graph.edges();
  for (auto [b, v] : boundary->arcs) edges.push_back(make_edge(b, v));
  // Marry boundary parents that share an interior child.
  std::vector<std::vector<NodeId>> parents(graph.num_nodes());
  for (auto [b, v] : boundary->arcs) parents[v].push_back(b);
  for (auto& ps : parents) {
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    for (std::size_t i = 0; i < ps.size(); ++i)
      for (std::size_t j = i + 1; j < ps.size(); ++j) edges.push_back(make_edge(ps[i], ps[j]));
  }
  return Graph::from_edges(graph.num_nodes(), edges, std::nullopt, graph.labels());
}

void DiscreteModel::validate() const {
  const int n = graph.num_nodes();
  if (static_cast<int>(domain_sizes.size()) != n) throw DomainError("domain_sizes must have one entry per node");
  for (int k : domain_sizes)
    if (k < 2) throw DomainError("every domain size must be >= 2");

  std::set<std::pair<NodeId, NodeId>> arcs;
  std::vector<char> is_boundary(n, 0);
  if (boundary) {
    if (boundary->priors.size() != boundary->nodes.size())
      throw DomainError("one prior table per boundary node required");
    for (std::size_t i = 0; i < boundary->nodes.size(); ++i) {
      const NodeId b = boundary->nodes[i];
      if (!graph.contains(b)) throw DomainError("boundary node outside graph");
      is_boundary[b] = 1;
      const auto& prior = boundary->priors[i];
      if (static_cast<int>(prior.size()) != domain_sizes[b]) throw DomainError("prior size mismatch");
      for (double p : prior)
        if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("prior entries must be strictly positive");
    }
    for (auto [b, v] : boundary->arcs) {
      if (!graph.contains(b) || !graph.contains(v)) throw DomainError("arc endpoint outside graph");
      if (!is_boundary[b] || is_boundary[v]) throw DomainError("arcs must run from boundary to interior nodes");
      arcs.insert({std::min(b, v), std::max(b, v)});
    }
    for (const Edge& e : graph.edges())
      if (is_boundary[e.u] || is_boundary[e.v])
        throw DomainError("boundary nodes connect to the interior through arcs only");
  }

  for (std::size_t p = 0; p < potentials.size(); ++p) {
    const auto& pot = potentials[p];
    if (pot.clique.empty()) throw DomainError("potential with empty clique");
    for (std::size_t i = 0; i < pot.clique.size(); ++i) {
      if (!graph.contains(pot.clique[i])) throw DomainError("potential node outside graph");
      if (i && pot.clique[i - 1] >= pot.clique[i]) throw DomainError("clique must be sorted and unique");
    }
    const bool is_arc =
        boundary && pot.clique.size() == 2 && arcs.count({pot.clique[0], pot.clique[1]}) > 0;
    if (!is_arc) {
      for (std::size_t i = 0; i < pot.clique.size(); ++i)
        for (std::size_t j = i + 1; j < pot.clique.size(); ++j)
          if (!graph.has_edge(pot.clique[i], pot.clique[j]))
            throw DomainError("potential " + std::to_string(p) + " is not over a clique of the graph");
    }
    if (boundary && std::all_of(pot.clique.begin(), pot.clique.end(), [&](NodeId v) { return is_boundary[v]; }))
      throw DomainError("potentials on boundary nodes alone are not allowed; use priors");
    if (pot.table.size() != config_count(domain_sizes, pot.clique))
      throw DomainError("potential " + std::to_string(p) + " table size mismatch");
    for (double t : pot.table)
      if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError("potential " + std::to_string(p) + " has a non-positive entry");
  }
}

double EdgeFactorization::log_value(std::span<const int> x) const {
  const BlockTree& bt = block_tree;
  if (factors.empty()) return root_log_scale + std::log(root_table[config_index(domain_sizes, bt.clusters[0], x)]);
  double s = 0.0;
  for (const auto& e : factors) {
    const std::size_t r = config_index(domain_sizes, bt.clusters[e.parent], x);
    const std::size_t c = config_index(domain_sizes, bt.clusters[e.child], x);
    s += e.log_scale + std::log(e.table[r * e.cols + c]);
  }
  return s;
}

namespace {

// Per-config contribution of clique members living in one cluster.
std::vector<std::size_t> partial_indices(const DiscreteModel& m, const NodeSet& cluster, const Potential& pot) {
  std::vector<std::size_t> stride(pot.clique.size());
  std::size_t s = 1;
  for (std::size_t i = pot.clique.size(); i-- > 0;) {
    stride[i] = s;
    s *= static_cast<std::size_t>(m.domain_sizes[pot.clique[i]]);
  }
  std::vector<std::pair<std::size_t, std::size_t>> members;  // (position in cluster, stride)
  for (std::size_t i = 0; i < pot.clique.size(); ++i) {
    auto it = std::lower_bound(cluster.begin(), cluster.end(), pot.clique[i]);
    if (it != cluster.end() && *it == pot.clique[i])
      members.emplace_back(static_cast<std::size_t>(it - cluster.begin()), stride[i]);
  }
  const std::size_t count = config_count(m.domain_sizes, cluster);
  std::vector<std::size_t> out(count, 0);
  std::vector<int> digits(cluster.size());
  for (std::size_t c = 0; c < count; ++c) {
    decode_config(m.domain_sizes, cluster, c, digits);
    std::size_t idx = 0;
    for (auto [pos, st] : members) idx += static_cast<std::size_t>(digits[pos]) * st;
    out[c] = idx;
  }
  return out;
}

}  // namespace

EdgeFactorization map_potentials(const DiscreteModel& m, const BlockTree& bt) {
  const int l = bt.num_clusters();
  if (bt.num_nodes() != m.graph.num_nodes()) throw DomainError("block-tree and model sizes differ");
  EdgeFactorization f;
  f.block_tree = bt;
  f.domain_sizes = m.domain_sizes;
  f.assignment.assign(m.potentials.size(), -1);

  std::vector<int> edge_of_child(l, -1);
  for (std::size_t k = 0; k < bt.edges.size(); ++k) edge_of_child[bt.edges[k].second] = static_cast<int>(k);

  for (std::size_t p = 0; p < m.potentials.size(); ++p) {
    std::vector<int> touched;
    for (NodeId v : m.potentials[p].clique) touched.push_back(bt.cluster_of[v]);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    int edge = -1;
    if (touched.size() == 1) {
      const int c = touched[0];
      if (c != 0)
        edge = edge_of_child[c];
      else if (l > 1)
        edge = edge_of_child[bt.children[0].front()];
    } else if (touched.size() == 2 && bt.adjacent(touched[0], touched[1])) {
      const int child = bt.parent[touched[1]] == touched[0] ? touched[1] : touched[0];
      edge = edge_of_child[child];
    } else {
      throw DomainError("potential " + std::to_string(p) +
                        " spans non-adjacent clusters; block-tree is inconsistent with the model");
    }
    f.assignment[p] = edge;
  }

  if (l == 1) {
    const std::size_t count = config_count(m.domain_sizes, bt.clusters[0]);
    std::vector<double> acc(count, 0.0);
    for (const auto& pot : m.potentials) {
      const auto idx = partial_indices(m, bt.clusters[0], pot);
      for (std::size_t c = 0; c < count; ++c) acc[c] += std::log(pot.table[idx[c]]);
    }
    const double mx = *std::max_element(acc.begin(), acc.end());
    f.root_table.resize(count);
    for (std::size_t c = 0; c < count; ++c) f.root_table[c] = std::exp(acc[c] - mx);
    f.root_log_scale = mx;
    return f;
  }

  f.factors.resize(bt.edges.size());
  for (std::size_t k = 0; k < bt.edges.size(); ++k) {
    auto& e = f.factors[k];
    e.parent = bt.edges[k].first;
    e.child = bt.edges[k].second;
    e.rows = config_count(m.domain_sizes, bt.clusters[e.parent]);
    e.cols = config_count(m.domain_sizes, bt.clusters[e.child]);
  }
  detail::check_budget(f, std::numeric_limits<double>::infinity());

  std::vector<std::vector<double>> acc(f.factors.size());
  for (std::size_t k = 0; k < f.factors.size(); ++k) acc[k].assign(f.factors[k].rows * f.factors[k].cols, 0.0);
  for (std::size_t p = 0; p < m.potentials.size(); ++p) {
    const auto& pot = m.potentials[p];
    const int k = f.assignment[p];
    auto& e = f.factors[k];
    const auto rowpart = partial_indices(m, bt.clusters[e.parent], pot);
    const auto colpart = partial_indices(m, bt.clusters[e.child], pot);
    auto& a = acc[k];
    for (std::size_t r = 0; r < e.rows; ++r)
      for (std::size_t c = 0; c < e.cols; ++c) a[r * e.cols + c] += std::log(pot.table[rowpart[r] + colpart[c]]);
  }
  for (std::size_t k = 0; k < f.factors.size(); ++k) {
    auto& e = f.factors[k];
    const double mx = *std::max_element(acc[k].begin(), acc[k].end());
    e.table.resize(acc[k].size());
    for (std::size_t i = 0; i < acc[k].size(); ++i) e.table[i] = std::exp(acc[k][i] - mx);
    e.log_scale = mx;
  }
  return f;
}

namespace {

void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (s > 0.0)
    for (double& x : v) x /= s;
}

std::vector<double> node_marginal_from_cluster(const EdgeFactorization& f, int cluster, std::size_t pos,
                                               const std::vector<double>& joint) {
  const NodeSet& nodes = f.block_tree.clusters[cluster];
  std::vector<double> out(f.domain_sizes[nodes[pos]], 0.0);
  std::vector<int> digits(nodes.size());
  for (std::size_t c = 0; c < joint.size(); ++c) {
    decode_config(f.domain_sizes, nodes, c, digits);
    out[digits[pos]] += joint[c];
  }
  normalize(out);
  return out;
}

}  // namespace

MarginalSet marginals_from_factorization(const EdgeFactorization& f, const InferenceOptions& opt) {
  const BlockTree& bt = f.block_tree;
  const int l = bt.num_clusters();
  detail::check_budget(f, opt.budget);
  MarginalSet out;
  out.cluster.resize(l);
  out.node.resize(bt.num_nodes());

  if (l == 1) {
    out.cluster[0] = f.root_table;
    normalize(out.cluster[0]);
  } else {
    const auto up = detail::upward_messages(f, opt.normalize_messages);
    std::vector<std::vector<double>> down(l);
    if (opt.edge_joints) out.edge.resize(f.factors.size());
    std::vector<int> edge_of_child(l, -1);
    for (std::size_t k = 0; k < f.factors.size(); ++k) edge_of_child[f.factors[k].child] = static_cast<int>(k);

    for (int p = 0; p < l; ++p) {
      const auto& kids = bt.children[p];
      const std::size_t rows = config_count(f.domain_sizes, bt.clusters[p]);
      // prefix[i] = down[p] * prod_{j<i} up[kids[j]]; suffix built on the fly.
      std::vector<std::vector<double>> prefix(kids.size() + 1, std::vector<double>(rows, 1.0));
      if (p != 0) prefix[0] = down[p];
      for (std::size_t i = 0; i < kids.size(); ++i)
        for (std::size_t r = 0; r < rows; ++r) prefix[i + 1][r] = prefix[i][r] * up[kids[i]][r];
      out.cluster[p] = prefix[kids.size()];
      normalize(out.cluster[p]);

      std::vector<double> suffix(rows, 1.0);
      for (std::size_t i = kids.size(); i-- > 0;) {
        const int c = kids[i];
        const EdgeFactor& e = f.factors[edge_of_child[c]];
        std::vector<double> excl(rows);
        for (std::size_t r = 0; r < rows; ++r) excl[r] = prefix[i][r] * suffix[r];
        std::vector<double> msg(e.cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          const double w = excl[r];
          const double* row = e.table.data() + r * e.cols;
          for (std::size_t j = 0; j < e.cols; ++j) msg[j] += w * row[j];
        }
        if (opt.normalize_messages) normalize(msg);
        if (opt.edge_joints) {
          std::vector<double> below(e.cols, 1.0);
          for (int g : bt.children[c])
            for (std::size_t j = 0; j < e.cols; ++j) below[j] *= up[g][j];
          std::vector<double> joint(rows * e.cols);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < e.cols; ++j)
              joint[r * e.cols + j] = excl[r] * e.table[r * e.cols + j] * below[j];
          normalize(joint);
          out.edge[edge_of_child[c]] = std::move(joint);
        }
        down[c] = std::move(msg);
        for (std::size_t r = 0; r < rows; ++r) suffix[r] *= up[c][r];
      }
    }
  }

  for (int c = 0; c < l; ++c)
    for (std::size_t pos = 0; pos < bt.clusters[c].size(); ++pos)
      out.node[bt.clusters[c][pos]] = node_marginal_from_cluster(f, c, pos, out.cluster[c]);
  return out;
}

namespace detail {
void fold_boundary(EdgeFactorization& f, const DiscreteModel& m);
}

MarginalSet bt_marginals(const DiscreteModel& m, const BlockTree& bt, const InferenceOptions& opt) {
  m.validate();
  EdgeFactorization f = map_potentials(m, bt);
  if (m.boundary) detail::fold_boundary(f, m);
  return marginals_from_factorization(f, opt);
}

namespace {

struct Enumeration {
  std::vector<NodeId> outer;  // boundary nodes (normalised per configuration)
  std::vector<NodeId> inner;
  std::size_t outer_count = 1;
  std::size_t inner_count = 1;
};

}  // namespace

MarginalSet brute_force_marginals(const DiscreteModel& m, Execution exec, std::size_t max_states) {
  m.validate();
  const int n = m.graph.num_nodes();
  Enumeration en;
  std::vector<char> is_boundary(n, 0);
  if (m.boundary)
    for (NodeId b : m.boundary->nodes) is_boundary[b] = 1;
  for (NodeId v = 0; v < n; ++v) (is_boundary[v] ? en.outer : en.inner).push_back(v);
  en.outer_count = config_count(m.domain_sizes, en.outer);
  en.inner_count = config_count(m.domain_sizes, en.inner);
  const double total = static_cast<double>(en.outer_count) * static_cast<double>(en.inner_count);
  if (total > static_cast<double>(max_states))
    throw CapError("brute force refused: " + std::to_string(total) + " joint states exceed " +
                   std::to_string(max_states));

  // Offsets of each node's slot in a flattened marginal array.
  std::vector<std::size_t> offset(n + 1, 0);
  for (NodeId v = 0; v < n; ++v) offset[v + 1] = offset[v] + m.domain_sizes[v];
  const std::size_t width = offset[n];

  std::vector<double> log_pot(0);
  double shift = 0.0;
  std::vector<std::vector<double>> logs(m.potentials.size());
  for (std::size_t p = 0; p < m.potentials.size(); ++p) {
    logs[p].resize(m.potentials[p].table.size());
    for (std::size_t i = 0; i < logs[p].size(); ++i) logs[p][i] = std::log(m.potentials[p].table[i]);
    shift += *std::max_element(logs[p].begin(), logs[p].end());
  }

  // Work items: (outer config, inner block). Blocks are fixed so the
  // reduction order, and therefore the result, does not depend on threads.
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks_per_outer = (en.inner_count + kBlock - 1) / kBlock;
  const std::size_t items = en.outer_count * blocks_per_outer;
  std::vector<double> item_z(items, 0.0);
  std::vector<double> item_marg(items * width, 0.0);

  auto run_item = [&](std::size_t item) {
    const std::size_t o = item / blocks_per_outer;
    const std::size_t begin = (item % blocks_per_outer) * kBlock;
    const std::size_t end = std::min(en.inner_count, begin + kBlock);
    std::vector<int> x(n, 0);
    std::vector<int> digits(std::max(en.outer.size(), en.inner.size()));
    decode_config(m.domain_sizes, en.outer, o, digits);
    for (std::size_t i = 0; i < en.outer.size(); ++i) x[en.outer[i]] = digits[i];
    decode_config(m.domain_sizes, en.inner, begin, digits);
    for (std::size_t i = 0; i < en.inner.size(); ++i) x[en.inner[i]] = digits[i];
    double* marg = item_marg.data() + item * width;
    double z = 0.0;
    for (std::size_t s = begin; s < end; ++s) {
      double lw = -shift;
      for (std::size_t p = 0; p < m.potentials.size(); ++p)
        lw += logs[p][config_index(m.domain_sizes, m.potentials[p].clique, x)];
      const double w = std::exp(lw);
      z += w;
      for (NodeId v = 0; v < n; ++v) marg[offset[v] + x[v]] += w;
      // Odometer increment over inner nodes, last varying fastest.
      for (std::size_t i = en.inner.size(); i-- > 0;) {
        const NodeId v = en.inner[i];
        if (++x[v] < m.domain_sizes[v]) break;
        x[v] = 0;
      }
    }
    item_z[item] = z;
  };

  const auto item_count = static_cast<std::int64_t>(items);
  if (exec == Execution::serial) {
    for (std::int64_t i = 0; i < item_count; ++i) run_item(static_cast<std::size_t>(i));
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < item_count; ++i) run_item(static_cast<std::size_t>(i));
  }

  std::vector<double> acc(width, 0.0);
  for (std::size_t o = 0; o < en.outer_count; ++o) {
    double z = 0.0;
    for (std::size_t b = 0; b < blocks_per_outer; ++b) z += item_z[o * blocks_per_outer + b];
    double prior = 1.0;
    if (m.boundary) {
      std::vector<int> digits(en.outer.size());
      decode_config(m.domain_sizes, en.outer, o, digits);
      for (std::size_t i = 0; i < en.outer.size(); ++i) {
        const auto& table = m.boundary->priors[i];
        const double s = std::accumulate(table.begin(), table.end(), 0.0);
        prior *= table[digits[i]] / s;
      }
    }
    // Without a boundary there is one outer config and the scale is irrelevant.
    const double scale = m.boundary ? prior / z : 1.0;
    for (std::size_t b = 0; b < blocks_per_outer; ++b) {
      const double* marg = item_marg.data() + (o * blocks_per_outer + b) * width;
      for (std::size_t i = 0; i < width; ++i) acc[i] += scale * marg[i];
    }
  }

  MarginalSet out;
  out.node.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    out.node[v].assign(acc.begin() + static_cast<std::ptrdiff_t>(offset[v]),
                       acc.begin() + static_cast<std::ptrdiff_t>(offset[v + 1]));
    normalize(out.node[v]);
  }
  return out;
}

}  // namespace bt
