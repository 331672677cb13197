#include <algorithm>
#include <limits>

#include <omp.h>

#include "bt/block_tree.hpp"
#include "layering.hpp"

namespace bt {

namespace {

void check_roots(const Graph& g, std::span<const NodeSet> roots) {
  for (const auto& r : roots) {
    if (r.empty()) throw DomainError("root cluster must be non-empty");
    for (NodeId v : r)
      if (!g.contains(v)) throw DomainError("root node outside graph");
  }
}

// Lowest width wins; ties go to the earlier candidate.
std::size_t best_index(std::span<const int> widths) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < widths.size(); ++i)
    if (widths[i] < widths[best]) best = i;
  return best;
}

// Advances `comb` (sorted, size k, values < n) to the next combination in
// lexicographic order. Returns false after the last one.
bool next_combination(std::vector<NodeId>& comb, int n) {
  const int k = static_cast<int>(comb.size());
  int i = k - 1;
  while (i >= 0 && comb[i] == n - k + i) --i;
  if (i < 0) return false;
  ++comb[i];
  for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
  return true;
}

}  // namespace

std::vector<int> widths_for_roots(const Graph& g, std::span<const NodeSet> roots, Execution exec) {
  if (!is_connected(g)) throw GraphError("graph not connected; decompose it into connected components first");
  check_roots(g, roots);
  std::vector<int> widths(roots.size());
  const auto count = static_cast<std::int64_t>(roots.size());
  if (exec == Execution::serial) {
    detail::LayeringWorkspace ws;
    for (std::int64_t i = 0; i < count; ++i) widths[i] = detail::layering_width(g, roots[i], ws);
    return widths;
  }
#pragma omp parallel
  {
    detail::LayeringWorkspace ws;
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < count; ++i) widths[i] = detail::layering_width(g, roots[i], ws);
  }
  return widths;
}

RootSearchResult exhaustive_block_treewidth(const Graph& g, int cap, Execution exec) {
  const int n = g.num_nodes();
  if (n > cap)
    throw CapError("exhaustive search refused: n=" + std::to_string(n) + " exceeds cap " + std::to_string(cap) +
                   "; use heuristic_root_search");
  if (n == 0) throw DomainError("empty graph");
  const int max_size = (n + 1) / 2;

  RootSearchResult best;
  best.width = std::numeric_limits<int>::max();
  constexpr std::size_t kBatch = 1 << 15;
  std::vector<NodeSet> batch;
  auto flush = [&] {
    if (batch.empty()) return;
    const auto widths = widths_for_roots(g, batch, exec);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (widths[i] < best.width || (widths[i] == best.width && batch[i] < best.root)) {
        best.width = widths[i];
        best.root = batch[i];
      }
    }
    batch.clear();
  };
  for (int k = 1; k <= max_size; ++k) {
    std::vector<NodeId> comb(k);
    for (int i = 0; i < k; ++i) comb[i] = i;
    do {
      batch.push_back(comb);
      if (batch.size() == kBatch) flush();
    } while (next_combination(comb, n));
  }
  flush();
  return best;
}

RootSearchResult heuristic_root_search(const Graph& g, int size_threshold, Execution exec) {
  const int n = g.num_nodes();
  if (n == 0) throw DomainError("empty graph");
  std::vector<NodeSet> candidates;
  for (NodeId v = 0; v < n; ++v) candidates.push_back({v});
  if (n <= size_threshold) {
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b) candidates.push_back({a, b});
    std::sort(candidates.begin(), candidates.end());
  }
  auto widths = widths_for_roots(g, candidates, exec);
  const std::size_t first = best_index(widths);
  RootSearchResult best{candidates[first], widths[first]};

  // Greedy augmentation: one full sweep per round, accept only strict decreases.
  while (static_cast<int>(best.root.size()) < n) {
    candidates.clear();
    std::vector<NodeId> added;
    for (NodeId k = 0; k < n; ++k) {
      if (std::binary_search(best.root.begin(), best.root.end(), k)) continue;
      NodeSet r = best.root;
      r.insert(std::upper_bound(r.begin(), r.end(), k), k);
      candidates.push_back(std::move(r));
    }
    widths = widths_for_roots(g, candidates, exec);
    const std::size_t i = best_index(widths);
    if (widths[i] >= best.width) break;
    best = {candidates[i], widths[i]};
  }
  return best;
}

}  // namespace bt
