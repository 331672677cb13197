// Serial reference vs OpenMP kernels on the hot paths.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "bt/approx_est.hpp"
#include "bt/block_elimination.hpp"
#include "bt/discrete.hpp"
#include "bt/spanning.hpp"

using namespace bt;
using Clock = std::chrono::steady_clock;

namespace {

double best_ms(const std::function<void()>& f, int reps = 3) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, const std::function<void(Execution)>& f) {
  const double s = best_ms([&] { f(Execution::serial); });
  const double p = best_ms([&] { f(Execution::parallel); });
  std::printf("%-28s serial %10.2f ms  parallel %10.2f ms  speedup %5.2fx\n", name, s, p, s / p);
}

DiscreteModel ising(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  DiscreteModel m;
  m.graph = make_grid(rows, cols);
  m.domain_sizes.assign(m.graph.num_nodes(), 2);
  for (const Edge& e : m.graph.edges()) m.potentials.push_back({{e.u, e.v}, {u(rng), u(rng), u(rng), u(rng)}});
  return m;
}

}  // namespace

int main() {
  const Graph g = make_grid(60, 60);
  std::vector<NodeSet> roots;
  for (NodeId v = 0; v < g.num_nodes(); v += 3) roots.push_back({v});
  row("widths_for_roots 60x60", [&](Execution ex) { widths_for_roots(g, roots, ex); });

  const DiscreteModel m = ising(4, 5, 1);
  row("brute_force 4x5 binary", [&](Execution ex) { brute_force_marginals(m, ex); });

  GeneratorSpec spec;
  spec.graph = make_grid(150, 150);
  spec.seed = 3;
  const GeneratedModel gm = generate_model(spec);
  const InformationForm f = information_form(gm.model, gm.obs);
  const BlockTree bt = construct_block_tree(spec.graph, NodeSet{0});
  row("block solve 150x150", [&](Execution ex) {
    const BlockTreeSolver s(f.V, bt, OffTreeEntries::reject, ex);
    s.solve(f.b);
  });

  const Graph small = make_grid(40, 40);
  spec.graph = small;
  const GeneratedModel gs = generate_model(spec);
  const InformationForm fs = information_form(gs.model, gs.obs);
  const BlockTree base = default_block_tree(small);
  row("iterate bt:5 40x40", [&](Execution ex) {
    IterationOptions opt;
    opt.exec = ex;
    opt.base = &base;
    iterate_estimate(fs.V, fs.b, Strategy::parse("bt:5"), opt);
  });
  return 0;
}
