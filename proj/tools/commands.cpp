#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "bt/approx_est.hpp"
#include "bt/block_tree.hpp"
#include "bt/discrete.hpp"
#include "bt/gaussian.hpp"
#include "bt/io.hpp"
#include "bt/spanning.hpp"

namespace btcli {

using namespace bt;

namespace {

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    for (std::string tok; std::getline(ss, tok, ',');)
      if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

double cost_budget() {
  const char* env = std::getenv("BT_COST_BUDGET");
  if (!env || !*env) return InferenceOptions{}.budget;
  char* end = nullptr;
  const double v = std::strtod(env, &end);
  if (end == env || *end != '\0' || !(v > 0.0)) throw DomainError("BT_COST_BUDGET must be a positive number");
  return v;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot write '" + path + "'");
  f << text;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---- build -----------------------------------------------------------------

struct BuildArgs {
  std::string graph;
  std::vector<std::string> root;
  std::string out;
};

int cmd_build(const BuildArgs& a, std::ostream& out) {
  const Graph g = load_graph(a.graph);
  const auto labels = split_list(a.root);
  NodeSet root = labels.empty() ? heuristic_root_search(g).root : labels_to_ids(g, labels);
  const BlockTree bt = construct_block_tree(g, root);
  const std::string doc = block_tree_json(g, bt).dump();
  if (!a.out.empty())
    write_file(a.out, doc + "\n");
  else
    out << doc << "\n";
  out << "clusters=" << bt.num_clusters() << " block_width=" << block_width(bt) << "\n";
  return kOk;
}

// ---- btw -------------------------------------------------------------------

struct BtwArgs {
  std::string graph;
  std::string mode = "heuristic";
  int cap = kDefaultExhaustiveCap;
};

int cmd_btw(const BtwArgs& a, std::ostream& out) {
  const Graph g = load_graph(a.graph);
  const RootSearchResult r =
      a.mode == "exact" ? exhaustive_block_treewidth(g, a.cap) : heuristic_root_search(g);
  out << "btw<=" << r.width << " root=" << format_label_set(g, r.root) << " mode=" << a.mode << "\n";
  return kOk;
}

// ---- infer -----------------------------------------------------------------

struct InferArgs {
  std::string model;
  std::vector<std::string> root;
  bool check = false;
  bool no_normalize = false;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const DiscreteModel m = load_discrete_model(a.model);
  InferenceOptions opt;
  opt.budget = cost_budget();
  opt.normalize_messages = !a.no_normalize;
  const auto labels = split_list(a.root);

  EdgeFactorization f;
  if (m.boundary) {
    if (!labels.empty()) {
      NodeSet r = labels_to_ids(m.graph, labels);
      if (r != m.boundary->nodes) throw DomainError("boundary models are rooted at the boundary set");
    }
    f = boundary_block_tree(m).factorization;
  } else {
    const NodeSet root = labels.empty() ? heuristic_root_search(m.graph).root : labels_to_ids(m.graph, labels);
    f = map_potentials(m, construct_block_tree(m.graph, root));
  }
  const MarginalSet marg = marginals_from_factorization(f, opt);
  const BlockTree& bt = f.block_tree;

  Json doc;
  doc["root"] = Json::array();
  for (NodeId v : bt.clusters[0]) doc["root"].push_back(m.graph.label(v));
  doc["block_width"] = block_width(bt);
  doc["marginals"] = marginals_json(m.graph, marg);
  out << std::setprecision(17) << doc.dump() << "\n";
  out << "root=" << format_label_set(m.graph, bt.clusters[0]) << "\n";

  if (a.check) {
    MarginalSet ref;
    try {
      ref = brute_force_marginals(m);
    } catch (const CapError& e) {
      out << "brute-force check: SKIPPED (" << e.what() << ")\n";
      return kOk;
    }
    double dev = 0.0;
    for (std::size_t v = 0; v < ref.node.size(); ++v)
      for (std::size_t s = 0; s < ref.node[v].size(); ++s)
        dev = std::max(dev, std::abs(ref.node[v][s] - marg.node[v][s]));
    if (dev < 1e-10) {
      out << "brute-force check: PASS (max dev < 1e-10)\n";
    } else {
      out << "brute-force check: FAIL (max dev " << dev << ")\n";
      return kNumerical;
    }
  }
  return kOk;
}

// ---- estimate --------------------------------------------------------------

struct EstimateArgs {
  std::string jfile;
  std::string obsfile;
  std::string mode = "exact";
  std::string strategy = "bt:3";
  double tol = 1e-6;
  int max_iter = 2000;
  int refresh = 1;
  std::string trace;
  std::string out;
};

Estimate reference_estimate(const GaussianModel& m, const Observation& obs) {
  if (m.size() <= 2000) return exact_estimate(m, obs);
  return exact_estimate(m, obs, construct_block_tree(m.graph(), heuristic_root_search(m.graph()).root));
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const GaussianModel m(load_triplets(a.jfile));
  const Observation obs = load_observation(a.obsfile, m.size());
  Json doc;
  if (a.mode == "exact") {
    // Block elimination needs a connected graph; other inputs take the dense path.
    const Estimate e = is_connected(m.graph())
                           ? exact_estimate(m, obs, construct_block_tree(m.graph(), heuristic_root_search(m.graph()).root))
                           : exact_estimate(m, obs);
    doc["xhat"] = vector_json(e.xhat);
    doc["phat_diag"] = vector_json(e.phat_diag);
  } else if (a.mode == "iterative") {
    Strategy s = Strategy::parse(a.strategy);
    s.refresh = a.refresh;
    const InformationForm f = information_form(m, obs);
    IterationOptions opt;
    opt.tol = a.tol;
    opt.max_iter = a.max_iter;
    const IterationTrace tr = iterate_estimate(f.V, f.b, s, opt);
    const Eigen::VectorXd x = tr.x.col(0);
    const Estimate ref = reference_estimate(m, obs);
    const double dev = (x - ref.xhat).cwiseAbs().maxCoeff();
    doc["xhat"] = vector_json(x);
    doc["strategy"] = s.name();
    doc["iterations"] = tr.iterations;
    doc["converged"] = tr.converged;
    doc["final_residual"] = tr.residual.back();
    doc["max_abs_deviation"] = dev;
    if (!a.trace.empty()) write_file(a.trace, trace_csv(tr));
    if (!a.out.empty())
      write_file(a.out, doc.dump() + "\n");
    else
      out << std::setprecision(17) << doc.dump() << "\n";
    out << "iterations=" << tr.iterations << " converged=" << (tr.converged ? "true" : "false")
        << " max_abs_deviation=" << std::setprecision(6) << dev << "\n";
    return kOk;
  } else {
    throw CLI::ValidationError("--mode", "expected exact or iterative");
  }
  if (!a.out.empty())
    write_file(a.out, doc.dump() + "\n");
  else
    out << std::setprecision(17) << doc.dump() << "\n";
  return kOk;
}

// ---- experiment ------------------------------------------------------------

struct ExperimentArgs {
  std::string kind = "grid";
  int size = 10;
  int hubs = 2;
  std::string graph;
  std::vector<std::string> strategies{"tree", "bt:3", "bt:5"};
  int seeds = 1;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  double ratio = 1e-6;
  int max_iter = 2000;
  std::string out = "experiment_out";
  int jobs = 1;
  bool error_covariance = false;
};

struct Trial {
  int seed_index = 0;
  std::size_t strategy = 0;
  bool ok = false;
  std::string error;
  IterationTrace trace;
  std::optional<IterationTrace> errcov;
  double fixed_point = 0.0;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  if (a.seeds < 1) throw CLI::ValidationError("--seeds", "need at least one seed");
  if (!(a.tol > 0.0)) throw CLI::ValidationError("--tol", "must be positive");
  if (a.jobs < 1) throw CLI::ValidationError("--jobs", "must be positive");
  const auto names = split_list(a.strategies);
  if (names.empty()) throw CLI::ValidationError("--strategies", "need at least one strategy");
  std::vector<Strategy> strategies;
  for (const auto& s : names) strategies.push_back(Strategy::parse(s));

  Graph g;
  if (a.kind == "grid")
    g = make_grid(a.size, a.size);
  else if (a.kind == "hub-grid")
    g = make_hub_grid(a.size, a.hubs);
  else if (a.kind == "file")
    g = load_graph(a.graph);
  else
    throw CLI::ValidationError("--kind", "expected grid, hub-grid or file");

  // Models per seed; the splitting block-tree depends only on the graph.
  std::vector<GeneratedModel> models;
  std::vector<std::uint64_t> trial_seeds;
  for (int i = 0; i < a.seeds; ++i) {
    trial_seeds.push_back(splitmix64(a.seed + static_cast<std::uint64_t>(i)));
    models.push_back(generate_model({g, trial_seeds.back()}));
  }
  const bool needs_base = std::any_of(strategies.begin(), strategies.end(), [](const Strategy& s) {
    return s.kind == Strategy::Kind::block_tree && s.width > 1;
  });
  std::optional<BlockTree> base;
  if (needs_base) base = default_block_tree(g);

  std::vector<Trial> trials;
  for (int i = 0; i < a.seeds; ++i)
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      Trial t;
      t.seed_index = i;
      t.strategy = s;
      trials.push_back(std::move(t));
    }

  const Execution inner = a.jobs > 1 ? Execution::serial : Execution::parallel;
  const auto count = static_cast<std::int64_t>(trials.size());
#pragma omp parallel for num_threads(a.jobs) schedule(dynamic, 1)
  for (std::int64_t t = 0; t < count; ++t) {
    Trial& tr = trials[t];
    try {
      const GeneratedModel& gm = models[tr.seed_index];
      const InformationForm f = information_form(gm.model, gm.obs);
      IterationOptions opt;
      opt.tol = a.tol;
      opt.max_iter = a.max_iter;
      opt.exec = inner;
      opt.base = base ? &*base : nullptr;
      tr.trace = iterate_estimate(f.V, f.b, strategies[tr.strategy], opt);
      tr.fixed_point = (f.b - f.V * tr.trace.x.col(0)).norm() / f.b.norm();
      if (a.error_covariance) tr.errcov = error_covariance_diag(f.V, strategies[tr.strategy], opt).trace;
      tr.ok = true;
    } catch (const std::exception& e) {
      tr.error = e.what();
    }
  }

  std::filesystem::create_directories(a.out);
  Json summary;
  summary["kind"] = a.kind;
  summary["size"] = a.size;
  if (a.kind == "hub-grid") summary["hubs"] = a.hubs;
  summary["nodes"] = g.num_nodes();
  summary["master_seed"] = a.seed;
  summary["tol"] = a.tol;
  summary["ratio"] = a.ratio;
  summary["max_iter"] = a.max_iter;
  summary["trials"] = Json::array();
  std::vector<std::vector<double>> per_strategy(strategies.size());
  std::vector<int> successes(strategies.size(), 0);
  for (const Trial& tr : trials) {
    const std::string name = strategies[tr.strategy].name();
    std::string file = name;
    std::replace(file.begin(), file.end(), ':', '-');
    file += "_seed" + std::to_string(tr.seed_index);
    Json row{{"seed", trial_seeds[tr.seed_index]}, {"seed_index", tr.seed_index}, {"strategy", name}};
    if (!tr.ok) {
      row["error"] = tr.error;
      summary["trials"].push_back(row);
      continue;
    }
    write_file((std::filesystem::path(a.out) / ("trace_" + file + ".csv")).string(), trace_csv(tr.trace));
    if (tr.errcov)
      write_file((std::filesystem::path(a.out) / ("errcov_" + file + ".csv")).string(), trace_csv(*tr.errcov));
    const int to_ratio = tr.trace.iterations_to(a.ratio);
    row["iterations"] = tr.trace.iterations;
    row["iterations_to_ratio"] = to_ratio;
    row["converged"] = tr.trace.converged;
    row["final_residual"] = tr.trace.residual.back();
    row["fixed_point_residual"] = tr.fixed_point;
    if (tr.errcov) {
      row["errcov_iterations"] = tr.errcov->iterations;
      row["errcov_converged"] = tr.errcov->converged;
    }
    summary["trials"].push_back(row);
    ++successes[tr.strategy];
    if (to_ratio >= 0) per_strategy[tr.strategy].push_back(to_ratio);
  }
  summary["median_iterations"] = Json::object();
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    const std::string name = strategies[s].name();
    if (per_strategy[s].empty())
      summary["median_iterations"][name] = nullptr;
    else
      summary["median_iterations"][name] = median(per_strategy[s]);
  }
  write_file((std::filesystem::path(a.out) / "summary.json").string(), summary.dump(2) + "\n");
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    out << "strategy=" << strategies[s].name() << " trials_ok=" << successes[s] << "/" << a.seeds;
    if (!per_strategy[s].empty()) out << " median_iterations=" << median(per_strategy[s]);
    out << "\n";
  }
  const bool all_ok = std::all_of(successes.begin(), successes.end(), [](int k) { return k > 0; });
  return all_ok ? kOk : kNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block-tree graphs: construction, exact inference and approximate Gaussian estimation", "bt"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* c_build = app.add_subcommand("build", "construct the block-tree for a root cluster");
  c_build->add_option("graph", build.graph, "edge-list file")->required();
  c_build->add_option("--root", build.root, "root node labels (comma separated); default: heuristic search");
  c_build->add_option("--out", build.out, "write the JSON here instead of stdout");

  BtwArgs btw;
  auto* c_btw = app.add_subcommand("btw", "block-treewidth upper bound");
  c_btw->add_option("graph", btw.graph, "edge-list file")->required();
  c_btw->add_option("--mode", btw.mode, "exact or heuristic")->check(CLI::IsMember({"exact", "heuristic"}));
  c_btw->add_option("--cap", btw.cap, "largest n accepted by exact mode");

  InferArgs infer;
  auto* c_infer = app.add_subcommand("infer", "exact marginals of a discrete model");
  c_infer->add_option("model", infer.model, "model JSON")->required();
  c_infer->add_option("--root", infer.root, "root node labels (comma separated)");
  c_infer->add_flag("--check-brute-force", infer.check, "compare against exhaustive summation");
  c_infer->add_flag("--no-normalize", infer.no_normalize, "skip per-message normalisation");

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Gaussian estimate from an information matrix and observations");
  c_est->add_option("jfile", est.jfile, "information matrix triplets (1-based)")->required();
  c_est->add_option("obsfile", est.obsfile, "observation JSON")->required();
  c_est->add_option("--mode", est.mode, "exact or iterative")->check(CLI::IsMember({"exact", "iterative"}));
  c_est->add_option("--strategy", est.strategy, "tree, fixed-tree or bt:B");
  c_est->add_option("--tol", est.tol, "stop when ||h|| <= tol ||h0||");
  c_est->add_option("--max-iter", est.max_iter);
  c_est->add_option("--refresh", est.refresh, "iterations between subgraph updates");
  c_est->add_option("--trace", est.trace, "trace CSV path");
  c_est->add_option("--out", est.out, "estimate JSON path");

  ExperimentArgs ex;
  auto* c_ex = app.add_subcommand("experiment", "convergence experiment over random walk-summable models");
  c_ex->add_option("--kind", ex.kind, "grid, hub-grid or file")->check(CLI::IsMember({"grid", "hub-grid", "file"}));
  c_ex->add_option("--size", ex.size, "grid side length");
  c_ex->add_option("--hubs", ex.hubs, "hub count for hub-grid");
  c_ex->add_option("--graph", ex.graph, "edge-list file for kind=file");
  c_ex->add_option("--strategies", ex.strategies, "comma separated list");
  c_ex->add_option("--seeds", ex.seeds, "number of seeds");
  c_ex->add_option("--seed", ex.seed, "master seed");
  c_ex->add_option("--tol", ex.tol);
  c_ex->add_option("--ratio", ex.ratio, "residual ratio reported as iterations_to_ratio");
  c_ex->add_option("--max-iter", ex.max_iter);
  c_ex->add_option("--out", ex.out, "output directory");
  c_ex->add_option("--jobs", ex.jobs, "parallel trials");
  c_ex->add_flag("--error-covariance", ex.error_covariance, "also solve V P = I per trial");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (app.got_subcommand(c_build)) return cmd_build(build, out);
    if (app.got_subcommand(c_btw)) return cmd_btw(btw, out);
    if (app.got_subcommand(c_infer)) return cmd_infer(infer, out);
    if (app.got_subcommand(c_est)) return cmd_estimate(est, out);
    if (app.got_subcommand(c_ex)) return cmd_experiment(ex, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CapError& e) {
    err << "error: " << e.what() << "\n";
    return kCap;
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << "\n";
    return kBudget;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kGraph;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kGraph;
  }
  return kUsage;
}

}  // namespace btcli
