#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = btcli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("bt_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("build prints the block-tree and a summary line") {
  const Run r = run({"build", oracle::fixture("fig1a.edges"), "--root", "2,3"});
  CHECK(r.code == btcli::kOk);
  CHECK(r.out.find("clusters=5 block_width=3") != std::string::npos);
  const auto doc = nlohmann::json::parse(r.out.substr(0, r.out.find("clusters=")));
  CHECK(doc["clusters"][0] == nlohmann::json::array({"2", "3"}));
  CHECK(doc["clusters"][1] == nlohmann::json::array({"1"}));
}

TEST_CASE("build without a root runs the heuristic search") {
  const Run r = run({"build", oracle::fixture("grid4.edges")});
  CHECK(r.code == btcli::kOk);
  CHECK(r.out.find("block_width=4") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == btcli::kUsage);
  CHECK(run({"frobnicate"}).code == btcli::kUsage);
  CHECK(run({"build", oracle::fixture("disconnected.edges"), "--root", "1"}).code == btcli::kGraph);
  CHECK(run({"build", oracle::fixture("nope.edges")}).code == btcli::kGraph);
  CHECK(run({"btw", oracle::fixture("grid10.edges"), "--mode", "exact"}).code == btcli::kCap);
  CHECK(run({"btw", oracle::fixture("grid4.edges"), "--mode", "sideways"}).code == btcli::kUsage);
}

TEST_CASE("btw reports the width, root and mode") {
  const Run r = run({"btw", oracle::fixture("fig1c.edges"), "--mode", "exact"});
  CHECK(r.code == btcli::kOk);
  CHECK(r.out.find("btw<=2 root=[") != std::string::npos);
  CHECK(r.out.find("mode=exact") != std::string::npos);
}

TEST_CASE("infer with brute-force check") {
  const Run r = run({"infer", oracle::fixture("fig1c_model.json"), "--root", "1", "--check-brute-force"});
  CHECK(r.code == btcli::kOk);
  CHECK(r.out.find("brute-force check: PASS (max dev < 1e-10)") != std::string::npos);
  CHECK(r.out.find("root=[1]") != std::string::npos);
}

TEST_CASE("infer on a boundary model roots at the boundary") {
  const Run r = run({"infer", oracle::fixture("fig3_boundary.json")});
  CHECK(r.code == btcli::kOk);
  CHECK(r.out.find("root=[a,b,c,d]") != std::string::npos);
}

TEST_CASE("infer honours the cost budget") {
  setenv("BT_COST_BUDGET", "3", 1);
  const Run r = run({"infer", oracle::fixture("fig1a_model.json"), "--root", "1"});
  unsetenv("BT_COST_BUDGET");
  CHECK(r.code == btcli::kBudget);
}

TEST_CASE("exact estimate of the identity model") {
  const Run r = run({"estimate", oracle::fixture("identity3.triplets"), oracle::fixture("identity3_obs.json")});
  REQUIRE(r.code == btcli::kOk);
  const auto doc = nlohmann::json::parse(r.out);
  const auto x = doc["xhat"].get<std::vector<double>>();
  REQUIRE(x.size() == 3);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(x[2] == doctest::Approx(-3.0).epsilon(1e-14));
}

TEST_CASE("iterative estimate writes a trace") {
  const fs::path dir = scratch("estimate");
  const std::string trace = (dir / "trace.csv").string();
  const Run r = run({"estimate", oracle::fixture("grid7.triplets"), oracle::fixture("grid7_obs.json"), "--mode",
                     "iterative", "--strategy", "bt:3", "--trace", trace});
  CHECK(r.code == btcli::kOk);
  CHECK(r.out.find("converged=true") != std::string::npos);
  std::ifstream in(trace);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,residual,subgraph_kind,wall_ms");
  CHECK(run({"estimate", oracle::fixture("grid7.triplets"), oracle::fixture("grid7_obs.json"), "--mode",
             "iterative", "--strategy", "bt:0"})
            .code == btcli::kGraph);
}

TEST_CASE("experiment writes traces and a summary") {
  const fs::path dir = scratch("experiment");
  const Run r = run({"experiment", "--kind", "grid", "--size", "8", "--strategies", "tree,bt:3", "--seeds", "2",
                     "--out", dir.string()});
  REQUIRE(r.code == btcli::kOk);
  CHECK(fs::exists(dir / "trace_tree_seed0.csv"));
  CHECK(fs::exists(dir / "trace_bt-3_seed1.csv"));
  std::ifstream in(dir / "summary.json");
  const auto doc = nlohmann::json::parse(in);
  CHECK(doc.contains("median_iterations"));
  CHECK(doc["median_iterations"]["bt:3"].get<double>() > 0);
  fs::remove_all(dir);
}
