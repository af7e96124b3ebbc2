#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "conic_ricci/experiment.hpp"

using namespace conic_ricci;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conic_ricci_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kUnstable = R"({
  "kind": "classify",
  "divisor": [
    {"point": [1, 0], "weight": "0.2"},
    {"point": [0, 1], "weight": "0.3"},
    {"point": "inf", "weight": "0.6"}
  ]
})";

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Experiment, ParseDefaults) {
  const ExperimentConfig c = parse_config(kUnstable);
  EXPECT_EQ(c.kind, ExperimentKind::Classify);
  ASSERT_EQ(c.divisor.size(), 3u);
  EXPECT_TRUE(c.divisor[2].at_infinity);
  EXPECT_EQ(c.divisor[1].weight, "0.3");
  EXPECT_EQ(c.divisor[1].im, 1.0);
  EXPECT_EQ(c.seed, kDefaultSeed);
  EXPECT_EQ(c.grid.dimension, 1);
  EXPECT_GT(c.tolerances.mu, 0.0);
}

TEST(Experiment, RoundTrip) {
  ExperimentConfig c = parse_config(kUnstable);
  EXPECT_EQ(parse_config(serialize_config(c)), c);
  c.kind = ExperimentKind::Deform;
  c.grid = {2, 96, 12.5};
  c.tolerances = {1e-7, 3e-11, 2.5e-9};
  c.t_list = {0.5, 0.25, 0.1};
  c.q = 1.3;
  c.out_dir = "some/dir";
  c.seed = 99;
  c.max_time = 12.0;
  c.observe_every = 0.1;
  c.dilation_gauge = false;
  const std::string text = serialize_config(c);
  EXPECT_EQ(parse_config(text), c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
  c.kind = ExperimentKind::Flow;
  c.grid = {1, 512, 14.0};
  c.perturbation = -0.3;
  c.divisor.pop_back();
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Experiment, SchemaDiagnostics) {
  EXPECT_NE(config_error(R"({"kind":"classify","divisor":[{"point":[0,0],"weight":"1.2"}]})").find("(0,1)"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"kind":"classify","divisor":[{"point":[0,0],"weight":0.2}]})").find("divisor[0].weight"),
            std::string::npos);
  EXPECT_NE(config_error("{\"kind\": \"flow\",\n\"grid\": {\"dimension\": 1,}\n}").find("line 2"), std::string::npos);
  EXPECT_NE(config_error(R"({"kind":"classify","colour":1,"divisor":[]})").find("'colour'"), std::string::npos);
  EXPECT_NE(config_error(R"({"kind":"warp"})").find("'kind'"), std::string::npos);
  EXPECT_NE(config_error(R"({"kind":"classify"})").find("'divisor'"), std::string::npos);
  EXPECT_NE(config_error(R"({"kind":"mu","tolerances":{"mu":0}})").find("tolerances.mu"), std::string::npos);
  EXPECT_NE(config_error(R"({"kind":"mu","grid":{"dimension":3}})").find("grid.dimension"), std::string::npos);
  EXPECT_NE(config_error(R"({"kind":"flow","divisor":[{"point":[0,0],"weight":"0.2"},{"point":[1,0],"weight":"0.2"},
                           {"point":"inf","weight":"0.2"}]})")
                .find("at most two"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"kind":"deform","divisor":[{"point":[0,0],"weight":"0.2"},{"point":"inf","weight":"0.6"}],
                           "grid":{"dimension":2,"resolution":64},"deform":{"t":[0.5,0.5]}})")
                .find("deform.t"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"kind":"classify","divisor":[{"point":"inf","weight":"0.2"},{"point":"inf","weight":"0.3"}]})")
                .find("duplicate"),
            std::string::npos);
}

TEST(Experiment, ClassifyRun) {
  ExperimentConfig c = parse_config(kUnstable);
  c.out_dir = scratch("classify").string();
  const RunResult r = run_config(c);
  ASSERT_EQ(r.exit_code, 0) << r.message;
  const json s = json::parse(slurp(fs::path(c.out_dir) / "summary.json"));
  EXPECT_EQ(s["class"], "Unstable");
  EXPECT_EQ(s["predicted"], "SolitonGInfinity");
  EXPECT_EQ(s["beta_k_prime"], "0.5");
  // the stored config omits the directory so that reruns elsewhere compare equal
  EXPECT_EQ(parse_config(slurp(fs::path(c.out_dir) / "config.json")).out_dir, "");

  const fs::path report = fs::path(c.out_dir) / "report.json";
  const ReportResult rep = emit_report(c.out_dir, report.string());
  EXPECT_EQ(rep.exit_code, 0);
  EXPECT_EQ(rep.runs, 1);
  EXPECT_EQ(json::parse(slurp(report))["runs"].size(), 1u);
}

TEST(Experiment, RunErrors) {
  ExperimentConfig c = parse_config(kUnstable);
  EXPECT_EQ(run_config(c).exit_code, 1);  // no directory
  c.kind = ExperimentKind::Compare;
  c.out_dir = scratch("compare_error").string();
  const RunResult r = run_config(c);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(json::parse(slurp(fs::path(c.out_dir) / "summary.json"))["status"], "ERROR");
}

TEST(Experiment, SemiStableFlowEndToEnd) {
  ExperimentConfig c = parse_config(R"({
    "kind": "flow",
    "divisor": [{"point": [0, 0], "weight": "0.4"}, {"point": "inf", "weight": "0.4"}],
    "grid": {"dimension": 1, "resolution": 2048},
    "flow": {"perturbation": 0.5}
  })");
  const fs::path a = scratch("flow_a"), b = scratch("flow_b");
  c.out_dir = a.string();
  const RunResult ra = run_config(c);
  ASSERT_EQ(ra.exit_code, 0) << ra.message;
  const json s = json::parse(slurp(a / "summary.json"));
  EXPECT_EQ(s["status"], "CONVERGED");
  EXPECT_LT(s["final_sup_R_dev"].get<double>(), 1e-4);
  EXPECT_TRUE(s["checks"]["mu_nondecreasing"].get<bool>());
  // identical config and seed give identical bytes
  c.out_dir = b.string();
  ASSERT_EQ(run_config(c).exit_code, 0);
  for (const std::string f : {"config.json", "summary.json", "trace.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  // a different seed perturbs the start differently
  c.seed = 1;
  c.out_dir = scratch("flow_c").string();
  ASSERT_EQ(run_config(c).exit_code, 0);
  EXPECT_NE(slurp(a / "trace.csv"), slurp(fs::path(c.out_dir) / "trace.csv"));
}

TEST(Experiment, NotConvergedExitsTwo) {
  ExperimentConfig c = parse_config(R"({
    "kind": "flow",
    "divisor": [{"point": [0, 0], "weight": "0.2"}, {"point": "inf", "weight": "0.6"}],
    "grid": {"dimension": 1, "resolution": 512},
    "flow": {"max_time": 1.0, "observe_every": 0.5, "perturbation": 0.3}
  })");
  c.out_dir = scratch("flow_short").string();
  const RunResult r = run_config(c);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.status, "NOT_CONVERGED");
}

TEST(Experiment, ReportListsMissingArtifacts) {
  const fs::path root = scratch("report");
  fs::create_directories(root / "broken");
  std::ofstream(root / "broken" / "config.json") << serialize_config(parse_config(kUnstable));
  ExperimentConfig c = parse_config(kUnstable);
  c.out_dir = (root / "ok").string();
  ASSERT_EQ(run_config(c).exit_code, 0);
  const ReportResult r = emit_report(root.string(), (root / "report.json").string());
  EXPECT_EQ(r.exit_code, 0);
  ASSERT_EQ(r.missing.size(), 1u);
  EXPECT_EQ(r.missing[0], "broken/summary.json");
  EXPECT_EQ(json::parse(slurp(root / "report.json"))["missing"].size(), 1u);

  const fs::path empty = scratch("report_empty");
  fs::create_directories(empty);
  EXPECT_EQ(emit_report(empty.string(), (empty / "report.json").string()).exit_code, 1);
}
