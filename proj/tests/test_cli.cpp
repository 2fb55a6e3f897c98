#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bqms/cli.hpp"
#include "json_compare.hpp"

using namespace bqms;
using namespace bqms::cli;
namespace fs = std::filesystem;

namespace {

const std::string kSource = BQMS_SOURCE_DIR;

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Json scenario(const std::string& name) { return parse_json(slurp(kSource + "/scenarios/" + name)); }

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("bqms_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::vector<double> column(const std::string& csv, int col) {
  std::vector<double> out;
  auto ls = lines(csv);
  for (size_t i = 1; i < ls.size(); ++i) {
    std::stringstream ss(ls[i]);
    std::string cell;
    for (int c = 0; c <= col; ++c) std::getline(ss, cell, ',');
    out.push_back(std::stod(cell));
  }
  return out;
}

}  // namespace

TEST(Cli, VerifyPaperMatchesGolden) {
  RunResult r = verify_paper({});
  EXPECT_EQ(r.exit_code, Success);
  EXPECT_TRUE(r.failures.empty());
  Json golden = parse_json(slurp(kSource + "/tests/golden/verify_paper.json"));
  EXPECT_EQ(bqms::testing::json_diff(without_timestamp(r.report), golden), "");
}

TEST(Cli, ReportsAreByteIdenticalModuloTimestamp) {
  std::string a = report_text(without_timestamp(verify_paper({}).report));
  std::string b = report_text(without_timestamp(verify_paper({}).report));
  EXPECT_EQ(a, b);
  Json sc = scenario("davies_flow.json");
  RunOptions o;
  o.seed = 99;
  EXPECT_EQ(report_text(without_timestamp(run_scenario(sc, o).report)),
            report_text(without_timestamp(run_scenario(sc, o).report)));
  RunResult t = run_scenario(sc, o);
  EXPECT_TRUE(t.report.contains("timestamp"));
  EXPECT_FALSE(without_timestamp(t.report).contains("timestamp"));
}

TEST(Cli, FourPointScenarioWitness) {
  RunResult r = run_scenario(scenario("c4_example.json"), {});
  EXPECT_EQ(r.exit_code, Success);
  std::string text = r.report.dump();
  EXPECT_NE(text.find("t4 = 4 t3"), std::string::npos);
  EXPECT_NE(text.find("t4 = (2/3) t3"), std::string::npos);
  bool bimodule = false;
  for (const Assertion& a : r.assertions) bimodule |= a.op == "check_bimodule_gns" && a.passed;
  EXPECT_TRUE(bimodule);
}

TEST(Cli, FermionIntertwineScenario) {
  fs::path dir = scratch("fermion");
  RunOptions o;
  o.out_dir = dir.string();
  std::ostringstream out, err;
  int code = run_file(kSource + "/scenarios/fermion_intertwine.json", o, out, err);
  EXPECT_EQ(code, Success) << err.str();
  Json rep = parse_json(slurp((dir / "fermion_intertwine.report.json").string()));
  bool found = false;
  for (const Json& e : rep["experiments"])
    if (e["kind"] == "intertwine") {
      found = true;
      EXPECT_LT(e["residual"].get<double>(), 1e-9);
      EXPECT_NEAR(e["beta"].get<double>(), std::cosh(0.5), 1e-10);
    }
  EXPECT_TRUE(found);
  std::string csv = slurp((dir / "fermion_intertwine.2-lsi.csv").string());
  auto ls = lines(csv);
  EXPECT_EQ(ls.at(0), "t,entropy,metric_norm,lsi_margin,talagrand_slack");
  EXPECT_EQ(ls.size(), 14u);  // 12 steps on [0, 3] give 13 rows
  std::vector<double> h = column(csv, 1);
  for (size_t i = 1; i < h.size(); ++i) EXPECT_LT(h[i], h[i - 1]);
}

TEST(Cli, MissingInitialDensityIsInputError) {
  std::ostringstream out, err;
  int code = run_file(kSource + "/scenarios/missing_d0.json", {}, out, err);
  EXPECT_EQ(code, InputFailure);
  EXPECT_NE(err.str().find("d0"), std::string::npos);
}

TEST(Cli, ParseErrorHasLineAndColumn) {
  try {
    parse_json("{\n  \"model\": ,\n}");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.kind(), "ParseError");
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 12);
  }
  fs::path dir = scratch("parse");
  std::ofstream(dir / "bad.json") << "{\"model\": [1, 2,\n";
  std::ostringstream out, err;
  EXPECT_EQ(run_file((dir / "bad.json").string(), {}, out, err), InputFailure);
  EXPECT_NE(err.str().find("ParseError"), std::string::npos);
}

TEST(Cli, ShapeErrors) {
  EXPECT_THROW(parse_matrix(Json::parse("[[1, 2], [3]]"), "m"), InputError);
  EXPECT_THROW(parse_matrix(Json::parse("[[\"a\"]]"), "m"), InputError);
  CMatrix a = parse_matrix(Json::parse("[[1, [0, 2]], [[3, -1], 4]]"), "m");
  EXPECT_EQ(a(0, 1), cd(0, 2));
  EXPECT_EQ(a(1, 0), cd(3, -1));
  Json sc = Json::parse(R"({"model": {"kind": "spin", "n": 2},
    "generator": {"kind": "l0_plus_l1", "l0": [[1, 1, 1], [1, 1, 1], [1, 1, 1]]},
    "experiments": [{"kind": "classify"}]})");
  try {
    run_scenario(sc, {});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.kind(), "ShapeError");
  }
}

TEST(Cli, VerificationFailureExitCode) {
  RunOptions o;
  o.tolerances["negative_control"] = 1e3;
  RunResult r = run_scenario(scenario("fermion_intertwine.json"), o);
  EXPECT_EQ(r.exit_code, VerificationFailure);
  ASSERT_FALSE(r.failures.empty());
  EXPECT_EQ(r.report["status"], "fail");
}

TEST(Cli, ToleranceScaleEnvironment) {
  ::setenv("BQMS_TOL_SCALE", "10", 1);
  RunResult scaled = run_scenario(scenario("c4_example.json"), {});
  ::unsetenv("BQMS_TOL_SCALE");
  RunResult plain = run_scenario(scenario("c4_example.json"), {});
  ASSERT_EQ(scaled.assertions.size(), plain.assertions.size());
  bool some = false;
  for (size_t i = 0; i < plain.assertions.size(); ++i)
    if (plain.assertions[i].upper && plain.assertions[i].limit > 0) {
      EXPECT_NEAR(scaled.assertions[i].limit, 10 * plain.assertions[i].limit, 1e-12 * plain.assertions[i].limit);
      some = true;
    }
  EXPECT_TRUE(some);
}

TEST(Cli, AssertionsNameOperations) {
  const std::set<std::string> ops{"apply_generator", "apply_gkls",        "check_bimodule_gns", "classify",
                                  "compose",         "convolution_support", "evolve",           "fermion_model",
                                  "find_intertwining", "flow",            "fourier",            "from_superoperator",
                                  "hidden_density",  "lsi_report",        "poincare_margins",   "semigroup_limit",
                                  "solve_delta",     "talagrand_report",  "validate"};
  std::vector<RunResult> runs{verify_paper({}), run_scenario(scenario("c4_example.json"), {}),
                              run_scenario(scenario("davies_flow.json"), {})};
  for (const RunResult& r : runs)
    for (const Assertion& a : r.assertions) EXPECT_TRUE(ops.count(a.op)) << a.op;
}

TEST(Cli, CsvFormat) {
  FlowTrace one;
  one.times = {0.0};
  one.entropies = {1.0 / 3.0};
  one.metric_norms = {2.0};
  std::string text = csv_text(one);
  auto ls = lines(text);
  ASSERT_EQ(ls.size(), 2u);
  EXPECT_EQ(ls[0], "t,entropy,metric_norm,lsi_margin,talagrand_slack");
  EXPECT_EQ(ls[1], "0,0.33333333333333331,2,,");
  EXPECT_EQ(column(text, 1)[0], 1.0 / 3.0);
  EXPECT_THROW(emit_csv(one, "/nonexistent-dir/x.csv"), InputError);
  EXPECT_THROW(csv_text(FlowTrace{}), InputError);
}

TEST(Cli, StationaryStartHasConstantEntropy) {
  Json sc = scenario("davies_flow.json");
  for (Json& e : sc["experiments"])
    if (e["kind"] == "flow") e["d0"] = Json::parse("[[1.4, 0], [0, 0.6]]");
  RunResult r = run_scenario(sc, {});
  ASSERT_FALSE(r.traces.empty());
  for (const auto& [stem, tr] : r.traces)
    for (double h : tr.entropies) EXPECT_NEAR(h, 0.0, 1e-12);
}
