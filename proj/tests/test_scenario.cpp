#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "hklab/scenario.hpp"

using namespace hklab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hklab_sc_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json base(const std::string& kind, const fs::path& out) {
  return {{"kind", kind}, {"seed", 7}, {"output_dir", out.string()}, {"params", json::object()}};
}

std::string config_error_of(const json& j) {
  try {
    validate_params(parse_scenario(j));
  } catch (const Error& e) {
    return std::string(error_name(e.code()));
  }
  return "no error";
}

}  // namespace

TEST(ScenarioParse, TopLevelErrors) {
  const json ok = base("models", "out");
  EXPECT_EQ(config_error_of(ok), "no error");
  json j = ok;
  j.erase("kind");
  EXPECT_EQ(config_error_of(j), "ConfigError");
  j = ok;
  j["kind"] = "teleport";
  EXPECT_EQ(config_error_of(j), "ConfigError");
  j = ok;
  j["seed"] = -3;
  EXPECT_EQ(config_error_of(j), "ConfigError");
  j = ok;
  j["seed"] = 1.5;
  EXPECT_EQ(config_error_of(j), "ConfigError");
  j = ok;
  j["output_dir"] = "";
  EXPECT_EQ(config_error_of(j), "ConfigError");
  j = ok;
  j["colour"] = "blue";
  EXPECT_EQ(config_error_of(j), "ConfigError");
  j = ok;
  j["params"] = json::array();
  EXPECT_EQ(config_error_of(j), "ConfigError");
}

TEST(ScenarioParse, ParamErrors) {
  auto with = [](const std::string& kind, json params) {
    json j = base(kind, "out");
    j["params"] = std::move(params);
    return config_error_of(j);
  };
  EXPECT_EQ(with("solve_hk", {{"amplitude", -1.0}}), "ConfigError");
  EXPECT_EQ(with("solve_hk", {{"n", 3.5}}), "ConfigError");
  EXPECT_EQ(with("solve_hk", {{"amplitud", 0.01}}), "ConfigError");
  EXPECT_EQ(with("solve_hk", {{"max_mode", 9}}), "ConfigError");
  EXPECT_EQ(with("glue", {{"n_r", 64}}), "ConfigError");
  EXPECT_EQ(with("glue", {{"rhos", {8.0}}}), "ConfigError");
  EXPECT_EQ(with("periods", {{"basis", "Enriques"}}), "ConfigError");
  EXPECT_EQ(with("periods", {{"face_bound", 7}}), "ConfigError");
  EXPECT_EQ(with("recover_lattice", {{"f", {{1, 0}, {0, 1}}}}), "ConfigError");
  EXPECT_EQ(with("semiflat", {{"periods", {{"a", 0.0}}}}), "ConfigError");
  EXPECT_EQ(with("models", {{"points", 0}}), "ConfigError");
}

TEST(ScenarioParse, SampleScenariosAreValid) {
  int count = 0;
  for (const auto& e : fs::directory_iterator(fs::path(HKLAB_SOURCE_DIR) / "scenarios")) {
    if (e.path().extension() != ".json") continue;
    ++count;
    const json j = read_json_file(e.path().string());
    const std::string err = config_error_of(j);
    if (e.path().stem() == "bad_config")
      EXPECT_EQ(err, "ConfigError");
    else
      EXPECT_EQ(err, "no error") << e.path();
  }
  EXPECT_GE(count, 6);
}

TEST(ScenarioRun, ReportLayout) {
  const fs::path out = scratch_dir("recover");
  json j = base("recover_lattice", out);
  j["params"] = {{"trials", 50}};
  const RunResult r = run(parse_scenario(j));
  EXPECT_TRUE(r.passed);
  EXPECT_FALSE(r.error.has_value());
  const json rep = read_json_file((out / "report.json").string());
  EXPECT_EQ(rep["schema"], kReportSchema);
  EXPECT_EQ(rep["scenario"]["kind"], "recover_lattice");
  EXPECT_TRUE(rep["passed"].get<bool>());
  EXPECT_TRUE(rep.contains("generated_at"));
  EXPECT_FALSE(rep["assertions"].empty());
  fs::remove_all(out);
}

TEST(ScenarioRun, DeterministicApartFromTimestamp) {
  const fs::path out = scratch_dir("solve");
  json j = base("solve_hk", out);
  j["params"] = {{"n", 8}, {"amplitude", 0.01}, {"mode_count", 3}};
  const Scenario s = parse_scenario(j);
  const RunResult a = run(s);
  const std::string csv_a = slurp(out / "residuals.csv");
  const std::string fld_a = slurp(out / "exact_part.fld");
  const RunResult b = run(s);
  EXPECT_TRUE(a.passed);
  EXPECT_EQ(stable_report(a.report), stable_report(b.report));
  EXPECT_EQ(csv_a, slurp(out / "residuals.csv"));
  EXPECT_EQ(fld_a, slurp(out / "exact_part.fld"));
  const FieldSnapshot f = read_field((out / "exact_part.fld").string());
  EXPECT_EQ(f.components, 18u);
  EXPECT_EQ(f.dims[0], 8u);
  const Table t = read_csv((out / "residuals.csv").string());
  EXPECT_EQ(t.header, (std::vector<std::string>{"iteration", "residual", "step_norm"}));
  EXPECT_EQ(t.columns[1].size(), a.report["metrics"]["residual_history"].size());
  fs::remove_all(out);
}

TEST(ScenarioRun, SeedChangesRandomData) {
  const fs::path out = scratch_dir("seed");
  json j = base("periods", out);
  j["params"] = {{"basis", "ALH"}};
  const json a = run(parse_scenario(j)).report;
  j["seed"] = 8;
  const json b = run(parse_scenario(j)).report;
  EXPECT_NE(a["metrics"]["periods"], b["metrics"]["periods"]);
  fs::remove_all(out);
}

TEST(ScenarioRun, ViolationIsReportedByName) {
  const fs::path out = scratch_dir("violate");
  json j = base("periods", out);
  j["params"] = {{"basis", "ALH"}, {"face_bound", 1}, {"violate", 1}};
  const RunResult r = run(parse_scenario(j));
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.error.has_value());
  const auto names = r.report["metrics"]["violations"].get<std::vector<std::string>>();
  EXPECT_NE(std::find(names.begin(), names.end(), "Sigma_1"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "-Sigma_1"), names.end());
  EXPECT_EQ(r.report["metrics"]["parity"], "parity-unverified");
  fs::remove_all(out);
}

TEST(ScenarioRun, ModuleErrorIsRecorded) {
  const fs::path out = scratch_dir("diverge");
  json j = base("solve_hk", out);
  j["params"] = {{"n", 6}, {"amplitude", 0.8}};
  const RunResult r = run(parse_scenario(j));
  EXPECT_FALSE(r.passed);
  ASSERT_TRUE(r.error.has_value());
  EXPECT_TRUE(r.report.contains("error"));
  EXPECT_TRUE(fs::exists(out / "report.json"));
  fs::remove_all(out);
}

TEST(ScenarioRun, PeriodsK3UsesRank5Solution) {
  const fs::path out = scratch_dir("k3");
  const RunResult r = run(parse_scenario(base("periods", out)));
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.report["metrics"]["rank5"], 5);
  EXPECT_LE(r.report["metrics"]["integrability_residual"].get<double>(), 1e-9);
  fs::remove_all(out);
}
