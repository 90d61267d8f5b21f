// hk-lab: run, validate and plot scenarios.
//
//   hk-lab run <scenario.json>       exit 0 iff every assertion passes
//   hk-lab validate <scenario.json>  schema check only
//   hk-lab plot <series.csv> [-o out.svg] [--column name]
//
// Exit codes: 0 ok, 1 computation error or failed assertion, 2 configuration error.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "hklab/scenario.hpp"

namespace {

int exit_code(const hklab::Error& e) { return e.code() == hklab::ErrorCode::ConfigError ? 2 : 1; }

int cmd_run(const std::string& path) {
  const hklab::Scenario s = hklab::parse_scenario(hklab::read_json_file(path));
  const hklab::RunResult r = hklab::run(s);
  const auto& a = r.report["assertions"];
  for (const auto& [name, ok] : a.items()) std::cout << (ok.get<bool>() ? "PASS " : "FAIL ") << name << "\n";
  if (r.error) std::cerr << "error: " << r.error->what() << "\n";
  if (r.report["metrics"].contains("violations"))
    for (const auto& v : r.report["metrics"]["violations"]) std::cout << "FAIL class " << v.get<std::string>() << "\n";
  std::cout << (r.passed ? "passed" : "failed") << ": " << (std::filesystem::path(s.output_dir) / "report.json").string()
            << "\n";
  return r.passed ? 0 : 1;
}

int cmd_validate(const std::string& path) {
  const hklab::Scenario s = hklab::parse_scenario(hklab::read_json_file(path));
  hklab::validate_params(s);
  std::cout << "ok: " << s.kind << "\n";
  return 0;
}

int cmd_plot(const std::string& path, std::string out, const std::string& column) {
  const hklab::Table t = hklab::read_csv(path);
  if (t.columns.size() < 2) hklab::fail(hklab::ErrorCode::EmptySeries, path + ": need an x column and a y column");
  std::size_t yc = 1;
  if (!column.empty()) {
    const auto it = std::find(t.header.begin(), t.header.end(), column);
    if (it == t.header.end() || it == t.header.begin())
      hklab::fail(hklab::ErrorCode::ConfigError, "no y column named '" + column + "'");
    yc = std::size_t(it - t.header.begin());
  }
  hklab::Series s{std::filesystem::path(path).stem().string(), t.header[0], t.header[yc], t.columns[0], t.columns[yc]};
  const hklab::Plot p = hklab::emit_plot(s);
  if (out.empty()) out = std::filesystem::path(path).replace_extension(".svg").string();
  hklab::write_text_file(out, p.svg);
  std::cout << "slope " << p.fit.slope << "\n" << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hk-lab: hyperkahler gluing experiments"};
  app.require_subcommand(1);
  std::string file, out, column;
  auto* run = app.add_subcommand("run", "run a scenario and write its report");
  run->add_option("scenario", file, "scenario JSON file")->required();
  auto* val = app.add_subcommand("validate", "check a scenario against its schema");
  val->add_option("scenario", file, "scenario JSON file")->required();
  auto* plot = app.add_subcommand("plot", "log-scale SVG plot of a CSV series");
  plot->add_option("csv", file, "CSV file, first column x")->required();
  plot->add_option("-o,--output", out, "output SVG (default: next to the CSV)");
  plot->add_option("--column", column, "y column name (default: second column)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(file);
    if (*val) return cmd_validate(file);
    return cmd_plot(file, out, column);
  } catch (const hklab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
