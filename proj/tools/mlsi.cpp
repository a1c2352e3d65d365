#include <mlsi/suite.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

int run(const std::string& path) {
  const mlsi::SuiteConfig suite = mlsi::load_config(path);
  const mlsi::SuiteResult result = mlsi::run_suite(suite);
  const std::string json = mlsi::write_outputs(suite, result);
  for (const mlsi::DeficitReport& r : result.reports) {
    std::cout << (r.pass ? "pass " : "FAIL ") << r.name << "  deficit=" << mlsi::format_number(r.deficit)
              << " tol=" << mlsi::format_number(r.tol) << '\n';
  }
  for (const mlsi::SkippedCheck& s : result.skipped) {
    std::cout << "skip " << s.scenario << '/' << s.checker << ": " << s.reason << '\n';
  }
  for (const mlsi::CheckError& e : result.errors) {
    std::cerr << "error " << e.scenario << '/' << e.checker << ": " << e.message << '\n';
  }
  std::cout << result.reports.size() << " reports, " << result.violations() << " violations, " << result.errors.size()
            << " errors, " << result.skipped.size() << " skipped; wrote " << json << '\n';
  return result.exit_code();
}

int sweep(const std::string& path, const std::string& parameter, const std::string& ladder,
          const std::string& scenario) {
  const mlsi::SuiteConfig suite = mlsi::load_config(path);
  const mlsi::Curve curve = mlsi::emit_curve(suite, scenario, parameter, mlsi::parse_ladder(ladder));
  curve.write_csv(std::cout);
  const std::filesystem::path dir = mlsi::output_directory(suite);
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / (suite.name + "-sweep-" + parameter + ".csv"));
  curve.write_csv(out);
  return 0;
}

int report(const std::string& path, bool csv) {
  std::ifstream in(path);
  if (!in) throw mlsi::InvalidArgument("cannot read '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw mlsi::InvalidArgument(std::string("malformed JSON: ") + e.what());
  }
  const std::vector<mlsi::DeficitReport> reports = mlsi::reports_from_json(j);
  if (csv) {
    mlsi::write_summary_csv(reports, std::cout);
    return 0;
  }
  int code = 0;
  for (const mlsi::DeficitReport& r : reports) {
    std::cout << (r.pass ? "pass " : "FAIL ") << r.name << "  lhs=" << mlsi::format_number(r.lhs)
              << " rhs=" << mlsi::format_number(r.rhs) << " deficit=" << mlsi::format_number(r.deficit) << '\n';
    if (!r.pass) code = 1;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of the modified log-Sobolev inequality"};
  app.require_subcommand(1);

  std::string config, parameter, ladder, scenario, json;
  bool csv = false;
  auto* run_cmd = app.add_subcommand("run", "Run every checker of a scenario suite");
  run_cmd->add_option("config", config, "Suite config file")->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "Tabulate lhs, rhs and deficit over a parameter ladder");
  sweep_cmd->add_option("config", config, "Suite config file")->required();
  sweep_cmd->add_option("param", parameter, "lambda, alpha, s or k")->required();
  sweep_cmd->add_option("ladder", ladder, "Comma list or lo:hi:count")->required();
  sweep_cmd->add_option("--scenario", scenario, "Scenario name (default: the first)");
  auto* report_cmd = app.add_subcommand("report", "Print the reports of a suite JSON");
  report_cmd->add_option("json", json, "Suite or report JSON")->required();
  report_cmd->add_flag("--csv", csv, "CSV summary on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*run_cmd) return run(config);
    if (*sweep_cmd) return sweep(config, parameter, ladder, scenario);
    return report(json, csv);
  } catch (const mlsi::ConfigError& e) {
    for (const std::string& msg : e.errors()) std::cerr << "config error: " << msg << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
