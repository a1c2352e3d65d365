#pragma once

#include <mlsi/config.hpp>
#include <mlsi/report.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace mlsi {

struct SkippedCheck {
  std::string scenario;
  std::string checker;
  std::string reason;
};

struct CheckError {
  std::string scenario;
  std::string checker;
  std::string message;
};

struct SuiteResult {
  std::string suite;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t requested = 0;
  std::vector<DeficitReport> reports;  // config order; errored checks appear with pass = false
  std::vector<SkippedCheck> skipped;
  std::vector<CheckError> errors;
  std::string started_utc;
  double wall_time_s = 0.0;

  std::size_t violations() const;
  /// 0 when every report passes, 1 on a violation, 2 when any check errored.
  int exit_code() const;
};

/// Hex FNV-1a 64 of the config text.
std::string config_hash(const std::string& text);

/// Runs every checker of every scenario. Scenarios run concurrently when
/// suite.parallel is set; results keep config order.
SuiteResult run_suite(const SuiteConfig& suite);

/// Nondeterministic fields (start time, wall time) live under "timestamp".
nlohmann::json to_json(const SuiteResult& result);

/// Header name,lhs,rhs,deficit,tol,pass then one row per report.
void write_summary_csv(const std::vector<DeficitReport>& reports, std::ostream& out);

/// Reports from a suite JSON ("reports" array) or a single report object.
std::vector<DeficitReport> reports_from_json(const nlohmann::json& j);

/// Output directory: MLSI_OUTPUT_DIR when set, else suite.output_dir.
std::string output_directory(const SuiteConfig& suite);

/// Writes <dir>/<suite>.json and <dir>/<suite>.csv; returns the JSON path.
std::string write_outputs(const SuiteConfig& suite, const SuiteResult& result);

struct CurveRow {
  double value = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double deficit = 0.0;
};

struct Curve {
  std::string parameter;
  std::vector<CurveRow> rows;
  void write_csv(std::ostream& out) const;
};

/// Sweeps one parameter of a scenario: lambda (Euclidean LSI), alpha
/// (psi_alpha, lhs = 1, rhs = psi), s (lhs = E(s), rhs = s max|I|) or k
/// (transport). Throws InvalidArgument on an unknown parameter or empty ladder.
Curve emit_curve(const SuiteConfig& suite, const std::string& scenario, const std::string& parameter,
                 const std::vector<double>& ladder);

/// Shortest round-trip decimal used in every CSV.
std::string format_number(double v);

}  // namespace mlsi
