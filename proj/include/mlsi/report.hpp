#pragma once

#include <map>
#include <string>

#include <json.hpp>

namespace mlsi {

// Outcome of one inequality check. deficit is rhs - lhs, and pass holds iff
// deficit >= -tol.
struct DeficitReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double deficit = 0.0;
  bool pass = false;
  double tol = 0.0;
  std::map<std::string, double> metadata;
};

DeficitReport make_report(std::string name, double lhs, double rhs, double tol);

nlohmann::json to_json(const DeficitReport& report);
DeficitReport report_from_json(const nlohmann::json& j);

}  // namespace mlsi
