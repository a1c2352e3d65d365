#include <mlsi/report.hpp>
#include <mlsi/types.hpp>

#include <cmath>

namespace mlsi {

DeficitReport make_report(std::string name, double lhs, double rhs, double tol) {
  DeficitReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.deficit = rhs - lhs;
  r.tol = tol;
  r.pass = r.deficit >= -tol;
  return r;
}

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double number_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nan("");
  return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const DeficitReport& report) {
  nlohmann::json out;
  out["name"] = report.name;
  out["lhs"] = number(report.lhs);
  out["rhs"] = number(report.rhs);
  out["deficit"] = number(report.deficit);
  out["pass"] = report.pass;
  out["tol"] = number(report.tol);
  out["metadata"] = nlohmann::json::object();
  for (const auto& [key, value] : report.metadata) out["metadata"][key] = number(value);
  return out;
}

DeficitReport report_from_json(const nlohmann::json& j) {
  DeficitReport r;
  try {
    r.name = j.at("name").get<std::string>();
    r.lhs = number_from(j.at("lhs"));
    r.rhs = number_from(j.at("rhs"));
    r.deficit = number_from(j.at("deficit"));
    r.pass = j.at("pass").get<bool>();
    r.tol = number_from(j.at("tol"));
    for (const auto& [key, value] : j.at("metadata").items()) r.metadata[key] = number_from(value);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed deficit report: ") + e.what());
  }
  return r;
}

}  // namespace mlsi
