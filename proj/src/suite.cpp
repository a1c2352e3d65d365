#include <mlsi/inequalities.hpp>
#include <mlsi/prekopa_transport.hpp>
#include <mlsi/suite.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <variant>

namespace mlsi {

namespace {

// Everything a scenario's checkers share, built on first use.
class ScenarioContext {
 public:
  ScenarioContext(const ScenarioConfig& config, std::uint64_t seed)
      : c(config), raw(build_potential(config, seed)), g(build_function(config.g, config.potential.dim, raw)) {}

  const ScenarioConfig& c;
  const Potential raw;
  const TestFunction g;

  int dim() const { return raw.dim; }

  std::size_t resolution() const { return c.resolution ? c.resolution : default_resolution(dim()); }

  const QuadratureRule& rule() {
    if (!rule_) rule_.emplace(make_rule(truncation_box(raw, c.tail_tol).padded(c.pad), resolution()));
    return *rule_;
  }

  const Potential& normalized() {
    if (!normalized_) normalized_ = normalize(raw, rule());
    return *normalized_;
  }

  // Lebesgue rule covering e^g for g = -b C(x - center): the potential's box
  // shifted by the center.
  const QuadratureRule& lebesgue_rule() {
    if (!lebesgue_) {
      const Vec center = c.g.center.size() == dim() ? c.g.center : Vec::Zero(dim());
      const std::size_t n = c.lebesgue_resolution ? c.lebesgue_resolution : (dim() == 1 ? 4001 : default_resolution(dim()));
      lebesgue_.emplace(make_rule(truncation_box(raw, 1e-12).padded(center.cwiseAbs().maxCoeff() + 1.0), n));
    }
    return *lebesgue_;
  }

  // phi = C + log int e^{-C} dx.
  const Potential& lebesgue_normalized() {
    if (!lebesgue_normalized_) {
      lebesgue_normalized_ = normalize(raw, make_rule(truncation_box(raw, 1e-12), dim() == 1 ? 2001 : default_resolution(dim())));
    }
    return *lebesgue_normalized_;
  }

  std::vector<Vec> z_grid() const {
    std::vector<Axis> axes(static_cast<std::size_t>(dim()), linspace(c.z_min, c.z_max, c.z_count));
    return tensor_points(axes);
  }

 private:
  std::optional<QuadratureRule> rule_, lebesgue_;
  std::optional<Potential> normalized_, lebesgue_normalized_;
};

struct Skip {
  std::string reason;
};

using Outcome = std::variant<DeficitReport, Skip, CheckError>;

DeficitReport run_check(ScenarioContext& ctx, Checker checker) {
  const ScenarioConfig& c = ctx.c;
  const std::string name = to_string(checker);
  switch (checker) {
    case Checker::mlsi: return check_mlsi(ctx.normalized(), ctx.g, ctx.rule());
    case Checker::gross: {
      const double residual = gross_reduction_residual(ctx.g, ctx.rule());
      return make_report(name, residual, c.gross_bound, 0.0);
    }
    case Checker::brascamp_lieb: return check_brascamp_lieb(ctx.normalized(), ctx.g, ctx.rule(), c.eps);
    case Checker::perturbation: {
      const Expression U = Expression::parse(c.U, ctx.dim());
      return check_perturbation(ctx.normalized(), [U](const Vec& x) { return U(x); }, ctx.g, ctx.rule());
    }
    case Checker::euclidean_lsi:
      return euclidean_lsi_check(ctx.lebesgue_normalized(), ctx.g, c.lambda, ctx.lebesgue_rule());
    case Checker::optimal_lambda: {
      const OptimalLambda opt = optimal_lambda(ctx.lebesgue_normalized(), ctx.g, ctx.lebesgue_rule());
      DeficitReport r = euclidean_lsi_check(ctx.lebesgue_normalized(), ctx.g, opt.lambda, ctx.lebesgue_rule());
      r.name = name;
      r.metadata["lambda0"] = opt.lambda;
      r.metadata["stationarity_residual"] = opt.residual;
      if (c.expected_lambda) {
        const double error = std::abs(opt.lambda - *c.expected_lambda);
        r.metadata["lambda_error"] = error;
        r.metadata["condition_ok"] = error <= 1e-4 * std::max(1.0, std::abs(*c.expected_lambda)) ? 1.0 : 0.0;
      }
      return r;
    }
    case Checker::equality_case: {
      const Vec center = c.g.center.size() == ctx.dim() ? c.g.center : Vec::Zero(ctx.dim());
      const double residual = equality_case_residual(ctx.raw, center, ctx.lebesgue_rule());
      return make_report(name, residual, c.equality_bound, 0.0);
    }
    case Checker::homogeneous_lsi: return homogeneous_lsi_check(ctx.raw, ctx.g, ctx.lebesgue_rule());
    case Checker::large_entropy: {
      const LargeEntropyConstants k = derive_large_entropy_constants(ctx.raw, ctx.rule());
      DeficitReport r = check_large_entropy(ctx.raw, ctx.g, k, ctx.rule());
      r.metadata["lambda"] = k.lambda;
      r.metadata["alpha"] = k.alpha;
      r.metadata["A"] = k.A;
      r.metadata["C1"] = k.C1;
      r.metadata["C2"] = k.C2;
      r.metadata["log_integral"] = k.log_integral;
      r.metadata["product"] = k.product;
      return r;
    }
    case Checker::power_constant: {
      const double coarse = power_mlsi_constant(c.potential.p);
      const double fine = power_mlsi_constant(c.potential.p, 8001, 1441);
      DeficitReport r = make_report(name, std::abs(coarse - fine) / fine, c.power_doubling_bound, 0.0);
      r.metadata["constant"] = fine;
      r.metadata["constant_coarse"] = coarse;
      return r;
    }
    case Checker::lemma_order: {
      const ExpansionOrder eo = lemma_expansion_order(ctx.raw, ctx.g, c.s, ctx.z_grid(), c.y_radius, c.y_nodes);
      const double mid = 0.5 * (c.lemma_slope_min + c.lemma_slope_max);
      const double half = 0.5 * (c.lemma_slope_max - c.lemma_slope_min);
      DeficitReport r = eo.exact() ? make_report(name, 0.0, half, 0.0) : make_report(name, std::abs(*eo.slope - mid), half, 0.0);
      r.metadata["exact"] = eo.exact() ? 1.0 : 0.0;
      if (eo.slope) r.metadata["slope"] = *eo.slope;
      for (std::size_t i = 0; i < eo.s.size(); ++i) r.metadata["E(" + format_number(eo.s[i]) + ")"] = eo.error[i];
      return r;
    }
    case Checker::prekopa_leindler: {
      // u = e^{g/t - phi}, v = e^{-phi}, w = e^{g_s - phi} satisfy the hypothesis
      // by definition of the sup-convolution g_s.
      const Potential& P = ctx.normalized();
      const double s = c.pl_s, t = 1.0 - s;
      const Axis axis = linspace(ctx.rule().box().lower[0], ctx.rule().box().upper[0], c.pl_nodes);
      const GridFunction u = GridFunction::sample({axis}, [&](const Vec& p) { return std::exp(ctx.g.eval(p) / t - P.eval(p)); });
      const GridFunction v = GridFunction::sample({axis}, [&](const Vec& p) { return std::exp(-P.eval(p)); });
      const GridFunction w = GridFunction::sample({axis}, [&](const Vec& p) {
        const Axis ys = linspace(p[0] - c.y_radius, p[0] + c.y_radius, c.y_nodes);
        return std::exp(sup_convolution(P, ctx.g, s, p, {ys}).value - P.eval(p));
      });
      const PLReport pl = pl_check(u, v, w, t);
      DeficitReport r = make_report(name, pl.lhs, pl.rhs, pl.tol);
      r.metadata["condition_ok"] = pl.hypothesis_holds ? 1.0 : 0.0;
      r.metadata["max_violation"] = pl.max_violation;
      r.metadata["allowance"] = pl.allowance;
      r.metadata["s"] = s;
      return r;
    }
    case Checker::transport: {
      const Potential& P = ctx.normalized();
      const WeightedNodes nodes = measure_nodes(P, ctx.rule());
      std::vector<double> eg = evaluate(ctx.g, nodes.nodes);
      for (double& v : eg) v = std::exp(v);
      const double Z = weighted_sum(eg, nodes.weights);
      const TestFunction& g = ctx.g;
      return check_transport(P, [&g, Z](const Vec& p) { return std::exp(g.eval(p)) / Z; }, ctx.rule(), c.k);
    }
    case Checker::fixture: {
      DeficitReport r = make_report(name, c.fixture_lhs, c.fixture_rhs, 1e-6);
      r.metadata["fixture"] = 1.0;
      return r;
    }
  }
  throw InvalidArgument("unknown checker");
}

DeficitReport error_report(const std::string& name) {
  const double nan = std::nan("");
  DeficitReport r = make_report(name, nan, nan, nan);
  r.pass = false;
  r.metadata["error"] = 1.0;
  return r;
}

std::vector<Outcome> run_scenario(const ScenarioConfig& c, std::uint64_t seed) {
  std::vector<Outcome> out;
  std::optional<ScenarioContext> ctx;
  std::string setup_error;
  try {
    ctx.emplace(c, seed);
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  for (Checker checker : c.checkers) {
    const std::string name = c.name + "/" + to_string(checker);
    if (!ctx) {
      out.emplace_back(CheckError{c.name, to_string(checker), "scenario setup failed: " + setup_error});
      continue;
    }
    try {
      DeficitReport r = run_check(*ctx, checker);
      r.name = name;
      // Side conditions (expected lambda0, the PL hypothesis) are recorded as
      // condition_ok and combine with the deficit test.
      if (c.tol) r.tol = *c.tol;
      const auto cond = r.metadata.find("condition_ok");
      r.pass = r.deficit >= -r.tol && (cond == r.metadata.end() || cond->second != 0.0);
      out.emplace_back(std::move(r));
    } catch (const OutOfScope& e) {
      out.emplace_back(Skip{e.what()});
    } catch (const std::exception& e) {
      out.emplace_back(CheckError{c.name, to_string(checker), e.what()});
    }
  }
  return out;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::size_t SuiteResult::violations() const {
  std::size_t n = 0;
  for (const DeficitReport& r : reports) {
    if (!r.pass && !r.metadata.count("error")) ++n;
  }
  return n;
}

int SuiteResult::exit_code() const {
  if (!errors.empty()) return 2;
  return violations() == 0 ? 0 : 1;
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SuiteResult run_suite(const SuiteConfig& suite) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult result;
  result.suite = suite.name;
  result.config_hash = config_hash(suite.text);
  result.seed = suite.seed;
  result.started_utc = utc_now();

  std::vector<std::vector<Outcome>> outcomes(suite.scenarios.size());
  if (suite.parallel) {
    std::vector<std::future<std::vector<Outcome>>> futures;
    for (const ScenarioConfig& c : suite.scenarios) {
      futures.push_back(std::async(std::launch::async, run_scenario, std::cref(c), suite.seed));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) outcomes[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < suite.scenarios.size(); ++i) outcomes[i] = run_scenario(suite.scenarios[i], suite.seed);
  }

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const ScenarioConfig& c = suite.scenarios[i];
    for (std::size_t j = 0; j < outcomes[i].size(); ++j) {
      ++result.requested;
      const std::string checker = to_string(c.checkers[j]);
      if (const auto* r = std::get_if<DeficitReport>(&outcomes[i][j])) {
        result.reports.push_back(*r);
      } else if (const auto* s = std::get_if<Skip>(&outcomes[i][j])) {
        result.skipped.push_back({c.name, checker, s->reason});
      } else {
        const auto& e = std::get<CheckError>(outcomes[i][j]);
        result.errors.push_back(e);
        result.reports.push_back(error_report(c.name + "/" + checker));
      }
    }
  }
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

nlohmann::json to_json(const SuiteResult& result) {
  nlohmann::json j;
  j["suite"] = result.suite;
  j["config_hash"] = result.config_hash;
  j["seed"] = result.seed;
  j["timestamp"] = {{"started_utc", result.started_utc}, {"wall_time_s", result.wall_time_s}};
  j["requested"] = result.requested;
  j["reports"] = nlohmann::json::array();
  for (const DeficitReport& r : result.reports) j["reports"].push_back(to_json(r));
  j["skipped"] = nlohmann::json::array();
  for (const SkippedCheck& s : result.skipped) {
    j["skipped"].push_back({{"scenario", s.scenario}, {"checker", s.checker}, {"reason", s.reason}});
  }
  j["errors"] = nlohmann::json::array();
  for (const CheckError& e : result.errors) {
    j["errors"].push_back({{"scenario", e.scenario}, {"checker", e.checker}, {"message", e.message}});
  }
  j["summary"] = {{"reports", result.reports.size()},
                  {"violations", result.violations()},
                  {"errors", result.errors.size()},
                  {"skipped", result.skipped.size()},
                  {"exit_code", result.exit_code()}};
  return j;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // Shortest form that round-trips.
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_summary_csv(const std::vector<DeficitReport>& reports, std::ostream& out) {
  out << "name,lhs,rhs,deficit,tol,pass\n";
  for (const DeficitReport& r : reports) {
    out << r.name << ',' << format_number(r.lhs) << ',' << format_number(r.rhs) << ',' << format_number(r.deficit)
        << ',' << format_number(r.tol) << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

std::vector<DeficitReport> reports_from_json(const nlohmann::json& j) {
  std::vector<DeficitReport> out;
  if (j.is_object() && j.contains("reports")) {
    if (!j["reports"].is_array()) throw InvalidArgument("\"reports\" must be an array");
    for (const auto& r : j["reports"]) out.push_back(report_from_json(r));
  } else if (j.is_array()) {
    for (const auto& r : j) out.push_back(report_from_json(r));
  } else {
    out.push_back(report_from_json(j));
  }
  return out;
}

std::string output_directory(const SuiteConfig& suite) {
  if (const char* env = std::getenv("MLSI_OUTPUT_DIR"); env && *env) return env;
  return suite.output_dir;
}

std::string write_outputs(const SuiteConfig& suite, const SuiteResult& result) {
  const std::filesystem::path dir = output_directory(suite);
  std::filesystem::create_directories(dir);
  const std::filesystem::path json_path = dir / (suite.name + ".json");
  std::ofstream json(json_path);
  json << to_json(result).dump(2) << '\n';
  std::ofstream csv(dir / (suite.name + ".csv"));
  write_summary_csv(result.reports, csv);
  if (!json || !csv) throw NumericalError("cannot write outputs to " + dir.string());
  return json_path.string();
}

void Curve::write_csv(std::ostream& out) const {
  out << parameter << ",lhs,rhs,deficit\n";
  for (const CurveRow& r : rows) {
    out << format_number(r.value) << ',' << format_number(r.lhs) << ',' << format_number(r.rhs) << ','
        << format_number(r.deficit) << '\n';
  }
}

Curve emit_curve(const SuiteConfig& suite, const std::string& scenario, const std::string& parameter,
                 const std::vector<double>& ladder) {
  static const std::vector<std::string> known{"lambda", "alpha", "s", "k"};
  if (std::find(known.begin(), known.end(), parameter) == known.end()) {
    throw InvalidArgument("unknown sweep parameter '" + parameter + "' (expected lambda, alpha, s or k)");
  }
  if (ladder.empty()) throw InvalidArgument("sweep ladder is empty");
  const ScenarioConfig* config = nullptr;
  for (const ScenarioConfig& c : suite.scenarios) {
    if (scenario.empty() || c.name == scenario) {
      config = &c;
      break;
    }
  }
  if (!config) throw InvalidArgument("no scenario named '" + scenario + "'");
  ScenarioContext ctx(*config, suite.seed);
  Curve curve;
  curve.parameter = parameter;
  auto row = [&](double value, double lhs, double rhs) { curve.rows.push_back({value, lhs, rhs, rhs - lhs}); };

  if (parameter == "lambda") {
    for (double lambda : ladder) {
      const DeficitReport r = euclidean_lsi_check(ctx.lebesgue_normalized(), ctx.g, lambda, ctx.lebesgue_rule());
      row(lambda, r.lhs, r.rhs);
    }
  } else if (parameter == "alpha") {
    const Axis axis = linspace(-50.0, 50.0, ctx.dim() == 1 ? 801 : 81);
    const std::vector<Vec> grid = tensor_points(std::vector<Axis>(static_cast<std::size_t>(ctx.dim()), axis));
    for (double alpha : ladder) row(alpha, 1.0, psi_alpha(ctx.raw, alpha, grid));
  } else if (parameter == "s") {
    const std::vector<Vec> z = ctx.z_grid();
    const Conjugate conj = mlsi_conjugate(ctx.raw, ctx.g, z);
    for (double s : ladder) {
      double worst = 0.0, first = 0.0;
      for (const Vec& p : z) {
        std::vector<Axis> ys;
        for (Eigen::Index d = 0; d < p.size(); ++d) ys.push_back(linspace(p[d] - config->y_radius, p[d] + config->y_radius, config->y_nodes));
        const double integrand = mlsi_integrand(ctx.raw, conj, ctx.g, p);
        const double gs = sup_convolution(ctx.raw, ctx.g, s, p, ys).value;
        worst = std::max(worst, std::abs(gs - ctx.g.eval(p) - s * integrand));
        first = std::max(first, s * std::abs(integrand));
      }
      row(s, worst, first);
    }
  } else {
    for (double k : ladder) {
      if (!(k >= 2.0 && k == std::floor(k))) throw InvalidArgument("k values must be integers >= 2");
      ScenarioConfig copy = *config;
      copy.k = static_cast<std::size_t>(k);
      ScenarioContext kctx(copy, suite.seed);
      const DeficitReport r = run_check(kctx, Checker::transport);
      row(k, r.lhs, r.rhs);
    }
  }
  return curve;
}

}  // namespace mlsi
