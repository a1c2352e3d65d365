#include <mlsi/config.hpp>
#include <mlsi/functionals.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace mlsi {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const std::string& p : parts) out += (out.empty() ? "" : "\n") + p;
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const char* begin = s.data();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (s.empty() || ec != std::errc() || ptr != end) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

std::size_t to_size(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("not a nonnegative integer: '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw InvalidArgument("not a boolean: '" + s + "'");
}

Vec to_vec(const std::string& s, int dim) {
  const std::vector<std::string> parts = split(s, ',');
  if (static_cast<int>(parts.size()) != dim) {
    throw InvalidArgument("dimension mismatch: expected " + std::to_string(dim) + " components, got " +
                          std::to_string(parts.size()));
  }
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = to_double(parts[static_cast<std::size_t>(i)]);
  return v;
}

struct Entry {
  std::string key;
  std::string value;
  int line;
};

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

const std::map<std::string, Setter>& scenario_keys() {
  static const std::map<std::string, Setter> keys = [] {
    std::map<std::string, Setter> k;
    k["potential"] = [](ScenarioConfig& c, const std::string& v) {
      const auto kind = parse_potential_kind(v);
      if (!kind) throw InvalidArgument("unknown potential kind '" + v + "'");
      c.potential.kind = *kind;
    };
    k["potential.expr"] = [](ScenarioConfig& c, const std::string& v) { c.potential_expr = v; };
    k["p"] = [](ScenarioConfig& c, const std::string& v) { c.potential.p = to_double(v); };
    k["scale"] = [](ScenarioConfig& c, const std::string& v) { c.potential.scale = to_double(v); };
    k["a"] = [](ScenarioConfig& c, const std::string& v) { c.potential.a = to_double(v); };
    k["b"] = [](ScenarioConfig& c, const std::string& v) { c.potential.b = to_double(v); };
    k["h_quad"] = [](ScenarioConfig& c, const std::string& v) { c.potential.h_quad = to_double(v); };
    k["h_power"] = [](ScenarioConfig& c, const std::string& v) { c.potential.h_power = to_double(v); };
    k["g"] = [](ScenarioConfig& c, const std::string& v) {
      static const std::vector<std::string> families{"constant", "linear", "quadratic", "neg_potential", "bump", "expr"};
      if (std::find(families.begin(), families.end(), v) == families.end()) {
        throw InvalidArgument("unknown test-function family '" + v + "'");
      }
      c.g.family = v;
    };
    k["g.value"] = [](ScenarioConfig& c, const std::string& v) { c.g.value = to_double(v); };
    k["g.a"] = [](ScenarioConfig& c, const std::string& v) { c.g.a = to_vec(v, c.potential.dim); };
    k["g.offset"] = [](ScenarioConfig& c, const std::string& v) { c.g.offset = to_double(v); };
    k["g.coef"] = [](ScenarioConfig& c, const std::string& v) { c.g.coef = to_double(v); };
    k["g.center"] = [](ScenarioConfig& c, const std::string& v) { c.g.center = to_vec(v, c.potential.dim); };
    k["g.b"] = [](ScenarioConfig& c, const std::string& v) { c.g.b = to_double(v); };
    k["g.radius"] = [](ScenarioConfig& c, const std::string& v) { c.g.radius = to_double(v); };
    k["g.height"] = [](ScenarioConfig& c, const std::string& v) { c.g.height = to_double(v); };
    k["g.expr"] = [](ScenarioConfig& c, const std::string& v) { c.g.expr = v; };
    k["g.add_quadratic"] = [](ScenarioConfig& c, const std::string& v) { c.g.add_quadratic = to_double(v); };
    k["checkers"] = [](ScenarioConfig& c, const std::string& v) {
      c.checkers.clear();
      std::vector<std::string> unknown;
      for (const std::string& name : split(v, ',')) {
        const auto checker = parse_checker(name);
        if (!checker) {
          unknown.push_back(name);
        } else {
          c.checkers.push_back(*checker);
        }
      }
      if (!unknown.empty()) throw InvalidArgument("unknown checker '" + unknown.front() + "'");
    };
    k["resolution"] = [](ScenarioConfig& c, const std::string& v) { c.resolution = to_size(v); };
    k["tail_tol"] = [](ScenarioConfig& c, const std::string& v) { c.tail_tol = to_double(v); };
    k["pad"] = [](ScenarioConfig& c, const std::string& v) { c.pad = to_double(v); };
    k["lebesgue_resolution"] = [](ScenarioConfig& c, const std::string& v) { c.lebesgue_resolution = to_size(v); };
    k["tol"] = [](ScenarioConfig& c, const std::string& v) { c.tol = to_double(v); };
    k["lambda"] = [](ScenarioConfig& c, const std::string& v) { c.lambda = to_double(v); };
    k["expected_lambda"] = [](ScenarioConfig& c, const std::string& v) { c.expected_lambda = to_double(v); };
    k["eps"] = [](ScenarioConfig& c, const std::string& v) { c.eps = parse_ladder(v); };
    k["U"] = [](ScenarioConfig& c, const std::string& v) { c.U = v; };
    k["s"] = [](ScenarioConfig& c, const std::string& v) { c.s = parse_ladder(v); };
    k["z_min"] = [](ScenarioConfig& c, const std::string& v) { c.z_min = to_double(v); };
    k["z_max"] = [](ScenarioConfig& c, const std::string& v) { c.z_max = to_double(v); };
    k["z_count"] = [](ScenarioConfig& c, const std::string& v) { c.z_count = to_size(v); };
    k["y_radius"] = [](ScenarioConfig& c, const std::string& v) { c.y_radius = to_double(v); };
    k["y_nodes"] = [](ScenarioConfig& c, const std::string& v) { c.y_nodes = to_size(v); };
    k["pl_s"] = [](ScenarioConfig& c, const std::string& v) { c.pl_s = to_double(v); };
    k["pl_nodes"] = [](ScenarioConfig& c, const std::string& v) { c.pl_nodes = to_size(v); };
    k["k"] = [](ScenarioConfig& c, const std::string& v) { c.k = to_size(v); };
    k["gross_bound"] = [](ScenarioConfig& c, const std::string& v) { c.gross_bound = to_double(v); };
    k["equality_bound"] = [](ScenarioConfig& c, const std::string& v) { c.equality_bound = to_double(v); };
    k["lemma_slope_min"] = [](ScenarioConfig& c, const std::string& v) { c.lemma_slope_min = to_double(v); };
    k["lemma_slope_max"] = [](ScenarioConfig& c, const std::string& v) { c.lemma_slope_max = to_double(v); };
    k["power_doubling_bound"] = [](ScenarioConfig& c, const std::string& v) { c.power_doubling_bound = to_double(v); };
    k["fixture_lhs"] = [](ScenarioConfig& c, const std::string& v) { c.fixture_lhs = to_double(v); };
    k["fixture_rhs"] = [](ScenarioConfig& c, const std::string& v) { c.fixture_rhs = to_double(v); };
    return k;
  }();
  return keys;
}

// Expressions, ranges, dimension rules and the potential's own validation.
void validate(const ScenarioConfig& c, const std::string& where, std::vector<std::string>& errors) {
  auto fail = [&](const std::string& msg) { errors.push_back(where + ": " + msg); };
  const int n = c.potential.dim;
  if (c.checkers.empty()) fail("no checkers requested");
  if (c.potential.kind == PotentialKind::custom) {
    if (c.potential_expr.empty()) {
      fail("custom potential needs potential.expr");
    } else {
      try {
        Expression::parse(c.potential_expr, n);
      } catch (const ExpressionError& e) {
        fail("potential.expr: " + std::string(e.what()));
      }
    }
  } else {
    try {
      build_potential(c, kDefaultSeed);
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
  }
  if (c.g.family == "expr") {
    if (c.g.expr.empty()) {
      fail("g = expr needs g.expr");
    } else {
      try {
        Expression::parse(c.g.expr, n);
      } catch (const ExpressionError& e) {
        fail("g.expr: " + std::string(e.what()));
      }
    }
  }
  if (c.g.family == "linear" && c.g.a.size() == 0) fail("g = linear needs g.a");
  if (c.g.family == "bump" && !(c.g.radius > 0.0)) fail("g.radius must be positive");
  if (c.g.family == "neg_potential" && !(c.g.b > 0.0)) fail("g.b must be positive");
  try {
    Expression::parse(c.U, n);
  } catch (const ExpressionError& e) {
    fail("U: " + std::string(e.what()));
  }
  if (!(c.tail_tol > 0.0 && c.tail_tol < 1.0)) fail("tail_tol must lie in (0, 1)");
  if (c.resolution != 0 && c.resolution < 5) fail("resolution must be >= 5");
  if (c.tol && !(*c.tol >= 0.0)) fail("tol must be nonnegative");
  if (!(c.lambda > 0.0)) fail("lambda must be positive");
  if (c.eps.empty()) fail("eps ladder is empty");
  if (c.s.empty()) fail("s ladder is empty");
  for (double s : c.s) {
    if (!(s > 0.0 && s < 0.5)) fail("s values must lie in (0, 1/2)");
  }
  if (!(c.pl_s > 0.0 && c.pl_s < 0.5)) fail("pl_s must lie in (0, 1/2)");
  if (c.z_count < 1 || !(c.z_max >= c.z_min)) fail("z grid is empty");
  if (c.y_nodes < 3) fail("y_nodes must be >= 3");
  auto needs_1d = [&](Checker ch) {
    if (n != 1 && std::find(c.checkers.begin(), c.checkers.end(), ch) != c.checkers.end()) {
      fail(to_string(ch) + " is implemented in dimension 1 only");
    }
  };
  needs_1d(Checker::transport);
  needs_1d(Checker::prekopa_leindler);
  if (std::find(c.checkers.begin(), c.checkers.end(), Checker::power_constant) != c.checkers.end() &&
      c.potential.kind != PotentialKind::power) {
    fail("power_constant needs potential = power");
  }
  if (std::find(c.checkers.begin(), c.checkers.end(), Checker::lemma_order) != c.checkers.end() && c.s.size() < 2) {
    fail("lemma_order needs at least 2 values of s");
  }
  if (c.k < 2 || c.k > 256) fail("k must lie in [2, 256]");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : InvalidArgument("invalid config:\n" + join(errors)), errors_(std::move(errors)) {}

std::string to_string(Checker checker) {
  switch (checker) {
    case Checker::mlsi: return "mlsi";
    case Checker::gross: return "gross";
    case Checker::brascamp_lieb: return "brascamp_lieb";
    case Checker::perturbation: return "perturbation";
    case Checker::euclidean_lsi: return "euclidean_lsi";
    case Checker::optimal_lambda: return "optimal_lambda";
    case Checker::equality_case: return "equality_case";
    case Checker::homogeneous_lsi: return "homogeneous_lsi";
    case Checker::large_entropy: return "large_entropy";
    case Checker::power_constant: return "power_constant";
    case Checker::lemma_order: return "lemma_order";
    case Checker::prekopa_leindler: return "prekopa_leindler";
    case Checker::transport: return "transport";
    case Checker::fixture: return "fixture";
  }
  return "unknown";
}

std::optional<Checker> parse_checker(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(Checker::fixture); ++i) {
    if (to_string(static_cast<Checker>(i)) == name) return static_cast<Checker>(i);
  }
  return std::nullopt;
}

std::vector<double> parse_ladder(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw InvalidArgument("empty ladder");
  if (t.find(':') != std::string::npos) {
    const std::vector<std::string> parts = split(t, ':');
    if (parts.size() != 3) throw InvalidArgument("range ladder must read lo:hi:count");
    const std::size_t count = to_size(parts[2]);
    if (count == 0) throw InvalidArgument("empty ladder");
    const double lo = to_double(parts[0]), hi = to_double(parts[1]);
    if (count == 1) return {lo};
    return linspace(lo, hi, count);
  }
  std::vector<double> out;
  for (const std::string& p : split(t, ',')) out.push_back(to_double(p));
  return out;
}

SuiteConfig parse_config(const std::string& text) {
  SuiteConfig suite;
  suite.text = text;
  std::vector<std::string> errors;
  std::vector<std::vector<Entry>> entries;  // per scenario
  std::vector<std::string> names;
  std::vector<int> header_lines;
  enum class Section { none, suite, scenario } section = Section::none;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string l = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (l.empty()) continue;
    const std::string at = "line " + std::to_string(line);
    if (l.front() == '[') {
      if (l.back() != ']') {
        errors.push_back(at + ": unterminated section header");
        section = Section::none;
        continue;
      }
      const std::string inside = trim(l.substr(1, l.size() - 2));
      if (inside == "suite") {
        section = Section::suite;
      } else if (inside.rfind("scenario", 0) == 0 && inside.size() > 8 && std::isspace(static_cast<unsigned char>(inside[8]))) {
        const std::string name = trim(inside.substr(8));
        if (std::find(names.begin(), names.end(), name) != names.end()) {
          errors.push_back(at + ": duplicate scenario '" + name + "'");
        }
        names.push_back(name);
        header_lines.push_back(line);
        entries.emplace_back();
        section = Section::scenario;
      } else {
        errors.push_back(at + ": unknown section [" + inside + "]");
        section = Section::none;
      }
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) {
      errors.push_back(at + ": expected key = value");
      continue;
    }
    const std::string key = trim(l.substr(0, eq)), value = trim(l.substr(eq + 1));
    if (section == Section::none) {
      errors.push_back(at + ": key '" + key + "' outside any section");
    } else if (section == Section::suite) {
      try {
        if (key == "name") {
          suite.name = value;
        } else if (key == "seed") {
          suite.seed = std::stoull(value, nullptr, 0);
        } else if (key == "output_dir") {
          suite.output_dir = value;
        } else if (key == "parallel") {
          suite.parallel = to_bool(value);
        } else {
          errors.push_back(at + ": unknown key '" + key + "' in [suite]");
        }
      } catch (const std::exception&) {
        errors.push_back(at + ": bad value for " + key + ": '" + value + "'");
      }
    } else {
      entries.back().push_back({key, value, line});
    }
  }

  const auto& keys = scenario_keys();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ScenarioConfig c;
    c.name = names[i];
    c.line = header_lines[i];
    std::map<std::string, int> seen;
    // dim first: vector-valued keys depend on it.
    for (const Entry& e : entries[i]) {
      if (e.key != "dim") continue;
      try {
        const std::size_t d = to_size(e.value);
        if (d < 1 || d > 8) throw InvalidArgument("dim must lie in [1, 8]");
        c.potential.dim = static_cast<int>(d);
      } catch (const InvalidArgument& ex) {
        errors.push_back("line " + std::to_string(e.line) + ": " + ex.what());
      }
    }
    for (const Entry& e : entries[i]) {
      const std::string at = "line " + std::to_string(e.line);
      if (seen.count(e.key)) errors.push_back(at + ": duplicate key '" + e.key + "'");
      seen[e.key] = e.line;
      if (e.key == "dim") continue;
      const auto it = keys.find(e.key);
      if (it == keys.end()) {
        errors.push_back(at + ": unknown key '" + e.key + "'");
        continue;
      }
      try {
        it->second(c, e.value);
      } catch (const InvalidArgument& ex) {
        errors.push_back(at + ": " + e.key + ": " + ex.what());
      }
    }
    if (!seen.count("potential")) errors.push_back("scenario '" + c.name + "': missing key 'potential'");
    validate(c, "scenario '" + c.name + "' (line " + std::to_string(c.line) + ")", errors);
    suite.scenarios.push_back(std::move(c));
  }
  if (entries.empty()) errors.push_back("no [scenario NAME] sections");
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return suite;
}

SuiteConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

Potential build_potential(const ScenarioConfig& scenario, std::uint64_t seed) {
  if (scenario.potential.kind != PotentialKind::custom) return make_builtin_potential(scenario.potential, seed);
  const Expression f = Expression::parse(scenario.potential_expr, scenario.potential.dim);
  return make_custom_potential(scenario.potential.dim, [f](const Vec& x) { return f(x); }, scenario.potential_expr);
}

TestFunction build_function(const FunctionSpec& spec, int dim, const Potential& raw) {
  const Vec center = spec.center.size() == dim ? spec.center : Vec::Zero(dim);
  TestFunction g;
  if (spec.family == "constant") {
    g = constant_function(dim, spec.value);
  } else if (spec.family == "linear") {
    if (spec.a.size() != dim) throw InvalidArgument("g.a: dimension mismatch");
    g = linear_function(spec.a, spec.offset);
  } else if (spec.family == "quadratic") {
    g = quadratic_function(spec.coef, center);
  } else if (spec.family == "neg_potential") {
    g = neg_potential_function(raw, spec.b, center);
  } else if (spec.family == "bump") {
    g = bump_function(center, spec.radius, spec.height);
  } else if (spec.family == "expr") {
    const Expression f = Expression::parse(spec.expr, dim);
    g = custom_function(dim, [f](const Vec& x) { return f(x); }, spec.expr);
  } else {
    throw InvalidArgument("unknown test-function family '" + spec.family + "'");
  }
  if (spec.add_quadratic) g = sum_function(quadratic_function(*spec.add_quadratic, Vec::Zero(dim)), g);
  return g;
}

}  // namespace mlsi
