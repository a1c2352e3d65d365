#pragma once

#include <mlsi/expression.hpp>
#include <mlsi/functionals.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mlsi {

/// Every problem found in a config file, one message per entry.
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

enum class Checker {
  mlsi,
  gross,
  brascamp_lieb,
  perturbation,
  euclidean_lsi,
  optimal_lambda,
  equality_case,
  homogeneous_lsi,
  large_entropy,
  power_constant,
  lemma_order,
  prekopa_leindler,
  transport,
  fixture,
};

std::string to_string(Checker checker);
std::optional<Checker> parse_checker(const std::string& name);

struct FunctionSpec {
  std::string family = "constant";  // constant, linear, quadratic, neg_potential, bump, expr
  double value = 0.0;               // constant
  Vec a;                            // linear slope
  double offset = 0.0;              // linear
  double coef = -0.5;               // quadratic coefficient
  Vec center;                       // quadratic, neg_potential, bump
  double b = 1.0;                   // neg_potential
  double radius = 1.0;              // bump
  double height = 1.0;              // bump
  std::string expr;                 // expr
  std::optional<double> add_quadratic;  // adds coef |x|^2 to any family
};

struct ScenarioConfig {
  std::string name;
  int line = 0;  // header line in the config file
  PotentialSpec potential;
  std::string potential_expr;  // custom potentials
  FunctionSpec g;
  std::vector<Checker> checkers;

  // Quadrature.
  std::size_t resolution = 0;  // 0 selects default_resolution(dim)
  double tail_tol = 1e-10;
  double pad = 2.0;
  std::size_t lebesgue_resolution = 0;  // 0: 4001 in 1-D, default_resolution(dim) otherwise

  std::optional<double> tol;  // replaces every report tolerance

  // Per-checker parameters.
  double lambda = 1.0;
  std::optional<double> expected_lambda;
  std::vector<double> eps{0.1, 0.05, 0.025};
  std::string U = "0";
  std::vector<double> s{0.01, 0.005, 0.0025};
  double z_min = -1.5;
  double z_max = 1.5;
  std::size_t z_count = 13;
  double y_radius = 6.0;
  std::size_t y_nodes = 241;
  double pl_s = 0.1;
  std::size_t pl_nodes = 801;
  std::size_t k = 64;
  double gross_bound = 1e-8;
  double equality_bound = 1e-4;
  double lemma_slope_min = 1.8;
  double lemma_slope_max = 2.2;
  double power_doubling_bound = 0.01;
  double fixture_lhs = 0.0;
  double fixture_rhs = 0.0;
};

struct SuiteConfig {
  std::string name = "suite";
  std::uint64_t seed = kDefaultSeed;
  std::string output_dir = "mlsi-out";
  bool parallel = true;
  std::vector<ScenarioConfig> scenarios;
  std::string text;  // the source, for hashing
};

/// Parses the line-oriented format:
///   # comment
///   [suite]            name, seed, output_dir, parallel
///   [scenario NAME]    potential, dim, p, ... (see README)
/// Collects all errors before throwing ConfigError.
SuiteConfig parse_config(const std::string& text);
SuiteConfig load_config(const std::string& path);

/// Builds the potential of a scenario. Custom kinds use potential_expr.
Potential build_potential(const ScenarioConfig& scenario, std::uint64_t seed);
/// Builds g. The potential is needed by the neg_potential family.
TestFunction build_function(const FunctionSpec& spec, int dim, const Potential& raw);

/// Values of "a, b, c" or the range "lo:hi:count".
std::vector<double> parse_ladder(const std::string& text);

}  // namespace mlsi
