#pragma once

#include <mlsi/types.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace mlsi {

inline constexpr std::uint64_t kDefaultSeed = 0x5eed'1e57'c0ff'ee42ULL;

enum class PotentialKind { gaussian, power, powerlog, interaction, custom };

std::string to_string(PotentialKind kind);
std::optional<PotentialKind> parse_potential_kind(const std::string& name);

using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;
using MatrixField = std::function<Mat(const Vec&)>;

// A strictly convex potential phi on R^n. Optional members are empty
// std::function objects when the closed form is not available.
struct Potential {
  int dim = 1;
  PotentialKind kind = PotentialKind::custom;
  std::string label;

  ScalarField eval;
  VectorField grad;
  MatrixField hess;
  ScalarField conjugate;
  VectorField conjugate_grad;

  // Sum of the log Z constants folded into eval by normalize().
  double log_partition = 0.0;
  std::optional<double> homogeneity_degree;
  bool even = false;

  bool has_hessian() const { return static_cast<bool>(hess); }
  bool has_conjugate() const { return static_cast<bool>(conjugate); }
  bool has_conjugate_grad() const { return static_cast<bool>(conjugate_grad); }

  /// phi + c. The conjugate shifts by -c, gradients are unchanged.
  Potential shifted(double c) const;

  /// k * phi for k > 0, with (k phi)*(y) = k phi*(y / k).
  Potential scaled(double k) const;
};

struct PotentialSpec {
  PotentialKind kind = PotentialKind::gaussian;
  int dim = 1;
  double p = 2.0;      // power exponent
  double scale = 1.0;  // power: scale * |x|^p / p
  double a = 3.0;      // powerlog: x^a log^b x for |x| >= 2
  double b = 1.0;
  double h_quad = 1.5;   // interaction inner h(x) = h_quad x^2 + |x|^h_power / h_power
  double h_power = 4.0;
};

Potential make_gaussian(int dim);
Potential make_power(int dim, double p, double scale = 1.0);
Potential make_powerlog(int dim, double a, double b);
Potential make_interaction(int dim, double h_quad, double h_power);

/// Wraps an arbitrary convex callable. Gradient and Hessian come from central
/// differences.
Potential make_custom_potential(int dim, ScalarField f, std::string label, bool even = false);

/// Builds and validates one of the builtin kinds. Throws InvalidArgument when
/// parameters are out of range or the assembled potential fails the convexity
/// probe.
Potential make_builtin_potential(const PotentialSpec& spec, std::uint64_t seed = kDefaultSeed);

// Interior patch c |x|^m of the powerlog potential on |x| < 2. The exponent is
// fixed by matching value and slope of x^a log^b x at x = 2.
struct PowerlogPatch {
  double coefficient;
  double exponent;
};
PowerlogPatch powerlog_patch(double a, double b);

double conjugate_analytic(const Potential& potential, const Vec& y);

/// Bregman cost phi(y) - phi(x) - (y - x).grad phi(x) >= 0.
double bregman_cost(const Potential& potential, const Vec& x, const Vec& y);

struct ProbeOptions {
  std::uint64_t seed = kDefaultSeed;
  int samples = 200;
  double radius = 3.0;
  double tol = 1e-9;
  double tol_fd = 1e-5;
};

struct InvariantProbe {
  double max_midpoint_violation = 0.0;  // max of phi(mid) - avg, clipped at 0
  double max_gradient_error = 0.0;      // relative to max(1, |grad|)
  double max_fenchel_young_gap = 0.0;   // NaN-free; 0 without a conjugate
  double min_hessian_eigenvalue = 0.0;  // NaN when no Hessian
  bool superlinear = false;
  bool convex = false;
  bool gradient_ok = false;
  bool fenchel_young_ok = false;
};

InvariantProbe probe_invariants(const Potential& potential, const ProbeOptions& options = {});

}  // namespace mlsi
