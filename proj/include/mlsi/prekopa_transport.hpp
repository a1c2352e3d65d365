#pragma once

#include <mlsi/functionals.hpp>
#include <mlsi/report.hpp>

#include <iosfwd>
#include <optional>
#include <vector>

namespace mlsi {

// Sup-convolution g_s(z) = sup over z = t x + s y (t = 1 - s) of
// g(x) - (t phi(x) + s phi(y) - phi(z)).

struct SupConvolution {
  double value = 0.0;
  Vec argmax;  // the maximizing y
};

/// Coarse scan over the tensor grid `y_axes`, then golden-section refinement
/// per coordinate. Throws NumericalError when the coarse argmax lies on the
/// grid boundary (the sup is not localized).
SupConvolution sup_convolution(const Potential& potential, const TestFunction& g, double s, const Vec& z,
                               const std::vector<Axis>& y_axes);

struct ExpansionOrder {
  std::vector<double> s;
  std::vector<double> error;  // E(s) = max_z |g_s(z) - g(z) - s I(z)|
  std::optional<double> slope;  // empty when every E(s) is at round-off ("exact")
  bool exact() const { return !slope.has_value(); }
};

/// Log-log least-squares slope of E(s) over the ladder. For each z the y-grid
/// is centred at z with half-width `y_radius` and `y_nodes` nodes per axis.
ExpansionOrder lemma_expansion_order(const Potential& potential, const TestFunction& g,
                                     const std::vector<double>& s_ladder, const std::vector<Vec>& z_grid,
                                     double y_radius = 6.0, std::size_t y_nodes = 241);

// Prekopa-Leindler: u(x)^t v(y)^{1-t} <= w(t x + (1 - t) y) for all x, y
// implies (int u)^t (int v)^{1-t} <= int w.
struct PLReport {
  bool hypothesis_holds = false;
  double max_violation = 0.0;  // max of u^t v^{1-t} - w_interp over node pairs
  double allowance = 0.0;      // linear-interpolation error bound of w
  double lhs = 0.0;
  double rhs = 0.0;
  double tol = 0.0;
  std::optional<bool> conclusion_holds;  // only claimed when the hypothesis holds
};

/// u, v, w share their axes. The hypothesis is checked over all node pairs
/// with w linearly interpolated and an allowance of max |second difference of w| / 8.
/// Throws OutOfTrustedRange when t x + (1 - t) y leaves the box (never for a
/// common box), CapacityError above 2e7 pairs.
PLReport pl_check(const GridFunction& u, const GridFunction& v, const GridFunction& w, double t);

// Discrete transport with the Bregman cost.

struct WeightedPoints {
  std::vector<Vec> points;
  std::vector<double> masses;
};

WeightedPoints uniform_points(std::vector<Vec> points);

struct Coupling {
  WeightedPoints source;
  WeightedPoints target;
  Mat plan;  // plan(i, j): mass moved from source i to target j
  double cost = 0.0;

  /// Largest deviation of plan row/column sums from the marginals.
  double marginal_error() const;
  void write_csv(std::ostream& out) const;
};

enum class TransportSolver { automatic, exhaustive, assignment };

/// Exact optimum of the uniform-weight assignment problem with cost
/// L(x, y) = bregman_cost(P, x, y), x in source, y in target. Exhaustive search
/// handles <= 12 points (permutations up to 8, subset dynamic programming
/// above); the O(k^3) Hungarian method handles <= 256.
Coupling optimal_coupling(const Potential& potential, const WeightedPoints& source, const WeightedPoints& target,
                          TransportSolver solver = TransportSolver::automatic);

double wasserstein_L(const Potential& potential, const WeightedPoints& source, const WeightedPoints& target,
                     TransportSolver solver = TransportSolver::automatic);

/// Assignment minimizing sum_i cost(i, perm[i]). Exposed for testing.
std::vector<std::size_t> solve_assignment_hungarian(const Mat& cost);
std::vector<std::size_t> solve_assignment_exhaustive(const Mat& cost);

/// k equal-mass points at the (i - 1/2)/k quantiles of density / int density
/// over the rule (1-D), by bisection on the piecewise-linear CDF.
std::vector<double> quantile_points(const ScalarField& density, const QuadratureRule& rule, std::size_t k);

/// W_L(F dmu, dmu) <= int F log F dmu for normalized 1-D phi. The left side
/// uses k-point quantile discretizations; the allowance 2 |W_k - W_{k/2}| is
/// the report tolerance.
DeficitReport check_transport(const Potential& normalized, const ScalarField& F, const QuadratureRule& rule,
                              std::size_t k);

}  // namespace mlsi
