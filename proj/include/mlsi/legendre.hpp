#pragma once

#include <mlsi/grid_function.hpp>
#include <mlsi/potential.hpp>

#include <memory>
#include <span>
#include <vector>

namespace mlsi {

// Discrete Legendre-Fenchel transforms f*(s) = max_k (s.x_k - f(x_k)).

struct LegendreSweep {
  std::vector<double> values;
  std::vector<std::size_t> argmax;  // primal node attaining each value
};

/// Lower convex hull of (x_k, f_k) merged with the sorted dual slopes, O(N + M).
/// xs and duals must be strictly increasing.
LegendreSweep legendre_hull(std::span<const double> xs, std::span<const double> fs,
                            std::span<const double> duals);

/// Direct O(N M) maximization. Kept as the oracle for legendre_hull.
LegendreSweep legendre_brute(std::span<const double> xs, std::span<const double> fs,
                             std::span<const double> duals);

enum class LegendreMethod { hull, brute_force };

GridFunction discrete_legendre_1d(const GridFunction& f, const Axis& dual_axis,
                                  LegendreMethod method = LegendreMethod::hull);

/// Dual axis spanning the range of discrete slopes of f (the trusted range).
Axis slope_range_axis(const GridFunction& f, std::size_t count);

enum class ConjugateMethod {
  brute_force,  // n <= 2
  factorized,   // n == 2, nested 1-D hull transforms; exact on grids
};

/// Non-separable n-D conjugate. n >= 3 raises CapacityError.
GridFunction conjugate_nd(const GridFunction& f, const std::vector<Axis>& dual_axes,
                          ConjugateMethod method = ConjugateMethod::brute_force);

/// Separable input f(x) = sum_i f_i(x_i): per-axis 1-D transforms summed on the
/// dual tensor grid. Any dimension.
GridFunction conjugate_separable(const std::vector<GridFunction>& factors,
                                 const std::vector<Axis>& dual_axes);

// Tabulated conjugate of a potential with piecewise multilinear interpolation.
// A dual node is trusted when its maximizer is interior to the primal grid;
// queries touching an untrusted node raise OutOfTrustedRange.
class ConjugateTable {
 public:
  struct Options {
    std::size_t primal_nodes_1d = 8001;
    std::size_t dual_nodes_1d = 4001;
    std::size_t primal_nodes_2d = 1201;
    std::size_t dual_nodes_2d = 801;
    double initial_radius = 1.0;
    double max_radius = 100.0;
  };

  /// Grows a centred primal box until every dual node in [lo, hi] is trusted.
  static ConjugateTable covering(const Potential& potential, const Vec& lo, const Vec& hi,
                                 const Options& options);
  static ConjugateTable covering(const Potential& potential, const Vec& lo, const Vec& hi) {
    return covering(potential, lo, hi, Options{});
  }

  double operator()(const Vec& y) const;
  bool trusted(const Vec& y) const;
  /// Primal grid node attaining the max at the dual node nearest to y.
  Vec maximizer(const Vec& y) const;

  const GridFunction& table() const { return table_; }
  double primal_radius() const { return primal_radius_; }
  Vec dual_lower() const;
  Vec dual_upper() const;

 private:
  GridFunction table_;
  std::vector<char> trusted_;
  std::vector<double> argmax_;  // n coordinates per dual node
  double primal_radius_ = 0.0;
};

// Conjugate evaluator used by the functionals: the closed form when the
// potential has one, a ConjugateTable otherwise. Table queries are gated by the
// trusted range and then polished by Newton steps on x.y - phi(x) from the
// grid maximizer.
class Conjugate {
 public:
  static Conjugate analytic(const Potential& potential);

  /// Analytic when available, else a table whose dual box covers all queries.
  static Conjugate for_queries(const Potential& potential, std::span<const Vec> queries,
                               const ConjugateTable::Options& options);
  static Conjugate for_queries(const Potential& potential, std::span<const Vec> queries) {
    return for_queries(potential, queries, ConjugateTable::Options{});
  }

  double operator()(const Vec& y) const;
  bool is_discrete() const { return table_ != nullptr; }
  const ConjugateTable* table() const { return table_.get(); }

 private:
  ScalarField analytic_;
  ScalarField eval_;
  VectorField grad_;
  MatrixField hess_;
  std::shared_ptr<const ConjugateTable> table_;
};

}  // namespace mlsi
