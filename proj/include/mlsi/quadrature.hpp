#pragma once

#include <mlsi/potential.hpp>

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace mlsi {

struct Box {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  double volume() const;
  bool contains(const Vec& x) const;
  /// Enlarges every side by `pad`.
  Box padded(double pad) const;
  /// Smallest box containing both.
  Box hull(const Box& other) const;
};

Box make_box(const Vec& lower, const Vec& upper);
Box symmetric_box(int dim, double radius);

enum class Scheme { trapezoid, midpoint };

// Tensor-product rule on a uniform per-axis grid. Nodes are stored row-major
// with the last axis varying fastest, which fixes the summation order.
class QuadratureRule {
 public:
  QuadratureRule(Box box, std::vector<std::size_t> resolution, Scheme scheme = Scheme::trapezoid);

  int dim() const { return box_.dim(); }
  std::size_t size() const { return weights_.size(); }
  const Box& box() const { return box_; }
  Scheme scheme() const { return scheme_; }
  const std::vector<std::size_t>& resolution() const { return resolution_; }
  const std::vector<double>& axis(int d) const { return axes_[static_cast<std::size_t>(d)]; }

  Vec node(std::size_t i) const;
  std::span<const double> weights() const { return weights_; }
  bool on_boundary(std::size_t i) const;

  /// Same box with (r + 1) / 2 nodes per axis; nodes nest in this rule.
  QuadratureRule coarsened() const;
  /// Same box with 2 r - 1 nodes per axis.
  QuadratureRule refined() const;

  /// One row per node: coordinates, weight.
  void write_csv(std::ostream& out) const;

 private:
  Box box_;
  std::vector<std::size_t> resolution_;
  Scheme scheme_;
  std::vector<std::vector<double>> axes_;
  std::vector<double> weights_;
};

/// Resolution used by the suites: 2001 nodes in 1-D, 301 per axis in 2-D,
/// 41 per axis beyond that.
std::size_t default_resolution(int dim);
QuadratureRule make_rule(const Box& box, std::size_t per_axis, Scheme scheme = Scheme::trapezoid);

/// Neumaier-compensated sum in the given order.
double compensated_sum(std::span<const double> terms);

/// Per signed axis direction, the smallest radius R (rounded up to a multiple of
/// 0.5) whose e^{-phi} line tail beyond R is below tail_tol times the mass
/// inside. Throws NumericalError when no R <= 100 works.
Box truncation_box(const Potential& potential, double tail_tol, const Vec& center);
Box truncation_box(const Potential& potential, double tail_tol);

/// Sum of w_i f(x_i). Throws NumericalError naming the node if f is not finite.
double integrate(const std::function<double(const Vec&)>& f, const QuadratureRule& rule);
/// Same, for values already evaluated at the rule's nodes.
double integrate_values(std::span<const double> values, const QuadratureRule& rule);

/// log of the integral of e^{-phi} over the rule.
double log_partition(const Potential& potential, const QuadratureRule& rule);

/// phi + log Z, so that e^{-phi} integrates to 1 under the rule. Records the
/// accumulated constant in log_partition.
Potential normalize(const Potential& potential, const QuadratureRule& rule);

}  // namespace mlsi
