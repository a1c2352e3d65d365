#pragma once

#include <mlsi/types.hpp>

#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace mlsi {

using Axis = std::vector<double>;

Axis linspace(double lo, double hi, std::size_t count);

// Sampled values on a rectangular tensor grid. Values are stored row-major
// (last axis varies fastest).
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(std::vector<Axis> axes, std::vector<double> values);

  static GridFunction sample(std::vector<Axis> axes, const std::function<double(const Vec&)>& f);

  int dim() const { return static_cast<int>(axes_.size()); }
  const std::vector<Axis>& axes() const { return axes_; }
  const Axis& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t flat) const { return values_[flat]; }
  double at(std::span<const std::size_t> index) const { return values_[flatten(index)]; }

  std::size_t flatten(std::span<const std::size_t> index) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;
  Vec node(std::size_t flat) const;

  /// Multilinear interpolation. Throws OutOfTrustedRange outside the grid box.
  double interpolate(const Vec& x) const;

  /// Flat indices and weights of the grid nodes that enter the multilinear
  /// interpolant at x (zero-weight corners omitted).
  std::vector<std::pair<std::size_t, double>> stencil(const Vec& x) const;

  /// One row per node: coordinates then value, with a header row.
  void write_csv(std::ostream& out) const;
  static GridFunction read_csv(std::istream& in);

 private:
  std::vector<Axis> axes_;
  std::vector<double> values_;
};

}  // namespace mlsi
