#include <mlsi/grid_function.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace mlsi {

Axis linspace(double lo, double hi, std::size_t count) {
  if (count < 2) throw InvalidArgument("linspace needs at least two nodes");
  if (!(hi > lo)) throw InvalidArgument("linspace needs lo < hi");
  Axis axis(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) axis[i] = lo + step * static_cast<double>(i);
  axis.back() = hi;
  return axis;
}

GridFunction::GridFunction(std::vector<Axis> axes, std::vector<double> values)
    : axes_(std::move(axes)), values_(std::move(values)) {
  if (axes_.empty()) throw InvalidArgument("GridFunction needs at least one axis");
  std::size_t expected = 1;
  for (const Axis& axis : axes_) {
    if (axis.empty()) throw InvalidArgument("GridFunction axis is empty");
    for (std::size_t i = 1; i < axis.size(); ++i) {
      if (!(axis[i] > axis[i - 1])) throw InvalidArgument("GridFunction axis must be strictly increasing");
    }
    expected *= axis.size();
  }
  if (values_.size() != expected) throw InvalidArgument("GridFunction value count does not match axes");
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("GridFunction values must be finite");
  }
}

GridFunction GridFunction::sample(std::vector<Axis> axes, const std::function<double(const Vec&)>& f) {
  std::size_t total = 1;
  for (const Axis& axis : axes) total *= axis.size();
  std::vector<double> values(total);
  const int n = static_cast<int>(axes.size());
  std::vector<std::size_t> index(static_cast<std::size_t>(n), 0);
  Vec x(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (int d = 0; d < n; ++d) x[d] = axes[static_cast<std::size_t>(d)][index[static_cast<std::size_t>(d)]];
    values[flat] = f(x);
    for (int d = n - 1; d >= 0; --d) {
      auto& i = index[static_cast<std::size_t>(d)];
      if (++i < axes[static_cast<std::size_t>(d)].size()) break;
      i = 0;
    }
  }
  return GridFunction(std::move(axes), std::move(values));
}

std::size_t GridFunction::flatten(std::span<const std::size_t> index) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) flat = flat * axes_[d].size() + index[d];
  return flat;
}

std::vector<std::size_t> GridFunction::unflatten(std::size_t flat) const {
  std::vector<std::size_t> index(axes_.size());
  for (std::size_t d = axes_.size(); d-- > 0;) {
    index[d] = flat % axes_[d].size();
    flat /= axes_[d].size();
  }
  return index;
}

Vec GridFunction::node(std::size_t flat) const {
  const auto index = unflatten(flat);
  Vec x(dim());
  for (std::size_t d = 0; d < axes_.size(); ++d) x[static_cast<Eigen::Index>(d)] = axes_[d][index[d]];
  return x;
}

double GridFunction::interpolate(const Vec& x) const {
  double result = 0.0;
  for (const auto& [flat, weight] : stencil(x)) result += weight * values_[flat];
  return result;
}

std::vector<std::pair<std::size_t, double>> GridFunction::stencil(const Vec& x) const {
  const std::size_t n = axes_.size();
  if (static_cast<std::size_t>(x.size()) != n) throw InvalidArgument("interpolate: dimension mismatch");
  std::vector<std::size_t> lower(n);
  std::vector<double> frac(n);
  for (std::size_t d = 0; d < n; ++d) {
    const Axis& axis = axes_[d];
    const double xd = x[static_cast<Eigen::Index>(d)];
    if (xd < axis.front() || xd > axis.back()) {
      throw OutOfTrustedRange("interpolate: point " + to_string(x) + " lies outside the grid box");
    }
    if (axis.size() == 1) {
      lower[d] = 0;
      frac[d] = 0.0;
      continue;
    }
    auto it = std::upper_bound(axis.begin(), axis.end(), xd);
    std::size_t i = static_cast<std::size_t>(std::distance(axis.begin(), it));
    i = std::clamp<std::size_t>(i, 1, axis.size() - 1) - 1;
    lower[d] = i;
    frac[d] = (xd - axis[i]) / (axis[i + 1] - axis[i]);
  }
  std::vector<std::pair<std::size_t, double>> out;
  std::vector<std::size_t> index(n);
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double weight = 1.0;
    bool valid = true;
    for (std::size_t d = 0; d < n; ++d) {
      const bool upper = (corner >> d) & 1U;
      if (upper && frac[d] == 0.0) {
        valid = false;
        break;
      }
      index[d] = lower[d] + (upper ? 1 : 0);
      weight *= upper ? frac[d] : 1.0 - frac[d];
    }
    if (valid && weight != 0.0) out.emplace_back(flatten(index), weight);
  }
  return out;
}

void GridFunction::write_csv(std::ostream& out) const {
  for (std::size_t d = 0; d < axes_.size(); ++d) out << 'x' << (d + 1) << ',';
  out << "value\n";
  out.precision(17);
  for (std::size_t flat = 0; flat < values_.size(); ++flat) {
    const auto index = unflatten(flat);
    for (std::size_t d = 0; d < axes_.size(); ++d) out << axes_[d][index[d]] << ',';
    out << values_[flat] << '\n';
  }
}

GridFunction GridFunction::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("grid CSV: missing header");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) throw InvalidArgument("grid CSV: need coordinate and value columns");
  const std::size_t n = columns - 1;

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<double> row;
    std::string cell;
    while (std::getline(fields, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != columns) throw InvalidArgument("grid CSV: ragged row '" + line + "'");
    rows.push_back(std::move(row));
  }
  std::vector<Axis> axes(n);
  for (std::size_t d = 0; d < n; ++d) {
    Axis& axis = axes[d];
    for (const auto& row : rows) axis.push_back(row[d]);
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  }
  GridFunction shape(axes, std::vector<double>(rows.size(), 0.0));
  std::vector<double> values(rows.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> index(n);
  for (const auto& row : rows) {
    for (std::size_t d = 0; d < n; ++d) {
      index[d] = static_cast<std::size_t>(
          std::lower_bound(axes[d].begin(), axes[d].end(), row[d]) - axes[d].begin());
    }
    values[shape.flatten(index)] = row[n];
  }
  return GridFunction(std::move(axes), std::move(values));
}

}  // namespace mlsi
