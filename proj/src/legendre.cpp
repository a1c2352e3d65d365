#include <mlsi/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mlsi {

namespace {

void require_increasing(std::span<const double> axis, const char* what) {
  if (axis.empty()) throw InvalidArgument(std::string(what) + " is empty");
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) throw InvalidArgument(std::string(what) + " must be strictly increasing");
  }
}

}  // namespace

LegendreSweep legendre_hull(std::span<const double> xs, std::span<const double> fs,
                            std::span<const double> duals) {
  require_increasing(xs, "primal axis");
  require_increasing(duals, "dual axis");
  if (fs.size() != xs.size()) throw InvalidArgument("legendre_hull: value count mismatch");

  // Lower convex hull, monotone chain.
  std::vector<std::size_t> hull;
  hull.reserve(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross = (xs[b] - xs[a]) * (fs[k] - fs[a]) - (fs[b] - fs[a]) * (xs[k] - xs[a]);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(k);
  }

  LegendreSweep out;
  out.values.resize(duals.size());
  out.argmax.resize(duals.size());
  auto value = [&](double s, std::size_t k) { return s * xs[k] - fs[k]; };
  std::size_t j = 0;
  for (std::size_t m = 0; m < duals.size(); ++m) {
    const double s = duals[m];
    while (j + 1 < hull.size() && value(s, hull[j + 1]) > value(s, hull[j])) ++j;
    // Neighbour sweep absorbs rounding in the hull construction.
    std::size_t best = hull[j];
    double best_value = value(s, best);
    const std::size_t lo = best > 0 ? best - 1 : 0;
    const std::size_t hi = std::min(best + 1, xs.size() - 1);
    for (std::size_t k = lo; k <= hi; ++k) {
      const double v = value(s, k);
      if (v > best_value || (v == best_value && k < best)) {
        best_value = v;
        best = k;
      }
    }
    out.values[m] = best_value;
    out.argmax[m] = best;
  }
  return out;
}

LegendreSweep legendre_brute(std::span<const double> xs, std::span<const double> fs,
                             std::span<const double> duals) {
  require_increasing(xs, "primal axis");
  if (duals.empty()) throw InvalidArgument("dual axis is empty");
  if (fs.size() != xs.size()) throw InvalidArgument("legendre_brute: value count mismatch");
  LegendreSweep out;
  out.values.resize(duals.size());
  out.argmax.resize(duals.size());
  for (std::size_t m = 0; m < duals.size(); ++m) {
    const double s = duals[m];
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double v = s * xs[k] - fs[k];
      if (v > best) {
        best = v;
        arg = k;
      }
    }
    out.values[m] = best;
    out.argmax[m] = arg;
  }
  return out;
}

GridFunction discrete_legendre_1d(const GridFunction& f, const Axis& dual_axis, LegendreMethod method) {
  if (f.dim() != 1) throw InvalidArgument("discrete_legendre_1d needs a 1-D grid function");
  if (f.size() == 0) throw InvalidArgument("discrete_legendre_1d: empty primal grid");
  require_increasing(dual_axis, "dual axis");
  const auto sweep = method == LegendreMethod::hull ? legendre_hull(f.axis(0), f.values(), dual_axis)
                                                    : legendre_brute(f.axis(0), f.values(), dual_axis);
  return GridFunction({dual_axis}, sweep.values);
}

Axis slope_range_axis(const GridFunction& f, std::size_t count) {
  if (f.dim() != 1 || f.size() < 2) throw InvalidArgument("slope_range_axis needs a 1-D grid with >= 2 nodes");
  const Axis& x = f.axis(0);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double slope = (f[k + 1] - f[k]) / (x[k + 1] - x[k]);
    lo = std::min(lo, slope);
    hi = std::max(hi, slope);
  }
  if (!(hi > lo)) throw InvalidArgument("slope_range_axis: f is affine, the dual range is a single point");
  return linspace(lo, hi, count);
}

namespace {

struct Table2d {
  std::vector<double> values;  // row-major over (y1, y2)
  std::vector<char> interior;
  std::vector<double> argmax;  // (x1, x2) of the maximizer per dual node
};

// Nested transform: h(x1, y2) = max_x2 (y2 x2 - f(x1, x2)),
// f*(y1, y2) = max_x1 (y1 x1 + h(x1, y2)). Both maxima run over grid nodes,
// so the result equals the brute-force grid maximum.
Table2d factorized_2d(const Axis& x1, const Axis& x2, std::span<const double> f, const Axis& y1,
                      const Axis& y2) {
  const std::size_t n1 = x1.size(), n2 = x2.size(), m1 = y1.size(), m2 = y2.size();
  std::vector<double> h(n1 * m2);
  std::vector<std::size_t> arg2(n1 * m2);
  for (std::size_t i = 0; i < n1; ++i) {
    const auto sweep = legendre_hull(x2, f.subspan(i * n2, n2), y2);
    std::copy(sweep.values.begin(), sweep.values.end(), h.begin() + static_cast<std::ptrdiff_t>(i * m2));
    std::copy(sweep.argmax.begin(), sweep.argmax.end(), arg2.begin() + static_cast<std::ptrdiff_t>(i * m2));
  }
  Table2d out;
  out.values.resize(m1 * m2);
  out.interior.resize(m1 * m2);
  out.argmax.resize(2 * m1 * m2);
  std::vector<double> column(n1);
  for (std::size_t j = 0; j < m2; ++j) {
    for (std::size_t i = 0; i < n1; ++i) column[i] = -h[i * m2 + j];
    const auto sweep = legendre_hull(x1, column, y1);
    for (std::size_t k = 0; k < m1; ++k) {
      const std::size_t i = sweep.argmax[k];
      const std::size_t i2 = arg2[i * m2 + j];
      out.values[k * m2 + j] = sweep.values[k];
      out.interior[k * m2 + j] = i > 0 && i + 1 < n1 && i2 > 0 && i2 + 1 < n2;
      out.argmax[2 * (k * m2 + j)] = x1[i];
      out.argmax[2 * (k * m2 + j) + 1] = x2[i2];
    }
  }
  return out;
}

}  // namespace

GridFunction conjugate_nd(const GridFunction& f, const std::vector<Axis>& dual_axes, ConjugateMethod method) {
  const int n = f.dim();
  if (static_cast<int>(dual_axes.size()) != n) throw InvalidArgument("conjugate_nd: dual axes dimension mismatch");
  for (const Axis& axis : dual_axes) require_increasing(axis, "dual axis");
  if (n >= 3) {
    throw CapacityError("conjugate_nd: non-separable conjugation is limited to n <= 2 (got n = " +
                        std::to_string(n) + "); declare a separable decomposition instead");
  }
  if (n == 1) {
    return discrete_legendre_1d(f, dual_axes[0],
                                method == ConjugateMethod::brute_force ? LegendreMethod::brute_force
                                                                       : LegendreMethod::hull);
  }
  if (method == ConjugateMethod::factorized) {
    auto table = factorized_2d(f.axis(0), f.axis(1), f.values(), dual_axes[0], dual_axes[1]);
    return GridFunction(dual_axes, std::move(table.values));
  }
  const Axis &x1 = f.axis(0), &x2 = f.axis(1);
  const Axis &y1 = dual_axes[0], &y2 = dual_axes[1];
  std::vector<double> values(y1.size() * y2.size());
  const auto fv = f.values();
  for (std::size_t a = 0; a < y1.size(); ++a) {
    for (std::size_t b = 0; b < y2.size(); ++b) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < x1.size(); ++i) {
        const double partial = y1[a] * x1[i];
        for (std::size_t j = 0; j < x2.size(); ++j) {
          best = std::max(best, partial + y2[b] * x2[j] - fv[i * x2.size() + j]);
        }
      }
      values[a * y2.size() + b] = best;
    }
  }
  return GridFunction(dual_axes, std::move(values));
}

GridFunction conjugate_separable(const std::vector<GridFunction>& factors, const std::vector<Axis>& dual_axes) {
  if (factors.empty() || factors.size() != dual_axes.size()) {
    throw InvalidArgument("conjugate_separable: need one factor per dual axis");
  }
  std::vector<GridFunction> parts;
  parts.reserve(factors.size());
  for (std::size_t d = 0; d < factors.size(); ++d) parts.push_back(discrete_legendre_1d(factors[d], dual_axes[d]));
  return GridFunction::sample(dual_axes, [&](const Vec& y) {
    // Nodes of the sampled grid coincide with the per-axis dual nodes.
    double total = 0.0;
    for (std::size_t d = 0; d < parts.size(); ++d) total += parts[d].interpolate(vec1(y[static_cast<Eigen::Index>(d)]));
    return total;
  });
}

ConjugateTable ConjugateTable::covering(const Potential& potential, const Vec& lo, const Vec& hi,
                                        const Options& options) {
  const int n = potential.dim;
  if (n > 2) throw CapacityError("ConjugateTable supports n <= 2");
  if (lo.size() != n || hi.size() != n) throw InvalidArgument("ConjugateTable: dual box dimension mismatch");
  std::vector<Axis> dual_axes(static_cast<std::size_t>(n));
  const std::size_t dual_count = n == 1 ? options.dual_nodes_1d : options.dual_nodes_2d;
  const std::size_t primal_count = n == 1 ? options.primal_nodes_1d : options.primal_nodes_2d;
  for (int d = 0; d < n; ++d) {
    double a = lo[d], b = hi[d];
    const double pad = 1e-3 * std::max(1.0, b - a);
    dual_axes[static_cast<std::size_t>(d)] = linspace(a - pad, b + pad, dual_count);
  }

  for (double R = options.initial_radius; R <= options.max_radius * 1.0000001; R *= 1.5) {
    const double radius = std::min(R, options.max_radius);
    std::vector<Axis> primal_axes(static_cast<std::size_t>(n), linspace(-radius, radius, primal_count));
    const GridFunction f = GridFunction::sample(primal_axes, potential.eval);
    ConjugateTable table;
    table.primal_radius_ = radius;
    if (n == 1) {
      const auto sweep = legendre_hull(primal_axes[0], f.values(), dual_axes[0]);
      table.table_ = GridFunction(dual_axes, sweep.values);
      table.trusted_.resize(sweep.argmax.size());
      table.argmax_.resize(sweep.argmax.size());
      for (std::size_t k = 0; k < sweep.argmax.size(); ++k) {
        table.trusted_[k] = sweep.argmax[k] > 0 && sweep.argmax[k] + 1 < primal_count;
        table.argmax_[k] = primal_axes[0][sweep.argmax[k]];
      }
    } else {
      auto t = factorized_2d(primal_axes[0], primal_axes[1], f.values(), dual_axes[0], dual_axes[1]);
      table.table_ = GridFunction(dual_axes, std::move(t.values));
      table.trusted_ = std::move(t.interior);
      table.argmax_ = std::move(t.argmax);
    }
    if (std::all_of(table.trusted_.begin(), table.trusted_.end(), [](char c) { return c != 0; })) {
      return table;
    }
    if (radius >= options.max_radius) break;
  }
  std::ostringstream msg;
  msg << "ConjugateTable: dual box " << to_string(lo) << " .. " << to_string(hi) << " of " << potential.label
      << " is not reachable within primal radius " << options.max_radius;
  throw OutOfTrustedRange(msg.str());
}

bool ConjugateTable::trusted(const Vec& y) const {
  for (int d = 0; d < table_.dim(); ++d) {
    const Axis& axis = table_.axis(d);
    if (y[d] < axis.front() || y[d] > axis.back()) return false;
  }
  for (const auto& [flat, weight] : table_.stencil(y)) {
    if (!trusted_[flat]) return false;
  }
  return true;
}

double ConjugateTable::operator()(const Vec& y) const {
  if (!trusted(y)) {
    throw OutOfTrustedRange("discrete conjugate queried at " + to_string(y) + " outside its trusted dual range");
  }
  return table_.interpolate(y);
}

Vec ConjugateTable::maximizer(const Vec& y) const {
  const int n = table_.dim();
  std::size_t best = 0;
  double weight = -1.0;
  for (const auto& [flat, w] : table_.stencil(y)) {
    if (w > weight) best = flat, weight = w;
  }
  Vec x(n);
  for (int d = 0; d < n; ++d) x[d] = argmax_[best * static_cast<std::size_t>(n) + static_cast<std::size_t>(d)];
  return x;
}

Vec ConjugateTable::dual_lower() const {
  Vec v(table_.dim());
  for (int d = 0; d < table_.dim(); ++d) v[d] = table_.axis(d).front();
  return v;
}

Vec ConjugateTable::dual_upper() const {
  Vec v(table_.dim());
  for (int d = 0; d < table_.dim(); ++d) v[d] = table_.axis(d).back();
  return v;
}

Conjugate Conjugate::analytic(const Potential& potential) {
  if (!potential.has_conjugate()) throw InvalidArgument(potential.label + " has no analytic conjugate");
  Conjugate c;
  c.analytic_ = potential.conjugate;
  return c;
}

Conjugate Conjugate::for_queries(const Potential& potential, std::span<const Vec> queries,
                                 const ConjugateTable::Options& options) {
  if (potential.has_conjugate()) return analytic(potential);
  if (queries.empty()) throw InvalidArgument("Conjugate::for_queries: no query points");
  Vec lo = queries.front(), hi = queries.front();
  for (const Vec& y : queries) {
    lo = lo.cwiseMin(y);
    hi = hi.cwiseMax(y);
  }
  for (int d = 0; d < potential.dim; ++d) {
    const double pad = 0.02 * std::max(1.0, hi[d] - lo[d]);
    lo[d] -= pad;
    hi[d] += pad;
  }
  Conjugate c;
  c.table_ = std::make_shared<const ConjugateTable>(ConjugateTable::covering(potential, lo, hi, options));
  c.eval_ = potential.eval;
  c.grad_ = potential.grad;
  c.hess_ = potential.hess;
  return c;
}

double Conjugate::operator()(const Vec& y) const {
  if (!table_) return analytic_(y);
  if (!table_->trusted(y)) {
    throw OutOfTrustedRange("discrete conjugate queried at " + to_string(y) + " outside its trusted dual range");
  }
  if (!hess_) return (*table_)(y);
  // Damped Newton on the concave h(x) = x.y - phi(x), started at the grid
  // maximizer. Every iterate is a lower bound of the sup, so the result never
  // exceeds phi*(y) and reaches it at the stationary point.
  const auto h = [&](const Vec& x) { return x.dot(y) - eval_(x); };
  Vec x = table_->maximizer(y);
  double value = h(x);
  for (int iter = 0; iter < 50; ++iter) {
    const Vec r = y - grad_(x);
    if (r.norm() <= 1e-13 * std::max(1.0, y.norm())) break;
    const Mat H = hess_(x);
    Vec step = H.ldlt().solve(r);
    if (!step.allFinite() || step.dot(r) <= 0.0) step = r;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vec candidate = x + t * step;
      const double v = h(candidate);
      if (v >= value) {
        moved = v > value || t == 1.0;
        x = candidate;
        value = v;
        break;
      }
    }
    if (!moved) break;
  }
  return value;
}

}  // namespace mlsi
