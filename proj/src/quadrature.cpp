#include <mlsi/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace mlsi {

double Box::volume() const {
  double v = 1.0;
  for (int d = 0; d < dim(); ++d) v *= upper[d] - lower[d];
  return v;
}

bool Box::contains(const Vec& x) const {
  for (int d = 0; d < dim(); ++d) {
    if (x[d] < lower[d] || x[d] > upper[d]) return false;
  }
  return true;
}

Box Box::padded(double pad) const {
  return make_box(lower.array() - pad, upper.array() + pad);
}

Box Box::hull(const Box& other) const {
  return make_box(lower.cwiseMin(other.lower), upper.cwiseMax(other.upper));
}

Box make_box(const Vec& lower, const Vec& upper) {
  if (lower.size() != upper.size() || lower.size() == 0) throw InvalidArgument("Box: bound dimension mismatch");
  for (Eigen::Index d = 0; d < lower.size(); ++d) {
    if (!(lower[d] < upper[d])) throw InvalidArgument("Box: lower must be below upper on every axis");
  }
  return Box{lower, upper};
}

Box symmetric_box(int dim, double radius) {
  return make_box(Vec::Constant(dim, -radius), Vec::Constant(dim, radius));
}

QuadratureRule::QuadratureRule(Box box, std::vector<std::size_t> resolution, Scheme scheme)
    : box_(std::move(box)), resolution_(std::move(resolution)), scheme_(scheme) {
  const auto n = static_cast<std::size_t>(box_.dim());
  if (resolution_.size() != n) throw InvalidArgument("QuadratureRule: one resolution per axis");
  std::vector<std::vector<double>> axis_weights(n);
  axes_.resize(n);
  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) {
    const std::size_t r = resolution_[d];
    const double lo = box_.lower[static_cast<Eigen::Index>(d)];
    const double hi = box_.upper[static_cast<Eigen::Index>(d)];
    auto& x = axes_[d];
    auto& w = axis_weights[d];
    if (scheme_ == Scheme::trapezoid) {
      if (r < 2) throw InvalidArgument("trapezoid rule needs >= 2 nodes per axis");
      const double h = (hi - lo) / static_cast<double>(r - 1);
      x.resize(r);
      w.assign(r, h);
      for (std::size_t i = 0; i < r; ++i) x[i] = lo + h * static_cast<double>(i);
      x.back() = hi;
      w.front() = w.back() = 0.5 * h;
    } else {
      if (r < 1) throw InvalidArgument("midpoint rule needs >= 1 node per axis");
      const double h = (hi - lo) / static_cast<double>(r);
      x.resize(r);
      w.assign(r, h);
      for (std::size_t i = 0; i < r; ++i) x[i] = lo + h * (static_cast<double>(i) + 0.5);
    }
    total *= r;
  }
  weights_.resize(total);
  std::vector<std::size_t> index(n, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    double w = 1.0;
    for (std::size_t d = 0; d < n; ++d) w *= axis_weights[d][index[d]];
    weights_[flat] = w;
    for (std::size_t d = n; d-- > 0;) {
      if (++index[d] < resolution_[d]) break;
      index[d] = 0;
    }
  }
}

Vec QuadratureRule::node(std::size_t i) const {
  const auto n = axes_.size();
  Vec x(static_cast<Eigen::Index>(n));
  for (std::size_t d = n; d-- > 0;) {
    x[static_cast<Eigen::Index>(d)] = axes_[d][i % resolution_[d]];
    i /= resolution_[d];
  }
  return x;
}

bool QuadratureRule::on_boundary(std::size_t i) const {
  for (std::size_t d = axes_.size(); d-- > 0;) {
    const std::size_t k = i % resolution_[d];
    if (k == 0 || k + 1 == resolution_[d]) return true;
    i /= resolution_[d];
  }
  return false;
}

QuadratureRule QuadratureRule::coarsened() const {
  auto r = resolution_;
  for (auto& v : r) v = std::max<std::size_t>(2, (v + 1) / 2);
  return QuadratureRule(box_, r, scheme_);
}

QuadratureRule QuadratureRule::refined() const {
  auto r = resolution_;
  for (auto& v : r) v = 2 * v - 1;
  return QuadratureRule(box_, r, scheme_);
}

void QuadratureRule::write_csv(std::ostream& out) const {
  for (int d = 0; d < dim(); ++d) out << 'x' << (d + 1) << ',';
  out << "weight\n";
  out.precision(17);
  for (std::size_t i = 0; i < size(); ++i) {
    const Vec x = node(i);
    for (int d = 0; d < dim(); ++d) out << x[d] << ',';
    out << weights_[i] << '\n';
  }
}

std::size_t default_resolution(int dim) {
  if (dim <= 1) return 2001;
  if (dim == 2) return 301;
  return 41;
}

QuadratureRule make_rule(const Box& box, std::size_t per_axis, Scheme scheme) {
  return QuadratureRule(box, std::vector<std::size_t>(static_cast<std::size_t>(box.dim()), per_axis), scheme);
}

double compensated_sum(std::span<const double> terms) {
  double sum = 0.0, carry = 0.0;
  for (double t : terms) {
    const double s = sum + t;
    if (std::abs(sum) >= std::abs(t)) {
      carry += (sum - s) + t;
    } else {
      carry += (t - s) + sum;
    }
    sum = s;
  }
  return sum + carry;
}

namespace {

// Radius along `dir` from `center` where the e^{-phi} tail falls below
// tail_tol relative to the inner mass.
double tail_radius(const Potential& potential, const Vec& center, const Vec& dir, double tail_tol) {
  constexpr double cap = 100.0;
  constexpr double step = 1e-3;
  const auto count = static_cast<std::size_t>(cap / step) + 1;
  const double phi0 = potential.eval(center);
  std::vector<double> density(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = step * static_cast<double>(i);
    const double e = std::exp(-(potential.eval(center + t * dir) - phi0));
    if (!std::isfinite(e)) throw NumericalError("truncation_box: e^{-phi} overflows along the scan");
    density[i] = e;
  }
  // Reverse cumulative trapezoid keeps small tails free of cancellation.
  std::vector<double> tail(count, 0.0);
  for (std::size_t i = count - 1; i-- > 0;) tail[i] = tail[i + 1] + 0.5 * step * (density[i] + density[i + 1]);
  const double total = tail[0];
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("truncation_box: non-integrable potential");
  if (density.back() > 1e-300 && density.back() / density.front() > 1e-30) {
    throw NumericalError("truncation_box: e^{-phi} has not decayed at radius 100; potential is not integrable "
                         "or mis-specified");
  }
  for (std::size_t i = 1; i < count; ++i) {
    const double inside = total - tail[i];
    if (tail[i] <= tail_tol * inside) {
      const double R = step * static_cast<double>(i);
      return std::min(cap, std::ceil(R * 2.0) / 2.0);
    }
  }
  throw NumericalError("truncation_box: no radius below 100 meets the tail tolerance");
}

}  // namespace

Box truncation_box(const Potential& potential, double tail_tol, const Vec& center) {
  if (!(tail_tol > 0.0 && tail_tol <= 1e-4)) throw InvalidArgument("truncation_box: tail_tol must lie in (0, 1e-4]");
  const int n = potential.dim;
  if (center.size() != n) throw InvalidArgument("truncation_box: center dimension mismatch");
  Vec lower(n), upper(n);
  for (int d = 0; d < n; ++d) {
    Vec dir = Vec::Zero(n);
    dir[d] = 1.0;
    const double up = tail_radius(potential, center, dir, tail_tol);
    const double down = potential.even ? up : tail_radius(potential, center, -dir, tail_tol);
    upper[d] = center[d] + up;
    lower[d] = center[d] - down;
  }
  return make_box(lower, upper);
}

Box truncation_box(const Potential& potential, double tail_tol) {
  return truncation_box(potential, tail_tol, Vec::Zero(potential.dim));
}

double integrate(const std::function<double(const Vec&)>& f, const QuadratureRule& rule) {
  std::vector<double> terms(rule.size());
  const auto w = rule.weights();
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vec x = rule.node(i);
    const double v = f(x);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "integrate: integrand is " << v << " at node " << to_string(x);
      throw NumericalError(msg.str());
    }
    terms[i] = w[i] * v;
  }
  return compensated_sum(terms);
}

double integrate_values(std::span<const double> values, const QuadratureRule& rule) {
  if (values.size() != rule.size()) throw InvalidArgument("integrate_values: size mismatch");
  std::vector<double> terms(values.size());
  const auto w = rule.weights();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "integrate: integrand is " << values[i] << " at node " << to_string(rule.node(i));
      throw NumericalError(msg.str());
    }
    terms[i] = w[i] * values[i];
  }
  return compensated_sum(terms);
}

double log_partition(const Potential& potential, const QuadratureRule& rule) {
  if (rule.dim() != potential.dim) throw InvalidArgument("log_partition: dimension mismatch");
  const double Z = integrate([&](const Vec& x) { return std::exp(-potential.eval(x)); }, rule);
  if (!(Z > 0.0) || !std::isfinite(Z)) {
    std::ostringstream msg;
    msg << "normalize: partition function of " << potential.label << " is " << Z;
    throw NumericalError(msg.str());
  }
  return std::log(Z);
}

Potential normalize(const Potential& potential, const QuadratureRule& rule) {
  const double logZ = log_partition(potential, rule);
  Potential out = potential.shifted(logZ);
  out.log_partition = potential.log_partition + logZ;
  return out;
}

}  // namespace mlsi
