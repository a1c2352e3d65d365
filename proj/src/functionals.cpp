#include <mlsi/functionals.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mlsi {

std::string to_string(TestFamily family) {
  switch (family) {
    case TestFamily::constant: return "constant";
    case TestFamily::linear: return "linear";
    case TestFamily::quadratic: return "quadratic";
    case TestFamily::neg_potential: return "neg-potential";
    case TestFamily::bump: return "bump";
    case TestFamily::sum: return "sum";
    case TestFamily::custom: return "custom";
  }
  return "custom";
}

TestFunction constant_function(int dim, double value) {
  TestFunction g;
  g.dim = dim;
  g.family = TestFamily::constant;
  g.label = "constant(" + std::to_string(value) + ")";
  g.eval = [value](const Vec&) { return value; };
  g.grad = [dim](const Vec&) -> Vec { return Vec::Zero(dim); };
  return g;
}

TestFunction linear_function(const Vec& a, double offset) {
  TestFunction g;
  g.dim = static_cast<int>(a.size());
  g.family = TestFamily::linear;
  g.label = "linear(a=" + to_string(a) + ")";
  g.eval = [a, offset](const Vec& x) { return a.dot(x) + offset; };
  g.grad = [a](const Vec&) -> Vec { return a; };
  return g;
}

TestFunction quadratic_function(double coefficient, const Vec& center) {
  TestFunction g;
  g.dim = static_cast<int>(center.size());
  g.family = TestFamily::quadratic;
  std::ostringstream label;
  label << "quadratic(c=" << coefficient << ",center=" << to_string(center) << ')';
  g.label = label.str();
  g.eval = [coefficient, center](const Vec& x) { return coefficient * (x - center).squaredNorm(); };
  g.grad = [coefficient, center](const Vec& x) -> Vec { return 2.0 * coefficient * (x - center); };
  return g;
}

TestFunction neg_potential_function(const Potential& C, double b, const Vec& center) {
  if (!(b > 0.0)) throw InvalidArgument("neg-potential family needs b > 0");
  if (center.size() != C.dim) throw InvalidArgument("neg-potential: center dimension mismatch");
  TestFunction g;
  g.dim = C.dim;
  g.family = TestFamily::neg_potential;
  std::ostringstream label;
  label << "neg-potential(b=" << b << ",C=" << C.label << ",center=" << to_string(center) << ')';
  g.label = label.str();
  auto f = C.eval;
  auto df = C.grad;
  g.eval = [f, b, center](const Vec& x) { return -b * f(x - center); };
  g.grad = [df, b, center](const Vec& x) -> Vec { return -b * df(x - center); };
  return g;
}

TestFunction bump_function(const Vec& center, double radius, double height) {
  if (!(radius > 0.0)) throw InvalidArgument("bump radius must be positive");
  TestFunction g;
  g.dim = static_cast<int>(center.size());
  g.family = TestFamily::bump;
  std::ostringstream label;
  label << "bump(center=" << to_string(center) << ",radius=" << radius << ",height=" << height << ')';
  g.label = label.str();
  const double r2 = radius * radius;
  g.eval = [center, r2, height](const Vec& x) {
    const double u = (x - center).squaredNorm() / r2;
    if (u >= 1.0) return 0.0;
    return height * std::exp(1.0 - 1.0 / (1.0 - u));
  };
  g.grad = [center, r2, height](const Vec& x) -> Vec {
    const Vec d = x - center;
    const double u = d.squaredNorm() / r2;
    if (u >= 1.0) return Vec::Zero(d.size());
    const double s = 1.0 - u;
    const double value = height * std::exp(1.0 - 1.0 / s);
    return value * (-2.0 / (r2 * s * s)) * d;
  };
  g.support = make_box(center.array() - radius, center.array() + radius);
  return g;
}

TestFunction sum_function(const TestFunction& first, const TestFunction& second) {
  if (first.dim != second.dim) throw InvalidArgument("sum_function: dimension mismatch");
  TestFunction g;
  g.dim = first.dim;
  g.family = TestFamily::sum;
  g.label = first.label + " + " + second.label;
  auto f1 = first.eval, f2 = second.eval;
  auto d1 = first.grad, d2 = second.grad;
  g.eval = [f1, f2](const Vec& x) { return f1(x) + f2(x); };
  g.grad = [d1, d2](const Vec& x) -> Vec { return d1(x) + d2(x); };
  return g;
}

TestFunction custom_function(int dim, ScalarField f, std::string label) {
  TestFunction g;
  g.dim = dim;
  g.family = TestFamily::custom;
  g.label = std::move(label);
  g.eval = f;
  g.grad = [f](const Vec& x) -> Vec {
    Vec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      out[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return out;
  };
  return g;
}

TestFunction shifted(const TestFunction& g, double c) {
  TestFunction out = g;
  auto f = g.eval;
  out.eval = [f, c](const Vec& x) { return f(x) + c; };
  std::ostringstream label;
  label << g.label << " + " << c;
  out.label = label.str();
  out.support.reset();
  return out;
}

TestFunction scaled(const TestFunction& g, double factor) {
  TestFunction out = g;
  auto f = g.eval;
  auto df = g.grad;
  out.eval = [f, factor](const Vec& x) { return factor * f(x); };
  out.grad = [df, factor](const Vec& x) -> Vec { return factor * df(x); };
  std::ostringstream label;
  label << factor << " * (" << g.label << ')';
  out.label = label.str();
  return out;
}

WeightedNodes measure_nodes(const Potential& normalized, const QuadratureRule& rule) {
  if (rule.dim() != normalized.dim) throw InvalidArgument("measure_nodes: dimension mismatch");
  WeightedNodes out = lebesgue_nodes(rule);
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    out.weights[i] *= std::exp(-normalized.eval(out.nodes[i]));
  }
  return out;
}

WeightedNodes lebesgue_nodes(const QuadratureRule& rule) {
  WeightedNodes out;
  out.nodes.reserve(rule.size());
  out.boundary.resize(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    out.nodes.push_back(rule.node(i));
    out.boundary[i] = rule.on_boundary(i);
  }
  const auto w = rule.weights();
  out.weights.assign(w.begin(), w.end());
  return out;
}

std::vector<double> evaluate(const TestFunction& g, std::span<const Vec> nodes) {
  std::vector<double> values(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    values[i] = g.eval(nodes[i]);
    if (!std::isfinite(values[i])) {
      throw NumericalError(g.label + " is not finite at " + to_string(nodes[i]));
    }
  }
  return values;
}

double weighted_sum(std::span<const double> values, std::span<const double> weights) {
  std::vector<double> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) terms[i] = weights[i] * values[i];
  const double s = compensated_sum(terms);
  if (!std::isfinite(s)) throw NumericalError("weighted_sum: integral is not finite");
  return s;
}

double entropy_of(std::span<const double> g, std::span<const double> weights) {
  // Ent is 1-homogeneous in e^g, so factor out e^{max g} to avoid overflow.
  const double top = *std::max_element(g.begin(), g.end());
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::exp(g[i] - top);
  const double mass = weighted_sum(f, weights);
  if (!(mass > 0.0)) throw NumericalError("entropy: int e^g vanishes under the rule");
  const double log_mass = std::log(mass);
  std::vector<double> terms(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) terms[i] = f[i] * ((g[i] - top) - log_mass);
  const double scaled_entropy = weighted_sum(terms, weights);
  const double result = std::exp(top) * scaled_entropy;
  if (!std::isfinite(result)) throw NumericalError("entropy: int e^g log e^g diverges");
  return result;
}

void require_boundary_decay(std::span<const double> g, const WeightedNodes& nodes) {
  const double top = *std::max_element(g.begin(), g.end());
  double boundary_top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (nodes.boundary[i]) boundary_top = std::max(boundary_top, g[i]);
  }
  if (boundary_top - top > std::log(1e-6)) {
    std::ostringstream msg;
    msg << "e^g does not decay at the box boundary (boundary/max ratio " << std::exp(boundary_top - top)
        << "); Lebesgue integrals are not resolved";
    throw NumericalError(msg.str());
  }
}

double entropy(const TestFunction& g, const Potential& normalized, const QuadratureRule& rule, Reference reference) {
  const WeightedNodes nodes = reference == Reference::measure ? measure_nodes(normalized, rule) : lebesgue_nodes(rule);
  const auto values = evaluate(g, nodes.nodes);
  if (reference == Reference::lebesgue) require_boundary_decay(values, nodes);
  return entropy_of(values, nodes.weights);
}

double variance(const TestFunction& g, const Potential& normalized, const QuadratureRule& rule) {
  const WeightedNodes nodes = measure_nodes(normalized, rule);
  auto values = evaluate(g, nodes.nodes);
  const double mean = weighted_sum(values, nodes.weights);
  for (double& v : values) v = (v - mean) * (v - mean);
  return weighted_sum(values, nodes.weights);
}

double mlsi_integrand(const Potential& potential, const Conjugate& conjugate, const TestFunction& g, const Vec& x) {
  const Vec dphi = potential.grad(x);
  const Vec dg = g.grad(x);
  return x.dot(dg) - conjugate(dphi) + conjugate(dphi - dg);
}

Conjugate mlsi_conjugate(const Potential& potential, const TestFunction& g, std::span<const Vec> nodes) {
  if (potential.has_conjugate()) return Conjugate::analytic(potential);
  std::vector<Vec> queries;
  queries.reserve(2 * nodes.size());
  for (const Vec& x : nodes) {
    const Vec dphi = potential.grad(x);
    queries.push_back(dphi);
    queries.push_back(dphi - g.grad(x));
  }
  return Conjugate::for_queries(potential, queries);
}

double entropy_dual_gap(const TestFunction& g, const Potential& normalized, const QuadratureRule& rule, double a) {
  if (!(a > 0.0)) throw InvalidArgument("entropy_dual_gap: a must be positive");
  const WeightedNodes nodes = measure_nodes(normalized, rule);
  const auto values = evaluate(g, nodes.nodes);
  const double log_a = std::log(a);
  std::vector<double> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = std::exp(values[i]);
    terms[i] = f * (values[i] - log_a) - f + a;
  }
  return weighted_sum(terms, nodes.weights);
}

}  // namespace mlsi
