#include <mlsi/potential.hpp>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

namespace mlsi {

std::string to_string(const Vec& v) {
  std::ostringstream out;
  out << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    out << v[i];
  }
  out << ')';
  return out.str();
}

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::power: return "power";
    case PotentialKind::powerlog: return "powerlog";
    case PotentialKind::interaction: return "interaction";
    case PotentialKind::custom: return "custom";
  }
  return "custom";
}

std::optional<PotentialKind> parse_potential_kind(const std::string& name) {
  if (name == "gaussian") return PotentialKind::gaussian;
  if (name == "power") return PotentialKind::power;
  if (name == "powerlog") return PotentialKind::powerlog;
  if (name == "interaction") return PotentialKind::interaction;
  if (name == "custom") return PotentialKind::custom;
  return std::nullopt;
}

Potential Potential::shifted(double c) const {
  Potential out = *this;
  auto f = eval;
  out.eval = [f, c](const Vec& x) { return f(x) + c; };
  if (conjugate) {
    auto g = conjugate;
    out.conjugate = [g, c](const Vec& y) { return g(y) - c; };
  }
  return out;
}

Potential Potential::scaled(double k) const {
  if (!(k > 0.0)) throw InvalidArgument("scale factor must be positive");
  Potential out = *this;
  auto f = eval;
  auto df = grad;
  out.eval = [f, k](const Vec& x) { return k * f(x); };
  out.grad = [df, k](const Vec& x) -> Vec { return k * df(x); };
  if (hess) {
    auto h = hess;
    out.hess = [h, k](const Vec& x) -> Mat { return k * h(x); };
  }
  if (conjugate) {
    auto g = conjugate;
    out.conjugate = [g, k](const Vec& y) { return k * g(y / k); };
  }
  if (conjugate_grad) {
    auto dg = conjugate_grad;
    out.conjugate_grad = [dg, k](const Vec& y) -> Vec { return dg(y / k); };
  }
  out.log_partition = 0.0;
  out.label = label + "*" + std::to_string(k);
  return out;
}

namespace {

// Radial potential r(|x|). dr_over_t must return the finite limit r'(t)/t at 0.
struct RadialProfile {
  std::function<double(double)> r;
  std::function<double(double)> dr_over_t;
  std::function<double(double)> d2r;
};

Potential radial_potential(int dim, RadialProfile profile) {
  Potential P;
  P.dim = dim;
  P.even = true;
  auto prof = std::make_shared<RadialProfile>(std::move(profile));
  P.eval = [prof](const Vec& x) { return prof->r(x.norm()); };
  P.grad = [prof](const Vec& x) -> Vec {
    const double t = x.norm();
    if (t == 0.0) return Vec::Zero(x.size());
    return prof->dr_over_t(t) * x;
  };
  P.hess = [prof](const Vec& x) -> Mat {
    const auto n = x.size();
    const double t = x.norm();
    if (t == 0.0) return prof->d2r(0.0) * Mat::Identity(n, n);
    const Vec u = x / t;
    const double tangential = prof->dr_over_t(t);
    return tangential * Mat::Identity(n, n) + (prof->d2r(t) - tangential) * (u * u.transpose());
  };
  return P;
}

// |x|^e with the convention 0^e = 0 for e > 0 and +inf for e < 0.
double pow_abs(double t, double e) {
  if (t == 0.0) {
    if (e > 0.0) return 0.0;
    if (e == 0.0) return 1.0;
    return std::numeric_limits<double>::infinity();
  }
  return std::pow(std::abs(t), e);
}

Vec fd_gradient(const ScalarField& f, const Vec& x) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

Mat fd_hessian(const VectorField& grad, const Vec& x) {
  const auto n = x.size();
  Mat H(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-4 * std::max(1.0, std::abs(x[j]));
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    H.col(j) = (grad(xp) - grad(xm)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace

Potential make_gaussian(int dim) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  const double c = 0.5 * dim * std::log(2.0 * std::numbers::pi);
  Potential P = radial_potential(dim, {[c](double t) { return 0.5 * t * t + c; },
                                       [](double) { return 1.0; }, [](double) { return 1.0; }});
  P.kind = PotentialKind::gaussian;
  P.label = "gaussian(n=" + std::to_string(dim) + ")";
  P.conjugate = [c](const Vec& y) { return 0.5 * y.squaredNorm() - c; };
  P.conjugate_grad = [](const Vec& y) -> Vec { return y; };
  return P;
}

Potential make_power(int dim, double p, double scale) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  if (!(p > 1.0)) throw InvalidArgument("p must exceed 1");
  if (!(scale > 0.0)) throw InvalidArgument("power scale must be positive");
  Potential P = radial_potential(
      dim, {[p, scale](double t) { return scale * pow_abs(t, p) / p; },
            [p, scale](double t) { return scale * pow_abs(t, p - 2.0); },
            [p, scale](double t) { return scale * (p - 1.0) * pow_abs(t, p - 2.0); }});
  const double q = p / (p - 1.0);
  const double dual_scale = std::pow(scale, 1.0 - q);
  P.kind = PotentialKind::power;
  std::ostringstream label;
  label << "power(p=" << p;
  if (scale != 1.0) label << ",scale=" << scale;
  label << ",n=" << dim << ')';
  P.label = label.str();
  P.homogeneity_degree = p;
  P.conjugate = [q, dual_scale](const Vec& y) { return dual_scale * pow_abs(y.norm(), q) / q; };
  P.conjugate_grad = [q, dual_scale](const Vec& y) -> Vec {
    const double t = y.norm();
    if (t == 0.0) return Vec::Zero(y.size());
    return dual_scale * std::pow(t, q - 2.0) * y;
  };
  return P;
}

PowerlogPatch powerlog_patch(double a, double b) {
  const double l2 = std::log(2.0);
  const double value = std::pow(2.0, a) * std::pow(l2, b);
  const double exponent = a + b / l2;
  return {value / std::pow(2.0, exponent), exponent};
}

Potential make_powerlog(int dim, double a, double b) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  if (!(a > 1.0)) throw InvalidArgument("powerlog requires a > 1");
  const auto [c, m] = powerlog_patch(a, b);
  if (!(m > 1.0)) {
    throw InvalidArgument("powerlog: a + b/log 2 must exceed 1 for a convex C1 interior patch");
  }
  RadialProfile profile{
      [a, b, c, m](double t) {
        if (t < 2.0) return c * pow_abs(t, m);
        return std::pow(t, a) * std::pow(std::log(t), b);
      },
      [a, b, c, m](double t) {
        if (t < 2.0) return c * m * pow_abs(t, m - 2.0);
        const double L = std::log(t);
        return std::pow(t, a - 2.0) * std::pow(L, b - 1.0) * (a * L + b);
      },
      [a, b, c, m](double t) {
        if (t < 2.0) return c * m * (m - 1.0) * pow_abs(t, m - 2.0);
        const double L = std::log(t);
        return std::pow(t, a - 2.0) * std::pow(L, b - 2.0) *
               ((a - 1.0) * L * (a * L + b) + (b - 1.0) * (a * L + b) + a * L);
      }};
  Potential P = radial_potential(dim, std::move(profile));
  P.kind = PotentialKind::powerlog;
  std::ostringstream label;
  label << "powerlog(a=" << a << ",b=" << b << ",n=" << dim << ')';
  P.label = label.str();
  if (b == 0.0) P.homogeneity_degree = a;
  return P;
}

Potential make_interaction(int dim, double h_quad, double h_power) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  if (!(h_power > 2.0)) throw InvalidArgument("interaction h must grow faster than x^2 (h_power > 2)");
  if (!(h_quad >= 0.0)) throw InvalidArgument("interaction h_quad must be nonnegative");
  const double r = h_power;
  auto h = [h_quad, r](double t) { return h_quad * t * t + pow_abs(t, r) / r; };
  auto dh = [h_quad, r](double t) {
    return 2.0 * h_quad * t + (t == 0.0 ? 0.0 : std::copysign(pow_abs(t, r - 1.0), t));
  };
  auto d2h = [h_quad, r](double t) { return 2.0 * h_quad + (r - 1.0) * pow_abs(t, r - 2.0); };

  Potential P;
  P.dim = dim;
  P.kind = PotentialKind::interaction;
  P.even = true;
  std::ostringstream label;
  label << "interaction(n=" << dim << ",h_quad=" << h_quad << ",h_power=" << h_power << ')';
  P.label = label.str();
  // Cyclic chain: sum_i x_i x_{i+1} + h(x_i) with x_{n+1} = x_1.
  P.eval = [h](const Vec& x) {
    const auto n = x.size();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += x[i] * x[(i + 1) % n] + h(x[i]);
    return s;
  };
  P.grad = [dh](const Vec& x) -> Vec {
    const auto n = x.size();
    Vec g(n);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = dh(x[i]);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = (i + 1) % n;
      g[i] += x[j];
      g[j] += x[i];
    }
    return g;
  };
  P.hess = [d2h](const Vec& x) -> Mat {
    const auto n = x.size();
    Mat H = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) H(i, i) = d2h(x[i]);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = (i + 1) % n;
      H(i, j) += 1.0;
      H(j, i) += 1.0;
    }
    return H;
  };
  return P;
}

Potential make_custom_potential(int dim, ScalarField f, std::string label, bool even) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  Potential P;
  P.dim = dim;
  P.kind = PotentialKind::custom;
  P.label = std::move(label);
  P.even = even;
  P.eval = f;
  P.grad = [f](const Vec& x) { return fd_gradient(f, x); };
  auto g = P.grad;
  P.hess = [g](const Vec& x) { return fd_hessian(g, x); };
  return P;
}

Potential make_builtin_potential(const PotentialSpec& spec, std::uint64_t seed) {
  Potential P;
  switch (spec.kind) {
    case PotentialKind::gaussian: P = make_gaussian(spec.dim); break;
    case PotentialKind::power: P = make_power(spec.dim, spec.p, spec.scale); break;
    case PotentialKind::powerlog: P = make_powerlog(spec.dim, spec.a, spec.b); break;
    case PotentialKind::interaction: P = make_interaction(spec.dim, spec.h_quad, spec.h_power); break;
    case PotentialKind::custom:
      throw InvalidArgument("custom potentials are built from an expression, not a builtin spec");
  }
  ProbeOptions opts;
  opts.seed = seed;
  const InvariantProbe probe = probe_invariants(P, opts);
  if (!probe.convex) {
    std::ostringstream msg;
    msg << P.label << " fails the convexity probe (midpoint violation "
        << probe.max_midpoint_violation << ", min Hessian eigenvalue " << probe.min_hessian_eigenvalue
        << ')';
    throw InvalidArgument(msg.str());
  }
  if (!probe.gradient_ok) throw InvalidArgument(P.label + ": gradient disagrees with finite differences");
  if (!probe.superlinear) throw InvalidArgument(P.label + ": superlinearity probe failed");
  if (!probe.fenchel_young_ok) throw InvalidArgument(P.label + ": Fenchel-Young gap too large");
  return P;
}

double conjugate_analytic(const Potential& potential, const Vec& y) {
  if (!potential.has_conjugate()) {
    throw InvalidArgument(potential.label + " has no analytic conjugate; use the discrete path");
  }
  if (y.size() != potential.dim) throw InvalidArgument("conjugate_analytic: dimension mismatch");
  return potential.conjugate(y);
}

double bregman_cost(const Potential& potential, const Vec& x, const Vec& y) {
  if (x.size() != potential.dim || y.size() != potential.dim) {
    throw InvalidArgument("bregman_cost: dimension mismatch");
  }
  return potential.eval(y) - potential.eval(x) - (y - x).dot(potential.grad(x));
}

InvariantProbe probe_invariants(const Potential& potential, const ProbeOptions& options) {
  const int n = potential.dim;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(-options.radius, options.radius);
  auto sample = [&] {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = unif(rng);
    return x;
  };

  InvariantProbe out;
  out.min_hessian_eigenvalue = potential.has_hessian() ? std::numeric_limits<double>::infinity()
                                                       : std::numeric_limits<double>::quiet_NaN();
  auto visit_hessian = [&](const Vec& x) {
    if (!potential.has_hessian()) return;
    Eigen::SelfAdjointEigenSolver<Mat> eig(potential.hess(x), Eigen::EigenvaluesOnly);
    out.min_hessian_eigenvalue = std::min(out.min_hessian_eigenvalue, eig.eigenvalues().minCoeff());
  };

  visit_hessian(Vec::Zero(n));
  for (int k = 0; k < options.samples; ++k) {
    const Vec x = sample();
    Vec y = sample();
    if (k % 4 == 0) y = -x;  // pairs straddling the origin
    const double fx = potential.eval(x), fy = potential.eval(y);
    const double fm = potential.eval(0.5 * (x + y));
    const double scale = std::max({1.0, std::abs(fx), std::abs(fy)});
    out.max_midpoint_violation =
        std::max(out.max_midpoint_violation, (fm - 0.5 * (fx + fy)) / scale);

    const Vec g = potential.grad(x);
    const Vec g_fd = fd_gradient(potential.eval, x);
    out.max_gradient_error =
        std::max(out.max_gradient_error, (g - g_fd).norm() / std::max(1.0, g.norm()));

    if (potential.has_conjugate()) {
      const double gap = potential.eval(x) + potential.conjugate(g) - x.dot(g);
      out.max_fenchel_young_gap = std::max(out.max_fenchel_young_gap, std::abs(gap) / scale);
    }
    visit_hessian(x);
  }

  out.superlinear = true;
  const double f0 = potential.eval(Vec::Zero(n));
  for (int d = 0; d < 2 * n && out.superlinear; ++d) {
    Vec dir = Vec::Zero(n);
    dir[d / 2] = (d % 2 == 0) ? 1.0 : -1.0;
    double previous = -std::numeric_limits<double>::infinity();
    for (double R = 1.0; R <= 64.0; R *= 2.0) {
      const double slope = (potential.eval(R * dir) - f0) / R;
      if (!(slope > previous)) {
        out.superlinear = false;
        break;
      }
      previous = slope;
    }
  }

  const bool hessian_ok = !potential.has_hessian() || potential.kind == PotentialKind::custom ||
                          out.min_hessian_eigenvalue >= -options.tol;
  out.convex = out.max_midpoint_violation <= options.tol && hessian_ok;
  out.gradient_ok = out.max_gradient_error <= options.tol_fd;
  out.fenchel_young_ok = out.max_fenchel_young_gap <= 1e3 * options.tol;
  return out;
}

}  // namespace mlsi
