#include <mlsi/inequalities.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace mlsi {

double report_tolerance(double deficit, double coarse_deficit) {
  return std::max(1e-6, 10.0 * std::abs(deficit - coarse_deficit));
}

namespace {

struct Sides {
  double lhs = 0.0;
  double rhs = 0.0;
};

std::string keyed(const std::string& key, double value) {
  std::ostringstream out;
  out << key << '[' << value << ']';
  return out.str();
}

std::vector<double> exp_values(std::span<const double> g) {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::exp(g[i]);
  return out;
}

// Both sides of the MLSI for given reference weights; `factor` multiplies the
// right side (the perturbation constant).
Sides mlsi_sides(const Potential& P, const Conjugate& conj, const TestFunction& g, const WeightedNodes& nodes,
                 std::span<const double> weights, double factor) {
  const auto gv = evaluate(g, nodes.nodes);
  const auto eg = exp_values(gv);
  std::vector<double> terms(gv.size());
  for (std::size_t i = 0; i < gv.size(); ++i) terms[i] = mlsi_integrand(P, conj, g, nodes.nodes[i]) * eg[i];
  return {entropy_of(gv, weights), factor * weighted_sum(terms, weights)};
}

void require_same_dim(const Potential& P, const TestFunction& g, const QuadratureRule& rule) {
  if (P.dim != g.dim || rule.dim() != P.dim) {
    std::ostringstream msg;
    msg << "dimension mismatch: potential " << P.dim << ", test function " << g.dim << ", rule " << rule.dim();
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

DeficitReport check_mlsi(const Potential& normalized, const TestFunction& g, const QuadratureRule& rule) {
  require_same_dim(normalized, g, rule);
  const WeightedNodes fine = measure_nodes(normalized, rule);
  const Conjugate conj = mlsi_conjugate(normalized, g, fine.nodes);
  const Sides s = mlsi_sides(normalized, conj, g, fine, fine.weights, 1.0);
  const WeightedNodes coarse = measure_nodes(normalized, rule.coarsened());
  const Sides c = mlsi_sides(normalized, conj, g, coarse, coarse.weights, 1.0);
  DeficitReport r = make_report("check_mlsi", s.lhs, s.rhs, report_tolerance(s.rhs - s.lhs, c.rhs - c.lhs));
  r.metadata["resolution"] = static_cast<double>(rule.resolution()[0]);
  r.metadata["discrete_conjugate"] = conj.is_discrete() ? 1.0 : 0.0;
  return r;
}

double gross_reduction_residual(const TestFunction& g, const QuadratureRule& rule) {
  if (rule.dim() != g.dim) throw InvalidArgument("gross_reduction_residual: dimension mismatch");
  const Potential gauss = make_gaussian(g.dim);
  const Conjugate conj = Conjugate::analytic(gauss);
  double worst = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vec x = rule.node(i);
    const double v = mlsi_integrand(gauss, conj, g, x);
    worst = std::max(worst, std::abs(v - 0.5 * g.grad(x).squaredNorm()));
  }
  return worst;
}

namespace {

double brascamp_lieb_rhs(const Potential& P, const TestFunction& g, const WeightedNodes& nodes) {
  std::vector<double> terms(nodes.nodes.size());
  for (std::size_t i = 0; i < nodes.nodes.size(); ++i) {
    const Vec& x = nodes.nodes[i];
    const Mat H = P.hess(x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(H);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * std::max(1.0, hi))) {
      std::ostringstream msg;
      msg << "singular Hessian of " << P.label << " at node " << to_string(x) << " (min eigenvalue " << lo << ')';
      throw NumericalError(msg.str());
    }
    const Vec dg = g.grad(x);
    terms[i] = dg.dot(eig.eigenvectors() * (eig.eigenvalues().cwiseInverse().asDiagonal() *
                                            (eig.eigenvectors().transpose() * dg)));
  }
  return weighted_sum(terms, nodes.weights);
}

double variance_of(const TestFunction& g, const WeightedNodes& nodes) {
  auto v = evaluate(g, nodes.nodes);
  const double mean = weighted_sum(v, nodes.weights);
  for (double& t : v) t = (t - mean) * (t - mean);
  return weighted_sum(v, nodes.weights);
}

}  // namespace

DeficitReport check_brascamp_lieb(const Potential& normalized, const TestFunction& g, const QuadratureRule& rule,
                                  const std::vector<double>& eps_ladder) {
  require_same_dim(normalized, g, rule);
  if (!normalized.has_hessian()) throw InvalidArgument("check_brascamp_lieb needs a Hessian");
  const WeightedNodes fine = measure_nodes(normalized, rule);
  const WeightedNodes coarse = measure_nodes(normalized, rule.coarsened());
  const double lhs = variance_of(g, fine), rhs = brascamp_lieb_rhs(normalized, g, fine);
  const double clhs = variance_of(g, coarse), crhs = brascamp_lieb_rhs(normalized, g, coarse);
  DeficitReport r = make_report("check_brascamp_lieb", lhs, rhs, report_tolerance(rhs - lhs, crhs - clhs));
  // Ent(e^{eps g}) ~ c eps^2 Var(g); the standard coefficient is c = 1/2.
  for (double eps : eps_ladder) {
    const auto gv = evaluate(scaled(g, eps), fine.nodes);
    const double ratio = lhs > 0.0 ? entropy_of(gv, fine.weights) / (eps * eps * lhs) : std::nan("");
    r.metadata[keyed("entropy_over_eps2_var", eps)] = ratio;
  }
  r.metadata["resolution"] = static_cast<double>(rule.resolution()[0]);
  return r;
}

DeficitReport check_perturbation(const Potential& normalized, const ScalarField& U, const TestFunction& g,
                                 const QuadratureRule& rule) {
  require_same_dim(normalized, g, rule);
  auto perturbed = [&](const QuadratureRule& r, double& osc, double& ratio_lo, double& ratio_hi) {
    WeightedNodes nodes = measure_nodes(normalized, r);
    std::vector<double> u(nodes.nodes.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = U(nodes.nodes[i]);
      if (!std::isfinite(u[i])) throw NumericalError("perturbation U is not finite at " + to_string(nodes.nodes[i]));
    }
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    osc = *hi - *lo;
    // Relative factors e^{-(U - min U)} keep U = const bit-identical to U = 0.
    std::vector<double> rel(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) rel[i] = std::exp(-(u[i] - *lo));
    std::vector<double> ones(u.size(), 1.0);
    const double z = weighted_sum(rel, nodes.weights) / weighted_sum(ones, nodes.weights);
    ratio_lo = std::numeric_limits<double>::infinity();
    ratio_hi = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double ratio = rel[i] / z;
      ratio_lo = std::min(ratio_lo, ratio);
      ratio_hi = std::max(ratio_hi, ratio);
      nodes.weights[i] *= ratio;
    }
    return nodes;
  };
  double osc = 0.0, lo = 0.0, hi = 0.0, cosc = 0.0, clo = 0.0, chi = 0.0;
  const WeightedNodes fine = perturbed(rule, osc, lo, hi);
  const WeightedNodes coarse = perturbed(rule.coarsened(), cosc, clo, chi);
  const Conjugate conj = mlsi_conjugate(normalized, g, fine.nodes);
  const Sides s = mlsi_sides(normalized, conj, g, fine, fine.weights, std::exp(2.0 * osc));
  const Sides c = mlsi_sides(normalized, conj, g, coarse, coarse.weights, std::exp(2.0 * cosc));
  DeficitReport r = make_report("check_perturbation", s.lhs, s.rhs, report_tolerance(s.rhs - s.lhs, c.rhs - c.lhs));
  r.metadata["osc"] = osc;
  r.metadata["factor"] = std::exp(2.0 * osc);
  r.metadata["density_ratio_min"] = lo;
  r.metadata["density_ratio_max"] = hi;
  const double slack = 1e-12;
  r.metadata["density_bound_holds"] =
      (lo >= std::exp(-osc) * (1.0 - slack) && hi <= std::exp(osc) * (1.0 + slack)) ? 1.0 : 0.0;
  return r;
}

double psi_bar(const Vec& z, const Vec& e, double q) {
  const double nz = z.norm();
  return z.dot(e) * std::pow(nz, q - 2.0) - std::pow(nz, q) / q + std::pow((z - e).norm(), q) / q;
}

double power_mlsi_constant(double p, const std::vector<double>& radii, const std::vector<double>& angles) {
  if (!(p >= 2.0)) throw InvalidArgument("power_mlsi_constant: the constant is finite only for p >= 2");
  if (radii.empty() || angles.empty()) throw InvalidArgument("power_mlsi_constant: empty grid");
  const double q = p / (p - 1.0);
  const Vec e = vec2(1.0, 0.0);
  double best = -std::numeric_limits<double>::infinity();
  for (double r : radii) {
    if (!(r > 0.0)) throw InvalidArgument("power_mlsi_constant: radii must exclude z = 0");
    for (double t : angles) best = std::max(best, psi_bar(vec2(r * std::cos(t), r * std::sin(t)), e, q));
  }
  if (!std::isfinite(best)) throw NumericalError("power_mlsi_constant: non-finite supremum");
  return best;
}

double power_mlsi_constant(double p, std::size_t radii, std::size_t angles) {
  if (radii < 2 || angles < 2) throw InvalidArgument("power_mlsi_constant: grids need >= 2 nodes");
  std::vector<double> r(radii);
  for (std::size_t i = 0; i < radii; ++i) r[i] = std::pow(10.0, -4.0 + 8.0 * static_cast<double>(i) / (radii - 1));
  return power_mlsi_constant(p, r, linspace(0.0, std::numbers::pi, angles));
}

namespace {

struct LebesgueData {
  WeightedNodes nodes;
  std::vector<double> g;
  std::vector<double> eg;
  std::vector<Vec> grad;
  double mass = 0.0;
};

LebesgueData lebesgue_data(const TestFunction& g, const QuadratureRule& rule) {
  LebesgueData d;
  d.nodes = lebesgue_nodes(rule);
  d.g = evaluate(g, d.nodes.nodes);
  require_boundary_decay(d.g, d.nodes);
  d.eg = exp_values(d.g);
  d.grad.reserve(d.g.size());
  for (const Vec& x : d.nodes.nodes) d.grad.push_back(g.grad(x));
  d.mass = weighted_sum(d.eg, d.nodes.weights);
  return d;
}

Conjugate conjugate_at(const Potential& P, const std::vector<Vec>& grads, double factor) {
  std::vector<Vec> q;
  q.reserve(grads.size());
  for (const Vec& v : grads) q.push_back(factor * v);
  return Conjugate::for_queries(P, q);
}

double euclidean_rhs_from(const Potential& P, const Conjugate& conj, const LebesgueData& d, double lambda) {
  std::vector<double> terms(d.g.size());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = conj(-lambda * d.grad[i]) * d.eg[i];
  return -P.dim * std::log(lambda * std::numbers::e) * d.mass + weighted_sum(terms, d.nodes.weights);
}

Sides euclidean_sides(const Potential& P, const TestFunction& g, double lambda, const QuadratureRule& rule) {
  const LebesgueData d = lebesgue_data(g, rule);
  const Conjugate conj = conjugate_at(P, d.grad, -lambda);
  return {entropy_of(d.g, d.nodes.weights), euclidean_rhs_from(P, conj, d, lambda)};
}

}  // namespace

DeficitReport euclidean_lsi_check(const Potential& normalized, const TestFunction& g, double lambda,
                                  const QuadratureRule& rule) {
  if (!(lambda > 0.0)) throw InvalidArgument("euclidean_lsi_check: lambda must be positive");
  require_same_dim(normalized, g, rule);
  const Sides s = euclidean_sides(normalized, g, lambda, rule);
  const Sides c = euclidean_sides(normalized, g, lambda, rule.coarsened());
  DeficitReport r = make_report("euclidean_lsi_check", s.lhs, s.rhs, report_tolerance(s.rhs - s.lhs, c.rhs - c.lhs));
  r.metadata["lambda"] = lambda;
  r.metadata["resolution"] = static_cast<double>(rule.resolution()[0]);
  return r;
}

double euclidean_lsi_rhs(const Potential& normalized, const TestFunction& g, double lambda,
                         const QuadratureRule& rule) {
  if (!(lambda > 0.0)) throw InvalidArgument("euclidean_lsi_rhs: lambda must be positive");
  require_same_dim(normalized, g, rule);
  return euclidean_sides(normalized, g, lambda, rule).rhs;
}

OptimalLambda optimal_lambda(const Potential& normalized, const TestFunction& g, const QuadratureRule& rule,
                             double lambda_max) {
  require_same_dim(normalized, g, rule);
  if (!normalized.has_conjugate_grad()) throw InvalidArgument("optimal_lambda needs the gradient of the conjugate");
  if (!(lambda_max > 0.0)) throw InvalidArgument("optimal_lambda: lambda_max must be positive");
  const LebesgueData d = lebesgue_data(g, rule);
  const double n = normalized.dim;
  auto residual = [&](double lambda) {
    std::vector<double> terms(d.g.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      terms[i] = d.grad[i].dot(normalized.conjugate_grad(-lambda * d.grad[i])) * d.eg[i];
    }
    return -n * d.mass - lambda * weighted_sum(terms, d.nodes.weights);
  };
  double lo = std::log(1e-8), hi = std::log(lambda_max);
  double rlo = residual(std::exp(lo)), rhi = residual(std::exp(hi));
  if (!(rlo < 0.0 && rhi > 0.0)) {
    std::ostringstream msg;
    msg << "optimal_lambda: no sign change of the stationarity residual on [1e-8, " << lambda_max << "] ("
        << rlo << ", " << rhi << ')';
    throw InfeasibleError(msg.str());
  }
  OptimalLambda out;
  double mid = 0.5 * (lo + hi), rmid = residual(std::exp(mid));
  for (out.iterations = 0; out.iterations < 200; ++out.iterations) {
    mid = 0.5 * (lo + hi);
    rmid = residual(std::exp(mid));
    if (std::abs(rmid) <= 1e-12 * std::max(1.0, d.mass) || hi - lo <= 1e-15) break;
    (rmid < 0.0 ? lo : hi) = mid;
  }
  out.lambda = std::exp(mid);
  out.residual = rmid;
  return out;
}

double equality_case_residual(const Potential& C, const Vec& center, const QuadratureRule& rule) {
  const QuadratureRule own = make_rule(truncation_box(C, 1e-12), default_resolution(C.dim));
  const Potential phi = normalize(C, own);
  return std::abs(euclidean_lsi_check(phi, neg_potential_function(C, 1.0, center), 1.0, rule).deficit);
}

namespace {

void require_homogeneous(const Potential& C, double q) {
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    Vec x(C.dim);
    for (int i = 0; i < C.dim; ++i) x[i] = unif(rng);
    for (double t : {0.5, 2.0, 3.0}) {
      const double lhs = C.eval(t * x), rhs = std::pow(t, q) * C.eval(x);
      if (std::abs(lhs - rhs) > 1e-9 * std::max(1.0, std::abs(rhs))) {
        std::ostringstream msg;
        msg << C.label << " is not " << q << "-homogeneous: C(" << t << " x) = " << lhs << " vs " << rhs
            << " at x = " << to_string(x);
        throw InvalidArgument(msg.str());
      }
    }
  }
}

struct HomogeneousSides {
  Sides sides;
  double mass = 0.0;
  double conj_integral = 0.0;
};

HomogeneousSides homogeneous_sides(const Potential& C, const TestFunction& g, const QuadratureRule& rule, double p,
                                   double log_L) {
  const LebesgueData d = lebesgue_data(g, rule);
  const Conjugate conj = conjugate_at(C, d.grad, -1.0);
  std::vector<double> terms(d.g.size());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = conj(-d.grad[i]) * d.eg[i];
  const double M = weighted_sum(terms, d.nodes.weights);
  if (!(M > 0.0)) throw NumericalError("homogeneous_lsi_check: int C*(-grad g) e^g vanishes (g constant?)");
  const double n = C.dim;
  const double log_arg = std::log(p / n) - (p - 1.0) - (p / n) * log_L + std::log(M / d.mass);
  return {{entropy_of(d.g, d.nodes.weights), (n / p) * d.mass * log_arg}, d.mass, M};
}

}  // namespace

DeficitReport homogeneous_lsi_check(const Potential& C, const TestFunction& g, const QuadratureRule& rule) {
  require_same_dim(C, g, rule);
  if (!C.homogeneity_degree) throw InvalidArgument(C.label + " carries no homogeneity degree");
  const double q = *C.homogeneity_degree;
  if (!(q > 1.0)) throw InvalidArgument("homogeneous_lsi_check: degree must exceed 1");
  require_homogeneous(C, q);
  const double p = q / (q - 1.0);
  const QuadratureRule own = make_rule(truncation_box(C, 1e-12), default_resolution(C.dim));
  const double log_L = log_partition(C, own);

  const HomogeneousSides s = homogeneous_sides(C, g, rule, p, log_L);
  const HomogeneousSides c = homogeneous_sides(C, g, rule.coarsened(), p, log_L);
  DeficitReport r = make_report("homogeneous_lsi_check", s.sides.lhs, s.sides.rhs,
                                report_tolerance(s.sides.rhs - s.sides.lhs, c.sides.rhs - c.sides.lhs));

  // The closed form is the Euclidean LSI with phi = C + log L minimized over lambda.
  const Potential phi = C.shifted(log_L);
  const double lambda_closed = std::pow(C.dim * s.mass / (p * s.conj_integral), 1.0 / p);
  double lambda0 = lambda_closed;
  if (phi.has_conjugate_grad()) {
    const OptimalLambda opt = optimal_lambda(phi, g, rule);
    lambda0 = opt.lambda;
    r.metadata["stationarity_residual"] = opt.residual;
  }
  const double optimized = euclidean_lsi_rhs(phi, g, lambda0, rule);
  r.metadata["q"] = q;
  r.metadata["p"] = p;
  r.metadata["log_L"] = log_L;
  r.metadata["lambda_closed_form"] = lambda_closed;
  r.metadata["lambda_optimal"] = lambda0;
  r.metadata["closed_form_gap"] = std::abs(s.sides.rhs - optimized);
  r.metadata["resolution"] = static_cast<double>(rule.resolution()[0]);
  return r;
}

std::vector<Vec> tensor_points(const std::vector<Axis>& axes) {
  if (axes.empty()) return {};
  std::size_t total = 1;
  for (const Axis& a : axes) total *= a.size();
  std::vector<Vec> out;
  out.reserve(total);
  const auto n = axes.size();
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t k = 0; k < total; ++k) {
    Vec x(static_cast<Eigen::Index>(n));
    for (std::size_t d = 0; d < n; ++d) x[static_cast<Eigen::Index>(d)] = axes[d][idx[d]];
    out.push_back(std::move(x));
    for (std::size_t d = n; d-- > 0;) {
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
    }
  }
  return out;
}

namespace {

constexpr double kFloor = 1e-8;

std::vector<Vec> default_grid(int dim, double radius) {
  const std::size_t count = dim == 1 ? 801 : 81;
  return tensor_points(std::vector<Axis>(static_cast<std::size_t>(dim), linspace(-radius, radius, count)));
}

void require_anchored(const Potential& Phi) {
  const double at0 = Phi.eval(Vec::Zero(Phi.dim));
  if (std::abs(at0) > 1e-12) {
    std::ostringstream msg;
    msg << Phi.label << " must satisfy Phi(0) = 0 (got " << at0 << "); pass the raw, unnormalized potential";
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

double psi_alpha(const Potential& Phi, double alpha, const std::vector<Vec>& grid) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("psi_alpha: alpha must lie in (0, 1)");
  std::vector<Vec> queries;
  queries.reserve(2 * grid.size());
  for (const Vec& x : grid) {
    queries.push_back(x);
    queries.push_back(x / (1.0 - alpha));
  }
  if (queries.empty()) throw InvalidArgument("psi_alpha: empty grid");
  const Conjugate conj = Conjugate::for_queries(Phi, queries);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t admissible = 0;
  for (const Vec& x : grid) {
    const double base = conj(x);
    if (!(base > kFloor)) continue;
    ++admissible;
    best = std::max(best, (1.0 - alpha) * conj(x / (1.0 - alpha)) / base);
  }
  if (admissible == 0) throw InvalidArgument("psi_alpha: no grid point with Phi*(x) above the floor");
  return best;
}

MinAResult min_A(const Potential& Phi, const std::vector<Vec>& grid) {
  auto sup_ratio = [&](double scale) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec& x0 : grid) {
      const Vec x = scale * x0;
      const double f = Phi.eval(x);
      if (!(f > kFloor)) continue;
      best = std::max(best, x.dot(Phi.grad(x)) / f);
    }
    return best;
  };
  const double base = sup_ratio(1.0);
  if (!std::isfinite(base)) throw InvalidArgument("min_A: no grid point with Phi(x) above the floor");
  MinAResult out;
  out.A = base - 1.0;
  out.A_extended = sup_ratio(2.0) - 1.0;
  out.bounded = std::isfinite(out.A_extended) && out.A_extended <= out.A + 1e-3 * std::max(1.0, std::abs(out.A));
  return out;
}

double lambda_condition(const Potential& Phi, double lambda, std::size_t resolution) {
  if (!(lambda > 1.0)) return std::numeric_limits<double>::infinity();
  const Potential tilted = Phi.scaled(1.0 - 1.0 / lambda);
  Box box;
  try {
    box = truncation_box(tilted, 1e-10);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::infinity();
  }
  const QuadratureRule tilted_rule = make_rule(box, resolution);
  const QuadratureRule own = make_rule(truncation_box(Phi, 1e-10), resolution);
  return log_partition(tilted, tilted_rule) - log_partition(Phi, own);
}

LargeEntropyConstants derive_large_entropy_constants(const Potential& Phi, const QuadratureRule& rule,
                                                     LargeEntropyOptions options) {
  require_anchored(Phi);
  if (rule.dim() != Phi.dim) throw InvalidArgument("derive_large_entropy_constants: dimension mismatch");
  if (options.alpha_grid.empty()) {
    options.alpha_grid = {0.5,  0.4,   0.3,   0.25,  0.2,   0.15,  0.1,    0.075, 0.05,  0.04,  0.03,
                          0.02, 0.015, 0.01,  0.0075, 0.005, 0.004, 0.003, 0.002, 0.0015, 0.001};
  }
  if (options.lambda_grid.empty()) {
    for (int i = 0; i <= 120; ++i) options.lambda_grid.push_back(1.01 * std::pow(1000.0 / 1.01, i / 120.0));
  }
  if (options.psi_grid.empty()) options.psi_grid = default_grid(Phi.dim, 50.0);
  if (options.a_grid.empty()) options.a_grid = default_grid(Phi.dim, 20.0);
  for (double a : options.alpha_grid) {
    if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("alpha grid values must lie in (0, 1)");
  }
  for (double l : options.lambda_grid) {
    if (!(l > 0.0)) throw InvalidArgument("lambda grid values must be positive");
  }

  LargeEntropyConstants out;
  const MinAResult A = min_A(Phi, options.a_grid);
  out.metadata["A_extended"] = A.A_extended;
  if (!A.bounded) {
    std::ostringstream msg;
    msg << Phi.label << " fails the eqh probe: x.grad Phi / Phi - 1 grows from " << A.A << " to " << A.A_extended
        << " when the grid is extended";
    throw InfeasibleError(msg.str());
  }
  out.A = std::max(0.0, A.A);

  std::vector<double> alphas = options.alpha_grid;
  std::sort(alphas.begin(), alphas.end());
  const double psi_small = psi_alpha(Phi, alphas.front(), options.psi_grid);
  out.metadata["psi_at_smallest_alpha"] = psi_small;
  if (std::abs(psi_small - 1.0) > options.eqm_tolerance) {
    std::ostringstream msg;
    msg << Phi.label << " fails the eqm probe: psi(" << alphas.front() << ") = " << psi_small;
    throw InfeasibleError(msg.str());
  }

  std::vector<double> lambdas = options.lambda_grid;
  std::sort(lambdas.begin(), lambdas.end());
  const std::size_t resolution = rule.resolution()[0];
  bool found = false;
  for (double l : lambdas) {
    const double v = lambda_condition(Phi, l, resolution);
    if (v <= 1.0) {
      out.lambda = l;
      out.log_integral = v;
      found = true;
      break;
    }
  }
  if (!found) throw InfeasibleError("no lambda on the grid gives log int e^{Phi/lambda} dmu_Phi <= 1");

  found = false;
  for (auto it = alphas.rbegin(); it != alphas.rend(); ++it) {
    const double psi = psi_alpha(Phi, *it, options.psi_grid);
    const double product = (*it + out.A * std::abs(psi - 1.0)) * out.lambda;
    if (product <= 0.25) {
      out.alpha = *it;
      out.psi = psi;
      out.product = product;
      found = true;
      break;
    }
  }
  if (!found) throw InfeasibleError("no alpha on the grid satisfies (alpha + A |psi(alpha) - 1|) lambda <= 1/4");

  out.C1 = 4.0 * out.alpha;
  out.C2 = 1.0 / out.alpha;
  out.metadata["lambda"] = out.lambda;
  out.metadata["alpha"] = out.alpha;
  out.metadata["A"] = out.A;
  out.metadata["psi"] = out.psi;
  out.metadata["C1"] = out.C1;
  out.metadata["C2"] = out.C2;
  out.metadata["lambda_condition"] = out.log_integral;
  out.metadata["alpha_condition"] = out.product;
  out.metadata["lambda_condition_holds"] = out.log_integral <= 1.0 ? 1.0 : 0.0;
  out.metadata["alpha_condition_holds"] = out.product <= 0.25 ? 1.0 : 0.0;
  out.metadata["eqh_holds"] = A.bounded ? 1.0 : 0.0;
  return out;
}

namespace {

Sides large_entropy_sides(const Potential& Phi, const TestFunction& g, const LargeEntropyConstants& k,
                          const QuadratureRule& rule, const Conjugate* conj_in, std::vector<Vec>* queries) {
  const Potential normalized = normalize(Phi, rule);
  const WeightedNodes nodes = measure_nodes(normalized, rule);
  auto gv = evaluate(g, nodes.nodes);
  const double log_mass = std::log(weighted_sum(exp_values(gv), nodes.weights));
  for (double& v : gv) v -= log_mass;
  const auto eg = exp_values(gv);
  std::vector<Vec> args;
  args.reserve(gv.size());
  for (const Vec& x : nodes.nodes) args.push_back(k.C2 * g.grad(x));
  if (queries) {
    *queries = args;
    return {};
  }
  std::vector<double> terms(gv.size());
  for (std::size_t i = 0; i < gv.size(); ++i) terms[i] = (*conj_in)(args[i]) * eg[i];
  return {entropy_of(gv, nodes.weights), k.C1 * weighted_sum(terms, nodes.weights)};
}

}  // namespace

DeficitReport check_large_entropy(const Potential& Phi, const TestFunction& g, const LargeEntropyConstants& constants,
                                  const QuadratureRule& rule) {
  require_same_dim(Phi, g, rule);
  require_anchored(Phi);
  if (!(constants.C1 > 0.0 && constants.C2 > 0.0)) throw InvalidArgument("large-entropy constants must be positive");
  std::vector<Vec> queries;
  large_entropy_sides(Phi, g, constants, rule, nullptr, &queries);
  const Conjugate conj = Conjugate::for_queries(Phi, queries);
  const Sides s = large_entropy_sides(Phi, g, constants, rule, &conj, nullptr);
  if (s.lhs < 1.0) {
    std::ostringstream msg;
    msg << "small-entropy, out of theorem scope: Ent = " << s.lhs << " < 1";
    throw OutOfScope(msg.str());
  }
  const Sides c = large_entropy_sides(Phi, g, constants, rule.coarsened(), &conj, nullptr);
  DeficitReport r = make_report("check_large_entropy", s.lhs, s.rhs, report_tolerance(s.rhs - s.lhs, c.rhs - c.lhs));
  r.metadata["C1"] = constants.C1;
  r.metadata["C2"] = constants.C2;
  r.metadata["alpha"] = constants.alpha;
  r.metadata["lambda"] = constants.lambda;
  r.metadata["resolution"] = static_cast<double>(rule.resolution()[0]);
  return r;
}

}  // namespace mlsi
