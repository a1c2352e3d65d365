#include <mlsi/prekopa_transport.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mlsi {

namespace {

// Maximizes f on [a, b] by golden-section search.
std::pair<double, double> golden_max(const std::function<double(double)>& f, double a, double b) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200 && b - a > 1e-13 * std::max(1.0, std::abs(a) + std::abs(b)); ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

SupConvolution sup_convolution(const Potential& potential, const TestFunction& g, double s, const Vec& z,
                               const std::vector<Axis>& y_axes) {
  if (!(s > 0.0 && s < 0.5)) throw InvalidArgument("sup_convolution: s must lie in (0, 1/2)");
  const int n = potential.dim;
  if (z.size() != n || g.dim != n || static_cast<int>(y_axes.size()) != n) {
    throw InvalidArgument("sup_convolution: dimension mismatch");
  }
  for (const Axis& a : y_axes) {
    if (a.size() < 3) throw InvalidArgument("sup_convolution: y-grid needs >= 3 nodes per axis");
  }
  const double t = 1.0 - s;
  const double phi_z = potential.eval(z);
  auto inner = [&](const Vec& y) {
    const Vec x = z / t - (s / t) * y;
    return g.eval(x) - t * potential.eval(x) - s * potential.eval(y) + phi_z;
  };

  // Coarse scan over the tensor grid.
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0), best_idx = idx;
  double best = -std::numeric_limits<double>::infinity();
  Vec y(n);
  for (bool more = true; more;) {
    for (int d = 0; d < n; ++d) y[d] = y_axes[static_cast<std::size_t>(d)][idx[static_cast<std::size_t>(d)]];
    const double v = inner(y);
    if (v > best) best = v, best_idx = idx;
    more = false;
    for (std::size_t d = idx.size(); d-- > 0;) {
      if (++idx[d] < y_axes[d].size()) {
        more = true;
        break;
      }
      idx[d] = 0;
    }
  }
  Vec lo(n), hi(n), arg(n);
  for (std::size_t d = 0; d < best_idx.size(); ++d) {
    const std::size_t k = best_idx[d];
    const Axis& a = y_axes[d];
    if (k == 0 || k + 1 == a.size()) {
      std::ostringstream msg;
      msg << "sup_convolution: maximizer at the y-grid boundary (z = " << to_string(z) << ", s = " << s
          << "); the sup is not localized";
      throw NumericalError(msg.str());
    }
    lo[static_cast<Eigen::Index>(d)] = a[k - 1];
    hi[static_cast<Eigen::Index>(d)] = a[k + 1];
    arg[static_cast<Eigen::Index>(d)] = a[k];
  }

  // Coordinate-wise golden-section sweeps inside the bracketing cell.
  double value = best;
  for (int sweep = 0; sweep < (n == 1 ? 1 : 30); ++sweep) {
    const double before = value;
    for (int d = 0; d < n; ++d) {
      Vec probe = arg;
      auto line = [&](double c) {
        probe[d] = c;
        return inner(probe);
      };
      const auto [c, v] = golden_max(line, lo[d], hi[d]);
      if (v > value) {
        value = v;
        arg[d] = c;
      }
    }
    if (value - before <= 1e-16 * std::max(1.0, std::abs(value))) break;
  }
  return {value, arg};
}

ExpansionOrder lemma_expansion_order(const Potential& potential, const TestFunction& g,
                                     const std::vector<double>& s_ladder, const std::vector<Vec>& z_grid,
                                     double y_radius, std::size_t y_nodes) {
  if (s_ladder.size() < 2) throw InvalidArgument("lemma_expansion_order: need >= 2 values of s");
  if (z_grid.empty()) throw InvalidArgument("lemma_expansion_order: empty z grid");
  const Conjugate conj = mlsi_conjugate(potential, g, z_grid);
  ExpansionOrder out;
  for (double s : s_ladder) {
    double worst = 0.0;
    for (const Vec& z : z_grid) {
      std::vector<Axis> axes;
      for (Eigen::Index d = 0; d < z.size(); ++d) axes.push_back(linspace(z[d] - y_radius, z[d] + y_radius, y_nodes));
      const double gs = sup_convolution(potential, g, s, z, axes).value;
      worst = std::max(worst, std::abs(gs - g.eval(z) - s * mlsi_integrand(potential, conj, g, z)));
    }
    out.s.push_back(s);
    out.error.push_back(worst);
  }
  const double top = *std::max_element(out.error.begin(), out.error.end());
  if (top <= 1e-13) return out;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(out.s.size());
  for (std::size_t i = 0; i < out.s.size(); ++i) {
    if (!(out.error[i] > 0.0)) throw NumericalError("lemma_expansion_order: E(s) vanishes at some but not all s");
    const double lx = std::log(out.s[i]), ly = std::log(out.error[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

namespace {

double trapezoid_total(const GridFunction& f) {
  // Per-axis trapezoid weights, so non-uniform axes are fine.
  std::vector<std::vector<double>> w(static_cast<std::size_t>(f.dim()));
  for (int d = 0; d < f.dim(); ++d) {
    const Axis& a = f.axis(d);
    auto& wd = w[static_cast<std::size_t>(d)];
    wd.assign(a.size(), 0.0);
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
      const double h = a[i + 1] - a[i];
      wd[i] += 0.5 * h;
      wd[i + 1] += 0.5 * h;
    }
  }
  std::vector<double> terms(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto idx = f.unflatten(k);
    double weight = 1.0;
    for (std::size_t d = 0; d < idx.size(); ++d) weight *= w[d][idx[d]];
    terms[k] = weight * f[k];
  }
  return compensated_sum(terms);
}

double max_second_difference(const GridFunction& w) {
  double worst = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    auto idx = w.unflatten(k);
    for (int d = 0; d < w.dim(); ++d) {
      const auto dd = static_cast<std::size_t>(d);
      if (idx[dd] == 0 || idx[dd] + 1 >= w.axis(d).size()) continue;
      auto left = idx, right = idx;
      --left[dd];
      ++right[dd];
      worst = std::max(worst, std::abs(w.at(left) - 2.0 * w[k] + w.at(right)));
    }
  }
  return worst;
}

}  // namespace

PLReport pl_check(const GridFunction& u, const GridFunction& v, const GridFunction& w, double t) {
  if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("pl_check: t must lie in (0, 1)");
  if (u.axes() != v.axes() || u.axes() != w.axes()) throw InvalidArgument("pl_check: u, v, w must share their axes");
  for (const GridFunction* f : {&u, &v, &w}) {
    for (double x : f->values()) {
      if (x < 0.0) throw InvalidArgument("pl_check: functions must be nonnegative");
    }
  }
  const double pairs = static_cast<double>(u.size()) * static_cast<double>(u.size());
  if (pairs > 2e7) throw CapacityError("pl_check: too many node pairs for the exhaustive hypothesis check");

  PLReport out;
  // Hat-function interpolation errs by at most h^2 max|w''| / 8 per axis.
  out.allowance = max_second_difference(w) / 8.0 * static_cast<double>(w.dim());
  out.max_violation = -std::numeric_limits<double>::infinity();
  std::vector<double> ut(u.size()), vt(v.size());
  for (std::size_t i = 0; i < u.size(); ++i) ut[i] = std::pow(u[i], t);
  for (std::size_t j = 0; j < v.size(); ++j) vt[j] = std::pow(v[j], 1.0 - t);
  std::vector<Vec> nodes(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) nodes[i] = u.node(i);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (ut[i] == 0.0) continue;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double left = ut[i] * vt[j];
      if (left == 0.0) continue;
      const double right = w.interpolate(t * nodes[i] + (1.0 - t) * nodes[j]);
      out.max_violation = std::max(out.max_violation, left - right);
    }
  }
  out.hypothesis_holds = out.max_violation <= out.allowance;
  const double iu = trapezoid_total(u), iv = trapezoid_total(v), iw = trapezoid_total(w);
  out.lhs = std::pow(iu, t) * std::pow(iv, 1.0 - t);
  out.rhs = iw;
  double volume = 1.0;
  for (const Axis& a : w.axes()) volume *= a.back() - a.front();
  out.tol = std::max(1e-6, out.allowance * volume);
  if (out.hypothesis_holds) out.conclusion_holds = out.lhs <= out.rhs + out.tol;
  return out;
}

WeightedPoints uniform_points(std::vector<Vec> points) {
  WeightedPoints out;
  const double m = points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size());
  out.masses.assign(points.size(), m);
  out.points = std::move(points);
  return out;
}

double Coupling::marginal_error() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    worst = std::max(worst, std::abs(plan.row(i).sum() - source.masses[static_cast<std::size_t>(i)]));
  }
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    worst = std::max(worst, std::abs(plan.col(j).sum() - target.masses[static_cast<std::size_t>(j)]));
  }
  return worst;
}

void Coupling::write_csv(std::ostream& out) const {
  out << "source,target,mass,source_x,target_y\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      if (plan(i, j) == 0.0) continue;
      out << i << ',' << j << ',' << plan(i, j) << ',' << source.points[static_cast<std::size_t>(i)][0] << ','
          << target.points[static_cast<std::size_t>(j)][0] << '\n';
    }
  }
}

std::vector<std::size_t> solve_assignment_exhaustive(const Mat& cost) {
  const auto k = static_cast<std::size_t>(cost.rows());
  if (k > 12) throw CapacityError("exhaustive transport is limited to 12 points");
  std::vector<std::size_t> best(k);
  std::iota(best.begin(), best.end(), 0);
  if (k <= 8) {
    std::vector<std::size_t> perm = best;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (std::size_t i = 0; i < k; ++i) c += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i]));
      if (c < best_cost) best_cost = c, best = perm;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  // Subset dynamic programming: dp[mask] = best cost assigning the first
  // popcount(mask) sources to the targets in mask.
  const std::size_t full = std::size_t{1} << k;
  std::vector<double> dp(full, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> choice(full, 0);
  dp[0] = 0.0;
  for (std::size_t mask = 0; mask < full; ++mask) {
    if (!std::isfinite(dp[mask])) continue;
    const auto i = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (i == k) continue;
    for (std::size_t j = 0; j < k; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      const std::size_t next = mask | (std::size_t{1} << j);
      const double c = dp[mask] + cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (c < dp[next]) dp[next] = c, choice[next] = j;
    }
  }
  for (std::size_t mask = full - 1, i = k; i-- > 0;) {
    best[i] = choice[mask];
    mask &= ~(std::size_t{1} << choice[mask]);
  }
  return best;
}

std::vector<std::size_t> solve_assignment_hungarian(const Mat& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  if (static_cast<std::size_t>(cost.cols()) != n) throw InvalidArgument("assignment needs a square cost matrix");
  // Shortest augmenting paths with row/column potentials, 1-based internally.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

Coupling optimal_coupling(const Potential& potential, const WeightedPoints& source, const WeightedPoints& target,
                          TransportSolver solver) {
  const std::size_t k = source.points.size();
  if (source.masses.size() != k || target.masses.size() != target.points.size()) {
    throw InvalidArgument("transport: one mass per point");
  }
  const double ms = std::accumulate(source.masses.begin(), source.masses.end(), 0.0);
  const double mt = std::accumulate(target.masses.begin(), target.masses.end(), 0.0);
  if (std::abs(ms - mt) > 1e-12 * std::max(1.0, ms)) {
    std::ostringstream msg;
    msg << "transport: mass mismatch (" << ms << " vs " << mt << ')';
    throw InvalidArgument(msg.str());
  }
  if (k == 0) throw InvalidArgument("transport: empty point sets");
  if (target.points.size() != k) throw CapacityError("transport: only equal point counts are supported");
  for (const auto* set : {&source, &target}) {
    for (double m : set->masses) {
      if (m < 0.0) throw InvalidArgument("transport: masses must be nonnegative");
      if (std::abs(m - set->masses.front()) > 1e-12 * std::max(1.0, m)) {
        throw CapacityError("transport: only uniform masses are supported");
      }
    }
  }
  if (solver == TransportSolver::automatic) solver = k <= 8 ? TransportSolver::exhaustive : TransportSolver::assignment;
  if (solver == TransportSolver::exhaustive && k > 12) throw CapacityError("exhaustive transport is limited to 12 points");
  if (solver == TransportSolver::assignment && k > 256) throw CapacityError("assignment transport is limited to 256 points");

  Mat cost(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          bregman_cost(potential, source.points[i], target.points[j]);
    }
  }
  const auto perm =
      solver == TransportSolver::exhaustive ? solve_assignment_exhaustive(cost) : solve_assignment_hungarian(cost);
  Coupling out;
  out.source = source;
  out.target = target;
  out.plan = Mat::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  // Summed in source order so that both solvers report the same total for the
  // same permutation.
  std::vector<double> terms(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(perm[i]);
    out.plan(ii, jj) = source.masses[i];
    terms[i] = source.masses[i] * cost(ii, jj);
  }
  out.cost = compensated_sum(terms);
  return out;
}

double wasserstein_L(const Potential& potential, const WeightedPoints& source, const WeightedPoints& target,
                     TransportSolver solver) {
  return optimal_coupling(potential, source, target, solver).cost;
}

std::vector<double> quantile_points(const ScalarField& density, const QuadratureRule& rule, std::size_t k) {
  if (rule.dim() != 1) throw InvalidArgument("quantile_points: 1-D rules only");
  if (k == 0) throw InvalidArgument("quantile_points: k must be positive");
  const Axis& x = rule.axis(0);
  std::vector<double> f(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    f[i] = density(vec1(x[i]));
    if (!(f[i] >= 0.0) || !std::isfinite(f[i])) throw InvalidArgument("quantile_points: density must be finite and >= 0");
  }
  std::vector<double> cdf(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i - 1] + f[i]);
  const double total = cdf.back();
  if (!(total > 0.0)) throw NumericalError("quantile_points: zero mass");
  // CDF with the density linearly interpolated inside each cell.
  auto cdf_at = [&](double y) {
    const auto it = std::upper_bound(x.begin(), x.end(), y);
    const std::size_t i = std::min<std::size_t>(x.size() - 2, static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - x.begin() - 1)));
    const double h = x[i + 1] - x[i], d = y - x[i];
    const double fy = f[i] + (f[i + 1] - f[i]) * d / h;
    return (cdf[i] + 0.5 * d * (f[i] + fy)) / total;
  };
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double target = (static_cast<double>(j) + 0.5) / static_cast<double>(k);
    double lo = x.front(), hi = x.back();
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf_at(mid) < target ? lo : hi) = mid;
    }
    out[j] = 0.5 * (lo + hi);
  }
  return out;
}

DeficitReport check_transport(const Potential& normalized, const ScalarField& F, const QuadratureRule& rule,
                              std::size_t k) {
  if (normalized.dim != 1 || rule.dim() != 1) throw InvalidArgument("check_transport: 1-D only");
  if (k < 2) throw InvalidArgument("check_transport: k must be >= 2");
  const WeightedNodes nodes = measure_nodes(normalized, rule);
  std::vector<double> fv(nodes.nodes.size()), flogf(nodes.nodes.size());
  for (std::size_t i = 0; i < fv.size(); ++i) {
    fv[i] = F(nodes.nodes[i]);
    if (!(fv[i] >= 0.0) || !std::isfinite(fv[i])) {
      throw InvalidArgument("check_transport: F must be finite and >= 0 (at " + to_string(nodes.nodes[i]) + ")");
    }
    flogf[i] = fv[i] > 0.0 ? fv[i] * std::log(fv[i]) : 0.0;
  }
  const double mass = weighted_sum(fv, nodes.weights);
  if (std::abs(mass - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << "check_transport: F is not normalized (int F dmu = " << mass << ')';
    throw InvalidArgument(msg.str());
  }
  const double rhs = weighted_sum(flogf, nodes.weights);
  const auto mu = [&](const Vec& x) { return std::exp(-normalized.eval(x)); };
  const auto fmu = [&](const Vec& x) { return F(x) * mu(x); };
  auto discrete = [&](std::size_t count) {
    std::vector<Vec> src, dst;
    for (double q : quantile_points(fmu, rule, count)) src.push_back(vec1(q));
    for (double q : quantile_points(mu, rule, count)) dst.push_back(vec1(q));
    return wasserstein_L(normalized, uniform_points(src), uniform_points(dst),
                         count <= 8 ? TransportSolver::exhaustive : TransportSolver::assignment);
  };
  const double lhs = discrete(k);
  const double half = discrete(std::max<std::size_t>(2, k / 2));
  const double allowance = 2.0 * std::abs(lhs - half);
  DeficitReport r = make_report("check_transport", lhs, rhs, std::max(1e-6, allowance));
  r.metadata["k"] = static_cast<double>(k);
  r.metadata["allowance"] = allowance;
  r.metadata["lhs_half_k"] = half;
  return r;
}

}  // namespace mlsi
