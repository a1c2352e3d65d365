#include <doctest.h>

#include <mlsi/prekopa_transport.hpp>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

using namespace mlsi;

namespace {

std::vector<Axis> y_box(const Vec& z, double radius, std::size_t nodes) {
  std::vector<Axis> axes;
  for (Eigen::Index d = 0; d < z.size(); ++d) axes.push_back(linspace(z[d] - radius, z[d] + radius, nodes));
  return axes;
}

std::vector<Vec> z_line(double lo, double hi, std::size_t count) {
  std::vector<Vec> out;
  for (double z : linspace(lo, hi, count)) out.push_back(vec1(z));
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Smallest w on the grid whose linear interpolant dominates u^t v^{1-t}:
// each node takes the max over pairs landing in its two adjacent cells.
GridFunction pl_majorant(const GridFunction& u, const GridFunction& v, double t) {
  const Axis& x = u.axis(0);
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double value = std::pow(u[i], t) * std::pow(v[j], 1.0 - t);
      const double z = t * x[i] + (1.0 - t) * x[j];
      const auto it = std::upper_bound(x.begin(), x.end(), z);
      const std::size_t k = std::min<std::size_t>(x.size() - 2, static_cast<std::size_t>(it - x.begin()) - 1);
      w[k] = std::max(w[k], value);
      w[k + 1] = std::max(w[k + 1], value);
    }
  }
  return GridFunction({x}, w);
}

}  // namespace

TEST_CASE("sup-convolution closed form for the Gaussian and linear g") {
  // phi = x^2/2, g = a x: g_s(z) = a z + s a^2 / (2 t), attained at y = z - a.
  const Potential G = make_gaussian(1);
  const double a = 0.8;
  const TestFunction g = linear_function(vec1(a));
  for (double s : {0.05, 0.2, 0.4}) {
    for (double z : {-1.0, 0.0, 1.3}) {
      const SupConvolution sc = sup_convolution(G, g, s, vec1(z), y_box(vec1(z), 6.0, 241));
      const double t = 1.0 - s;
      CHECK(sc.value == doctest::Approx(a * z + s * a * a / (2 * t)).epsilon(1e-10));
      CHECK(sc.argmax[0] == doctest::Approx(z - a).epsilon(1e-6));
    }
  }
}

TEST_CASE("sup-convolution of g = 0 vanishes at y = z") {
  for (const Potential& P : {make_gaussian(1), make_power(1, 4.0), make_powerlog(1, 3.0, 0.0)}) {
    for (double z : {-0.7, 0.4}) {
      const SupConvolution sc = sup_convolution(P, constant_function(1, 0.0), 0.1, vec1(z), y_box(vec1(z), 3.0, 121));
      CHECK(std::abs(sc.value) <= 1e-12);
      CHECK(sc.argmax[0] == doctest::Approx(z).epsilon(1e-5));
    }
  }
}

TEST_CASE("sup-convolution argmax tends to the dual solution") {
  // As s -> 0 the maximizer solves grad phi(y0) = grad phi(z) - grad g(z).
  const Potential P = make_power(1, 4.0);
  const TestFunction g = bump_function(vec1(0.0), 1.0);
  for (double z : {-0.5, 0.3}) {
    const double target = P.grad(vec1(z))[0] - g.grad(vec1(z))[0];
    const double y0 = std::cbrt(target);
    double previous = 1e9;
    for (double s : {0.02, 0.01, 0.005}) {
      const double gap = std::abs(sup_convolution(P, g, s, vec1(z), y_box(vec1(z), 4.0, 321)).argmax[0] - y0);
      CHECK(gap < previous);
      previous = gap;
    }
    CHECK(previous < 0.02);
  }
}

TEST_CASE("sup-convolution in two dimensions") {
  const Potential G = make_gaussian(2);
  const Vec a = vec2(0.5, -0.3);
  const SupConvolution sc = sup_convolution(G, linear_function(a), 0.25, vec2(0.2, 0.1), y_box(vec2(0.2, 0.1), 4.0, 81));
  const double t = 0.75;
  CHECK(sc.value == doctest::Approx(a.dot(vec2(0.2, 0.1)) + 0.25 * a.squaredNorm() / (2 * t)).epsilon(1e-9));
}

TEST_CASE("sup-convolution errors") {
  const Potential G = make_gaussian(1);
  const TestFunction g = linear_function(vec1(5.0));
  CHECK_THROWS_AS(sup_convolution(G, g, 0.1, vec1(0.0), y_box(vec1(0.0), 1.0, 41)), NumericalError);
  CHECK_THROWS_AS(sup_convolution(G, g, 0.0, vec1(0.0), y_box(vec1(0.0), 8.0, 41)), InvalidArgument);
  CHECK_THROWS_AS(sup_convolution(G, g, 0.5, vec1(0.0), y_box(vec1(0.0), 8.0, 41)), InvalidArgument);
}

TEST_CASE("expansion remainder is second order") {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> ladder{0.01, 0.005, 0.0025};
  const TestFunction bump = bump_function(vec1(0.0), 1.0);
  const ExpansionOrder gauss = lemma_expansion_order(make_gaussian(1), bump, ladder, z_line(-1.5, 1.5, 13));
  REQUIRE(gauss.slope.has_value());
  CHECK(*gauss.slope >= 1.8);
  CHECK(*gauss.slope <= 2.2);
  const ExpansionOrder p4 = lemma_expansion_order(make_power(1, 4.0), bump, ladder, z_line(-1.5, 1.5, 13));
  REQUIRE(p4.slope.has_value());
  CHECK(*p4.slope >= 1.8);
  CHECK(*p4.slope <= 2.2);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::minutes(1));

  // Linear g under the Gaussian: E(s) = s^2 a^2 / (2 (1 - s)) at every z.
  const ExpansionOrder lin = lemma_expansion_order(make_gaussian(1), linear_function(vec1(1.0)), ladder, z_line(-1, 1, 5));
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    CHECK(lin.error[i] == doctest::Approx(ladder[i] * ladder[i] / (2 * (1 - ladder[i]))).epsilon(1e-6));
  }
}

TEST_CASE("expansion of g = 0 is exact") {
  const ExpansionOrder zero =
      lemma_expansion_order(make_power(1, 3.0), constant_function(1, 0.0), {0.01, 0.005}, z_line(-1, 1, 5));
  CHECK(zero.exact());
  CHECK_THROWS_AS(lemma_expansion_order(make_gaussian(1), constant_function(1, 0.0), {0.01}, z_line(-1, 1, 5)),
                  InvalidArgument);
}

TEST_CASE("Prekopa-Leindler on a smoothed indicator") {
  const Axis x = linspace(-1.0, 2.0, 601);
  const GridFunction u = GridFunction::sample({x}, [](const Vec& p) {
    return sigmoid(200.0 * p[0]) * sigmoid(200.0 * (1.0 - p[0]));
  });
  const PLReport r = pl_check(u, u, u, 0.5);
  CHECK(r.hypothesis_holds);
  REQUIRE(r.conclusion_holds.has_value());
  CHECK(*r.conclusion_holds);
  CHECK(r.lhs == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.rhs == doctest::Approx(r.lhs).epsilon(1e-12));
}

TEST_CASE("Prekopa-Leindler hypothesis failure is detected") {
  const Axis x = linspace(-6.0, 6.0, 401);
  const auto gauss = [](const Vec& p) { return std::exp(-0.5 * p[0] * p[0]); };
  const GridFunction u = GridFunction::sample({x}, gauss);
  const GridFunction half = GridFunction::sample({x}, [&](const Vec& p) { return 0.5 * gauss(p); });
  const PLReport ok = pl_check(u, u, u, 0.3);
  CHECK(ok.hypothesis_holds);
  const PLReport bad = pl_check(u, u, half, 0.5);
  CHECK_FALSE(bad.hypothesis_holds);
  CHECK_FALSE(bad.conclusion_holds.has_value());
  CHECK(bad.max_violation == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("Prekopa-Leindler conclusion follows from the hypothesis") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> center(-1.0, 1.0), width(0.3, 2.0), power(1.0, 4.0), tdist(0.1, 0.9);
  const Axis x = linspace(-8.0, 8.0, 321);
  for (int trial = 0; trial < 25; ++trial) {
    const double cu = center(rng), cv = center(rng), wu = width(rng), wv = width(rng), pu = power(rng), pv = power(rng);
    const double t = tdist(rng);
    const GridFunction u = GridFunction::sample({x}, [&](const Vec& p) { return std::exp(-std::pow(std::abs(p[0] - cu) / wu, pu)); });
    const GridFunction v = GridFunction::sample({x}, [&](const Vec& p) { return std::exp(-std::pow(std::abs(p[0] - cv) / wv, pv)); });
    const GridFunction w = pl_majorant(u, v, t);
    const PLReport r = pl_check(u, v, w, t);
    CHECK(r.hypothesis_holds);
    REQUIRE(r.conclusion_holds.has_value());
    CHECK(*r.conclusion_holds);
  }
}

TEST_CASE("Prekopa-Leindler input validation") {
  const Axis x = linspace(0.0, 1.0, 11);
  const GridFunction u = GridFunction::sample({x}, [](const Vec&) { return 1.0; });
  const GridFunction other = GridFunction::sample({linspace(0.0, 2.0, 11)}, [](const Vec&) { return 1.0; });
  CHECK_THROWS_AS(pl_check(u, u, u, 0.0), InvalidArgument);
  CHECK_THROWS_AS(pl_check(u, u, other, 0.5), InvalidArgument);
  const GridFunction negative = GridFunction::sample({x}, [](const Vec& p) { return p[0] - 0.5; });
  CHECK_THROWS_AS(pl_check(u, negative, u, 0.5), InvalidArgument);
}

TEST_CASE("assignment solvers agree") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const Potential P = make_power(1, 4.0);
  for (std::size_t k : {3u, 6u, 8u, 10u, 12u}) {
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<Vec> a, b;
      for (std::size_t i = 0; i < k; ++i) {
        a.push_back(vec1(normal(rng)));
        b.push_back(vec1(normal(rng)));
      }
      const double ex = wasserstein_L(P, uniform_points(a), uniform_points(b), TransportSolver::exhaustive);
      const double hu = wasserstein_L(P, uniform_points(a), uniform_points(b), TransportSolver::assignment);
      CHECK(ex == hu);
    }
  }
}

TEST_CASE("transport in two dimensions and couplings") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  const Potential P = make_interaction(2, 1.5, 4.0);
  std::vector<Vec> a, b;
  for (int i = 0; i < 7; ++i) {
    a.push_back(vec2(normal(rng), normal(rng)));
    b.push_back(vec2(normal(rng), normal(rng)));
  }
  const Coupling ex = optimal_coupling(P, uniform_points(a), uniform_points(b), TransportSolver::exhaustive);
  const Coupling hu = optimal_coupling(P, uniform_points(a), uniform_points(b), TransportSolver::assignment);
  CHECK(ex.cost == hu.cost);
  CHECK(ex.marginal_error() <= 1e-15);
  CHECK(ex.cost >= 0.0);
  CHECK(wasserstein_L(P, uniform_points(a), uniform_points(a)) == 0.0);
  std::ostringstream csv;
  ex.write_csv(csv);
  CHECK(csv.str().rfind("source,target,mass", 0) == 0);
}

TEST_CASE("transport errors") {
  const Potential G = make_gaussian(1);
  const std::vector<Vec> three{vec1(0), vec1(1), vec1(2)};
  WeightedPoints heavy = uniform_points(three);
  heavy.masses = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(wasserstein_L(G, heavy, uniform_points(three)), InvalidArgument);
  WeightedPoints uneven = uniform_points(three);
  uneven.masses = {0.5, 0.25, 0.25};
  CHECK_THROWS_AS(wasserstein_L(G, uneven, uniform_points(three)), CapacityError);
  std::vector<Vec> many(13, vec1(0.0));
  CHECK_THROWS_AS(wasserstein_L(G, uniform_points(many), uniform_points(many), TransportSolver::exhaustive), CapacityError);
  std::vector<Vec> huge(257, vec1(0.0));
  CHECK_THROWS_AS(wasserstein_L(G, uniform_points(huge), uniform_points(huge)), CapacityError);
}

TEST_CASE("quantile points of the Gaussian") {
  const QuadratureRule rule = make_rule(symmetric_box(1, 12.0), 4001);
  const auto q = quantile_points([](const Vec& x) { return std::exp(-0.5 * x[0] * x[0]); }, rule, 4);
  CHECK(q[0] == doctest::Approx(-1.1503493803760083).epsilon(1e-5));
  CHECK(q[1] == doctest::Approx(-0.31863936396437514).epsilon(1e-5));
  CHECK(q[2] == doctest::Approx(-q[1]).epsilon(1e-9));
}

TEST_CASE("transport inequality examples") {
  const Potential raw = make_gaussian(1);
  const QuadratureRule rule = make_rule(symmetric_box(1, 12.0), 4001);
  const Potential G = normalize(raw, rule);

  // F dmu = N(1, 1): W_L = 1/2 = int F log F dmu.
  const ScalarField shift = [](const Vec& x) { return std::exp(x[0] - 0.5); };
  double previous = 1e9;
  for (std::size_t k : {64u, 128u, 256u}) {
    const DeficitReport r = check_transport(G, shift, rule, k);
    CHECK(r.rhs == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(std::abs(r.deficit) <= 0.05);
    CHECK(std::abs(r.deficit) <= previous + 1e-9);
    previous = std::abs(r.deficit);
    CHECK(r.metadata.count("allowance") == 1);
  }

  // F dmu = N(0, 1/4): KL = (1/4 - 1 - log(1/4)) / 2.
  const ScalarField narrow = [](const Vec& x) { return 2.0 * std::exp(-1.5 * x[0] * x[0]); };
  const DeficitReport r = check_transport(G, narrow, rule, 128);
  CHECK(r.rhs == doctest::Approx(0.5 * (0.25 - 1.0 + std::log(4.0))).epsilon(1e-6));
  CHECK(r.lhs < r.rhs);
  CHECK(r.pass);

  CHECK_THROWS_AS(check_transport(G, [](const Vec&) { return 2.0; }, rule, 16), InvalidArgument);
  CHECK_THROWS_AS(check_transport(G, [](const Vec& x) { return x[0]; }, rule, 16), InvalidArgument);
}
