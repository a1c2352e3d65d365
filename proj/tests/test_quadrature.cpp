#include <doctest.h>

#include <mlsi/quadrature.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mlsi;

TEST_CASE("truncation radii") {
  // Oracle: the standard normal tail beyond 6.5 is below 1e-10.
  CHECK(0.5 * std::erfc(6.5 / std::sqrt(2.0)) < 1e-10);
  const Box g = truncation_box(make_gaussian(1), 1e-10);
  CHECK(g.upper[0] >= 6.0);
  CHECK(g.upper[0] <= 9.0);
  CHECK(g.lower[0] == -g.upper[0]);

  const Box q = truncation_box(make_power(1, 4.0), 1e-10);
  CHECK(q.upper[0] >= 3.0);
  CHECK(q.upper[0] <= 6.0);

  const Box g2 = truncation_box(make_power(2, 2.0), 1e-10);
  const Box g1 = truncation_box(make_power(1, 2.0), 1e-10);
  CHECK(std::abs(g2.upper[0] - g1.upper[0]) <= 1.0);
  CHECK(std::abs(g2.upper[1] - g1.upper[0]) <= 1.0);

  CHECK_THROWS_AS(truncation_box(make_gaussian(1), 1e-3), InvalidArgument);
  CHECK_THROWS_AS(truncation_box(make_gaussian(1), 0.0), InvalidArgument);
  const Potential flat = make_custom_potential(1, [](const Vec& x) { return 0.001 * std::abs(x[0]); }, "flat");
  CHECK_THROWS_AS(truncation_box(flat, 1e-10), NumericalError);
}

TEST_CASE("integrate basic values") {
  const QuadratureRule unit = make_rule(make_box(vec1(0.0), vec1(1.0)), 11);
  CHECK(integrate([](const Vec&) { return 1.0; }, unit) == doctest::Approx(1.0).epsilon(1e-12));

  const Box box = truncation_box(make_gaussian(1), 1e-10);
  const QuadratureRule rule = make_rule(box, default_resolution(1));
  const auto density = [](const Vec& x) { return std::exp(-0.5 * x[0] * x[0]) / std::sqrt(2.0 * std::numbers::pi); };
  CHECK(std::abs(integrate(density, rule) - 1.0) <= 1e-8);
  CHECK(std::abs(integrate([&](const Vec& x) { return x[0] * x[0] * density(x); }, rule) - 1.0) <= 1e-6);

  CHECK_THROWS_WITH_AS(integrate([](const Vec& x) { return 1.0 / x[0]; }, rule),
                       doctest::Contains("at node (0)"), NumericalError);
}

TEST_CASE("rule invariants") {
  const QuadratureRule rule = make_rule(make_box(vec2(-1.0, 0.0), vec2(2.0, 0.5)), 31);
  double total = 0.0;
  for (double w : rule.weights()) {
    CHECK(w > 0.0);
    total += w;
  }
  CHECK(total == doctest::Approx(rule.box().volume()).epsilon(1e-12));
  for (std::size_t i = 0; i < rule.size(); ++i) CHECK(rule.box().contains(rule.node(i)));
  CHECK(rule.coarsened().resolution()[0] == 16);
  CHECK(rule.refined().resolution()[1] == 61);

  std::ostringstream csv;
  make_rule(make_box(vec1(0.0), vec1(1.0)), 3).write_csv(csv);
  CHECK(csv.str() == "x1,weight\n0,0.25\n0.5,0.5\n1,0.25\n");
}

TEST_CASE("normalization") {
  const Potential g = make_gaussian(1);
  const QuadratureRule rg = make_rule(truncation_box(g, 1e-10), 2001);
  CHECK(std::abs(log_partition(g, rg)) <= 1e-8);

  const Potential p2 = make_power(1, 2.0);
  const QuadratureRule r2 = make_rule(truncation_box(p2, 1e-10), 2001);
  CHECK(std::abs(std::exp(log_partition(p2, r2)) - std::sqrt(2.0 * std::numbers::pi)) <= 1e-6);
  const Potential n2 = normalize(p2, r2);
  CHECK(integrate([&](const Vec& x) { return std::exp(-n2.eval(x)); }, r2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(n2.log_partition == doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi)));
  // Conjugate shifts with the constant.
  CHECK(n2.conjugate(vec1(0.0)) == doctest::Approx(-n2.log_partition));

  // Oracle: Z = 2^{-1/2} Gamma(1/4) for x^4/4.
  const Potential p4 = make_power(1, 4.0);
  const QuadratureRule r4 = make_rule(truncation_box(p4, 1e-10), 2001);
  const double oracle = std::tgamma(0.25) / std::sqrt(2.0);
  CHECK(oracle == doctest::Approx(2.5637).epsilon(1e-4));
  CHECK(std::abs(std::exp(log_partition(p4, r4)) - oracle) <= 1e-4);

  const Potential concave = make_custom_potential(1, [](const Vec& x) { return -1e3 * x[0] * x[0]; }, "bad");
  CHECK_THROWS_AS(normalize(concave, make_rule(symmetric_box(1, 30.0), 101)), NumericalError);
}

TEST_CASE("refinement convergence and tail robustness") {
  for (const Potential& P : {make_gaussian(1), make_power(1, 3.0), make_powerlog(1, 3.0, 1.0)}) {
    const Box box = truncation_box(P, 1e-10);
    const QuadratureRule rule = make_rule(box, 2001);
    const Potential N = normalize(P, rule);
    const auto second = [&](const Vec& x) { return x[0] * x[0] * std::exp(-N.eval(x)); };
    const double base = integrate(second, rule);
    CHECK(std::abs(integrate(second, rule.refined()) - base) <= 1e-7 * std::max(1.0, base));
    const QuadratureRule wide(box.padded(2.0), {2401});
    CHECK(std::abs(integrate(second, wide) - base) <= 1e-6 * std::max(1.0, base));
  }
}

TEST_CASE("reflection symmetry is exact on symmetric rules") {
  const QuadratureRule rule = make_rule(symmetric_box(1, 5.0), 1001);
  const auto even = [](const Vec& x) { return std::cos(x[0]) * std::exp(-x[0] * x[0]); };
  const auto reflected = [&](const Vec& x) { return even(-x); };
  CHECK(integrate(even, rule) == integrate(reflected, rule));
}

TEST_CASE("compensated summation is order-fixed and accurate") {
  std::vector<double> terms = {1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(terms) == 2.0);
}
