#include <doctest.h>

#include <mlsi/inequalities.hpp>

#include <cmath>
#include <numbers>

using namespace mlsi;

namespace {

QuadratureRule measure_rule(const Potential& P) {
  return make_rule(truncation_box(P, 1e-10).padded(2.0), default_resolution(P.dim));
}

// Rule for Lebesgue integrals of g = -C(x - center): the potential's box
// shifted to cover the center.
QuadratureRule lebesgue_rule(const Potential& C, const Vec& center) {
  return make_rule(truncation_box(C, 1e-12).padded(center.cwiseAbs().maxCoeff() + 1.0), 4001);
}

}  // namespace

TEST_CASE("report invariants and JSON round trip") {
  DeficitReport r = make_report("x", 1.0, 0.5, 0.1);
  CHECK(r.deficit == -0.5);
  CHECK_FALSE(r.pass);
  r.metadata["lambda"] = 2.0;
  const auto j = to_json(r);
  CHECK(j.size() == 7);
  const DeficitReport back = report_from_json(j);
  CHECK(back.deficit == r.deficit);
  CHECK(back.metadata.at("lambda") == 2.0);
  CHECK(make_report("y", 1.0, 1.0 - 1e-7, 1e-6).pass);
  CHECK(report_tolerance(0.0, 0.0) == 1e-6);
  CHECK(report_tolerance(1.0, 0.9) == doctest::Approx(1.0));
}

TEST_CASE("check_mlsi examples") {
  const Potential G = make_gaussian(1);
  const QuadratureRule rule = measure_rule(G);
  const DeficitReport lin = check_mlsi(G, linear_function(vec1(1.0)), rule);
  CHECK(lin.lhs == doctest::Approx(0.5 * std::exp(0.5)).epsilon(1e-6));
  CHECK(std::abs(lin.deficit) <= 1e-5);
  const DeficitReport zero = check_mlsi(G, constant_function(1, 0.0), rule);
  CHECK(std::abs(zero.lhs) <= 1e-12);
  CHECK(std::abs(zero.rhs) <= 1e-12);

  const Potential P4raw = make_power(1, 4.0);
  const QuadratureRule r4 = measure_rule(P4raw);
  const Potential P4 = normalize(P4raw, r4);
  const DeficitReport bump = check_mlsi(P4, bump_function(vec1(0.0), 1.0), r4);
  CHECK(bump.deficit >= 0.0);
  CHECK(bump.lhs > 0.0);

  // Translation of the Gaussian equality family.
  for (double a : {0.5, 1.0, 2.0}) CHECK(std::abs(check_mlsi(G, linear_function(vec1(a)), rule).deficit) <= 1e-5 * std::exp(a * a / 2));
}

TEST_CASE("gross reduction residual") {
  const QuadratureRule rule = make_rule(symmetric_box(1, 8.0), 2001);
  CHECK(gross_reduction_residual(linear_function(vec1(1.0)), rule) <= 1e-10);
  CHECK(gross_reduction_residual(quadratic_function(1.0, vec1(0.0)), rule) <= 1e-8);
  CHECK(gross_reduction_residual(bump_function(vec1(0.5), 2.0, 3.0), rule) <= 1e-8);
}

TEST_CASE("brascamp-lieb") {
  const Potential G = make_gaussian(1);
  const QuadratureRule rule = measure_rule(G);
  const DeficitReport lin = check_brascamp_lieb(G, linear_function(vec1(1.0)), rule);
  CHECK(lin.lhs == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(lin.deficit) <= 1e-6);
  // Standard expansion coefficient 1/2 (not 2).
  CHECK(lin.metadata.at("entropy_over_eps2_var[0.025]") == doctest::Approx(0.5).epsilon(1e-3));
  const DeficitReport sq = check_brascamp_lieb(G, quadratic_function(1.0, vec1(0.0)), rule);
  CHECK(sq.lhs == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(sq.rhs == doctest::Approx(4.0).epsilon(1e-5));
  CHECK(std::abs(sq.deficit - 2.0) <= 1e-4);

  const Potential P4raw = make_power(1, 4.0);
  const QuadratureRule r4 = measure_rule(P4raw);
  CHECK_THROWS_WITH_AS(check_brascamp_lieb(normalize(P4raw, r4), linear_function(vec1(1.0)), r4),
                       doctest::Contains("singular Hessian"), NumericalError);
}

TEST_CASE("perturbation") {
  const Potential G = make_gaussian(1);
  const QuadratureRule rule = measure_rule(G);
  const TestFunction g = linear_function(vec1(1.0));
  const DeficitReport base = check_mlsi(G, g, rule);
  const DeficitReport zero = check_perturbation(G, [](const Vec&) { return 0.0; }, g, rule);
  CHECK(zero.lhs == base.lhs);
  CHECK(zero.rhs == base.rhs);
  const DeficitReport constant = check_perturbation(G, [](const Vec&) { return 3.7; }, g, rule);
  CHECK(constant.metadata.at("osc") == 0.0);
  CHECK(constant.lhs == base.lhs);
  CHECK(constant.rhs == base.rhs);

  const DeficitReport wavy = check_perturbation(G, [](const Vec& x) { return 0.5 * std::sin(x[0]); }, g, rule);
  CHECK(wavy.metadata.at("osc") == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(wavy.metadata.at("factor") == doctest::Approx(std::exp(2.0)).epsilon(1e-4));
  CHECK(wavy.metadata.at("density_bound_holds") == 1.0);
  CHECK(wavy.deficit >= 0.0);
}

TEST_CASE("power MLSI constant") {
  CHECK(psi_bar(vec2(1.0, 0.0), vec2(1.0, 0.0), 2.0) == 0.5);
  CHECK(std::abs(power_mlsi_constant(2.0) - 0.5) <= 1e-4);
  CHECK(std::abs(power_mlsi_constant(2.0, 8001, 1441) - 0.5) <= 1e-4);
  const double p3 = power_mlsi_constant(3.0), p3fine = power_mlsi_constant(3.0, 8001, 1441);
  CHECK(std::isfinite(p3));
  CHECK(p3 > 0.0);
  CHECK(std::abs(p3fine - p3) <= 0.01 * p3);
  CHECK_THROWS_AS(power_mlsi_constant(1.5), InvalidArgument);

  // Oracle: psi-bar is the integrand of |x|^p / p divided by |grad g|^q.
  const double p = 3.0, q = 1.5;
  const Potential P = make_power(2, p);
  const Conjugate conj = Conjugate::analytic(P);
  for (const Vec& y : {vec2(0.7, 0.2), vec2(-1.5, 2.0)}) {
    const TestFunction g = linear_function(y);
    for (const Vec& x : {vec2(0.3, -0.4), vec2(2.0, 1.0)}) {
      const double direct = mlsi_integrand(P, conj, g, x) / std::pow(y.norm(), q);
      const Vec z = P.grad(x) / y.norm();
      CHECK(psi_bar(z, y / y.norm(), q) == doctest::Approx(direct).epsilon(1e-12));
      CHECK(direct <= p3fine + 1e-9);
    }
  }
}

TEST_CASE("euclidean LSI equality cases") {
  for (double p : {2.0, 3.0}) {
    const Potential C = p == 2.0 ? make_power(1, 2.0) : make_power(1, 3.0);
    for (double xbar : {-1.0, 0.0, 0.7}) {
      const Vec center = vec1(xbar);
      const QuadratureRule rule = lebesgue_rule(C, center);
      CAPTURE(p);
      CAPTURE(xbar);
      CHECK(equality_case_residual(C, center, rule) <= 1e-4);
      const Potential phi = normalize(C, make_rule(truncation_box(C, 1e-12), 2001));
      const OptimalLambda opt = optimal_lambda(phi, neg_potential_function(C, 1.0, center), rule);
      CHECK(opt.lambda == doctest::Approx(1.0).epsilon(1e-4));
      CHECK(std::abs(opt.residual) <= 1e-8);
    }
  }
  // Strictly suboptimal away from lambda = 1.
  const Potential G = make_gaussian(1);
  const TestFunction g = quadratic_function(-0.5, vec1(0.7));
  const QuadratureRule rule = lebesgue_rule(make_power(1, 2.0), vec1(0.7));
  CHECK(euclidean_lsi_check(G, g, 2.0, rule).deficit > 1e-3);
  CHECK_THROWS_AS(euclidean_lsi_check(G, g, 0.0, rule), InvalidArgument);
}

TEST_CASE("optimal lambda closed form for g = -x^2") {
  const Potential G = make_gaussian(1);
  const QuadratureRule rule = make_rule(symmetric_box(1, 10.0), 4001);
  const TestFunction g = quadratic_function(-1.0, vec1(0.0));
  const OptimalLambda opt = optimal_lambda(G, g, rule);
  // Oracle: rhs(lambda) = -log(lambda e) E + lambda^2 K + const, E = int e^g, K = int |g'|^2 e^g / 2.
  const double E = integrate([&](const Vec& x) { return std::exp(g.eval(x)); }, rule);
  const double K = integrate([&](const Vec& x) { return 0.5 * g.grad(x).squaredNorm() * std::exp(g.eval(x)); }, rule);
  CHECK(opt.lambda == doctest::Approx(std::sqrt(E / (2.0 * K))).epsilon(1e-6));
  CHECK(opt.lambda == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  const double at = euclidean_lsi_rhs(G, g, opt.lambda, rule);
  CHECK(euclidean_lsi_rhs(G, g, 0.9 * opt.lambda, rule) > at);
  CHECK(euclidean_lsi_rhs(G, g, 1.1 * opt.lambda, rule) > at);

  // The deficit profile over a lambda grid is minimized within one step of lambda0.
  double best = 1e300, arg = 0.0;
  for (double l = 0.5; l <= 1.0 + 1e-12; l += 0.01) {
    const double v = euclidean_lsi_rhs(G, g, l, rule);
    if (v < best) best = v, arg = l;
  }
  CHECK(std::abs(arg - opt.lambda) <= 0.01);
  CHECK_THROWS_AS(optimal_lambda(G, constant_function(1, 0.0), make_rule(symmetric_box(1, 1.0), 11)), NumericalError);
}

TEST_CASE("homogeneous LSI") {
  const Potential C2 = make_power(1, 2.0);
  for (double xbar : {0.0, 0.7}) {
    const QuadratureRule rule = lebesgue_rule(C2, vec1(xbar));
    const DeficitReport r = homogeneous_lsi_check(C2, neg_potential_function(C2, 0.5, vec1(xbar)), rule);
    CHECK(std::abs(r.deficit) <= 1e-4);
    CHECK(r.metadata.at("closed_form_gap") <= 1e-5);
  }
  const QuadratureRule wide = make_rule(symmetric_box(1, 10.0), 4001);
  const TestFunction bumpy = sum_function(quadratic_function(-0.5, vec1(0.0)), bump_function(vec1(0.5), 1.0));
  const DeficitReport b = homogeneous_lsi_check(C2, bumpy, wide);
  CHECK(b.deficit >= 0.0);
  CHECK(b.metadata.at("closed_form_gap") <= 1e-6);

  const Potential C3 = make_power(1, 3.0);
  const QuadratureRule r3 = lebesgue_rule(C3, vec1(1.0));
  const DeficitReport r = homogeneous_lsi_check(C3, neg_potential_function(C3, 1.0, vec1(1.0)), r3);
  CHECK(r.metadata.at("p") == doctest::Approx(1.5));
  CHECK(std::abs(r.deficit) <= 1e-3);
  CHECK(r.metadata.at("closed_form_gap") <= 1e-5);

  CHECK_THROWS_AS(homogeneous_lsi_check(make_powerlog(1, 3.0, 1.0), bumpy, wide), InvalidArgument);
  Potential fake = make_powerlog(1, 3.0, 1.0);
  fake.homogeneity_degree = 3.0;
  CHECK_THROWS_WITH_AS(homogeneous_lsi_check(fake, bumpy, wide), doctest::Contains("homogeneous"), InvalidArgument);
}

TEST_CASE("psi(alpha) and min A") {
  const Potential sq = make_power(1, 2.0, 2.0);  // x^2
  CHECK(sq.eval(vec1(3.0)) == doctest::Approx(9.0));
  const auto grid = tensor_points({linspace(-10.0, 10.0, 401)});
  CHECK(psi_alpha(sq, 0.2, grid) == doctest::Approx(1.25).epsilon(1e-9));
  for (double a : {0.3, 0.2, 0.1, 0.01}) CHECK(std::abs(psi_alpha(sq, a, grid) - 1.0 / (1.0 - a)) <= 1e-6);
  double previous = 1e300;
  for (double a : {0.1, 0.01, 0.001}) {
    const double v = psi_alpha(sq, a, grid);
    CHECK(v <= previous);
    CHECK(v >= 1.0);
    previous = v;
  }
  CHECK(psi_alpha(make_power(1, 2.0), 0.1, grid) == doctest::Approx(1.0 / 0.9).epsilon(1e-9));
  CHECK_THROWS_AS(psi_alpha(sq, 0.1, tensor_points({Axis{0.0}})), InvalidArgument);

  for (double p : {2.0, 3.0}) {
    const MinAResult r = min_A(make_power(1, p), grid);
    CHECK(std::abs(r.A - (p - 1.0)) <= 1e-6);
    CHECK(r.bounded);
  }
  CHECK(std::abs(min_A(sq, grid).A - 1.0) <= 1e-6);

  // Powerlog: the sup of x Phi'/Phi sits at the gluing radius, a + b / log 2.
  const MinAResult pl = min_A(make_powerlog(1, 3.0, 1.0), tensor_points({linspace(-40.0, 40.0, 8001)}));
  CHECK(pl.A == doctest::Approx(2.0 + 1.0 / std::log(2.0)).epsilon(1e-9));
  CHECK(pl.bounded);

  const Potential cosh = make_custom_potential(1, [](const Vec& x) { return std::cosh(x[0]) - 1.0; }, "cosh-1", true);
  CHECK_FALSE(min_A(cosh, grid).bounded);
}

TEST_CASE("large-entropy constants for Phi = x^2") {
  const Potential sq = make_power(1, 2.0, 2.0);
  const QuadratureRule rule = measure_rule(sq);
  const LargeEntropyConstants k = derive_large_entropy_constants(sq, rule);
  // Oracle: log int e^{Phi/lambda} dmu = -log(1 - 1/lambda) / 2 <= 1 iff lambda >= 1 / (1 - e^{-2}).
  const double lambda_min = 1.0 / (1.0 - std::exp(-2.0));
  CHECK(k.lambda >= lambda_min);
  CHECK(k.lambda <= lambda_min * std::pow(1000.0 / 1.01, 1.0 / 120.0) + 1e-9);
  CHECK(k.log_integral == doctest::Approx(-0.5 * std::log(1.0 - 1.0 / k.lambda)).epsilon(1e-8));
  CHECK(k.A == doctest::Approx(1.0));
  CHECK(k.product <= 0.25);
  CHECK(k.log_integral <= 1.0);
  // Largest alpha on the default grid with (alpha + alpha / (1 - alpha)) lambda <= 1/4.
  double expected = 0.0;
  for (double a : {0.001, 0.0015, 0.002, 0.003, 0.004, 0.005, 0.0075, 0.01, 0.015, 0.02, 0.03, 0.04, 0.05, 0.075, 0.1,
                   0.15, 0.2, 0.25, 0.3, 0.4, 0.5}) {
    if ((a + a / (1.0 - a)) * k.lambda <= 0.25) expected = a;
  }
  CHECK(k.alpha == expected);
  CHECK(k.C1 == doctest::Approx(4.0 * k.alpha));
  CHECK(k.C2 == doctest::Approx(1.0 / k.alpha));
  CHECK(lambda_condition(sq, 1e3, 2001) == doctest::Approx(0.0).scale(1.0).epsilon(1e-3));

  const Potential cosh = make_custom_potential(1, [](const Vec& x) { return std::cosh(x[0]) - 1.0; }, "cosh-1", true);
  CHECK_THROWS_AS(derive_large_entropy_constants(cosh, measure_rule(cosh)), InfeasibleError);
  CHECK_THROWS_AS(derive_large_entropy_constants(make_gaussian(1), rule), InvalidArgument);

  // Oracle: for mu = N(0, 1/2) and g = 3x, Ent = 9/4.
  const DeficitReport r = check_large_entropy(sq, linear_function(vec1(3.0)), k, rule);
  CHECK(r.lhs == doctest::Approx(2.25).epsilon(1e-6));
  CHECK(r.pass);
  CHECK(r.deficit >= 0.0);
  CHECK_THROWS_AS(check_large_entropy(sq, linear_function(vec1(0.5)), k, rule), OutOfScope);
}

TEST_CASE("large-entropy pipeline on powerlog") {
  const Potential P = make_powerlog(1, 3.0, 0.0);
  const QuadratureRule rule = measure_rule(P);
  const LargeEntropyConstants k = derive_large_entropy_constants(P, rule);
  CHECK(k.A == doctest::Approx(2.0).epsilon(1e-6));
  const DeficitReport r = check_large_entropy(P, linear_function(vec1(4.0)), k, rule);
  CHECK(r.lhs >= 1.0);
  CHECK(r.deficit >= 0.0);
}
