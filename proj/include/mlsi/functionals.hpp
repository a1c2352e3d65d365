#pragma once

#include <mlsi/legendre.hpp>
#include <mlsi/quadrature.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mlsi {

enum class TestFamily { constant, linear, quadratic, neg_potential, bump, sum, custom };

std::string to_string(TestFamily family);

// Test function g with its gradient. The admissible class is restricted to the
// families below (and finite sums of them); custom functions get a
// central-difference gradient.
struct TestFunction {
  int dim = 1;
  TestFamily family = TestFamily::custom;
  std::string label;
  ScalarField eval;
  VectorField grad;
  std::optional<Box> support;  // set for bumps: g and grad g vanish outside
};

TestFunction constant_function(int dim, double value);
/// a.x + offset
TestFunction linear_function(const Vec& a, double offset = 0.0);
/// coefficient * |x - center|^2
TestFunction quadratic_function(double coefficient, const Vec& center);
/// -b C(x - center)
TestFunction neg_potential_function(const Potential& C, double b, const Vec& center);
/// height * exp(1 - 1 / (1 - |x - center|^2 / radius^2)) inside the ball, 0 outside.
TestFunction bump_function(const Vec& center, double radius, double height = 1.0);
TestFunction sum_function(const TestFunction& first, const TestFunction& second);
TestFunction custom_function(int dim, ScalarField f, std::string label);

TestFunction shifted(const TestFunction& g, double c);
TestFunction scaled(const TestFunction& g, double factor);

// Nodes of a rule together with the weights of the reference measure:
// w_i e^{-phi(x_i)} for mu_phi, or the plain rule weights for dx.
struct WeightedNodes {
  std::vector<Vec> nodes;
  std::vector<double> weights;
  std::vector<char> boundary;
};

WeightedNodes measure_nodes(const Potential& normalized, const QuadratureRule& rule);
WeightedNodes lebesgue_nodes(const QuadratureRule& rule);

enum class Reference { measure, lebesgue };

std::vector<double> evaluate(const TestFunction& g, std::span<const Vec> nodes);

/// sum_i w_i v_i with compensated summation.
double weighted_sum(std::span<const double> values, std::span<const double> weights);

/// Ent(e^g) for values g_i and reference weights.
double entropy_of(std::span<const double> g, std::span<const double> weights);

/// Throws NumericalError unless e^g at boundary nodes is below 1e-6 of its
/// maximum over the box (Lebesgue integrals must be resolved by the box).
void require_boundary_decay(std::span<const double> g, const WeightedNodes& nodes);

/// Ent_mu(e^g) = int e^g log e^g dmu - (int e^g dmu) log(int e^g dmu). With
/// Reference::lebesgue the potential is ignored.
double entropy(const TestFunction& g, const Potential& normalized, const QuadratureRule& rule,
               Reference reference = Reference::measure);

double variance(const TestFunction& g, const Potential& normalized, const QuadratureRule& rule);

/// x.grad g(x) - phi*(grad phi(x)) + phi*(grad phi(x) - grad g(x)).
double mlsi_integrand(const Potential& potential, const Conjugate& conjugate, const TestFunction& g, const Vec& x);

/// Conjugate evaluator covering every argument mlsi_integrand needs on `nodes`.
Conjugate mlsi_conjugate(const Potential& potential, const TestFunction& g, std::span<const Vec> nodes);

/// int (e^g log(e^g / a) - e^g + a) dmu, an upper bound of the entropy that is
/// attained at a = int e^g dmu.
double entropy_dual_gap(const TestFunction& g, const Potential& normalized, const QuadratureRule& rule, double a);

}  // namespace mlsi
