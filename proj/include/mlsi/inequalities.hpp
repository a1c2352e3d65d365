#pragma once

#include <mlsi/functionals.hpp>
#include <mlsi/report.hpp>

#include <vector>

namespace mlsi {

/// Tolerance attached to every report: max(1e-6, 10 |d_N - d_coarse|) where
/// d_coarse is the deficit on the nested rule with half the nodes per axis.
double report_tolerance(double deficit, double coarse_deficit);

// MLSI: Ent(e^g) <= int [x.grad g - phi*(grad phi) + phi*(grad phi - grad g)] e^g dmu.
DeficitReport check_mlsi(const Potential& normalized, const TestFunction& g, const QuadratureRule& rule);

/// Sup over rule nodes of |integrand for the normalized Gaussian - |grad g|^2 / 2|.
double gross_reduction_residual(const TestFunction& g, const QuadratureRule& rule);

/// Var(g) <= int grad g . Hess(phi)^{-1} grad g dmu. Throws NumericalError on a
/// singular Hessian. Metadata records Ent(e^{eps g}) / (eps^2 Var g) per eps.
DeficitReport check_brascamp_lieb(const Potential& normalized, const TestFunction& g, const QuadratureRule& rule,
                                  const std::vector<double>& eps_ladder = {0.1, 0.05, 0.025});

/// Entropy under mu_{phi+U} bounded by e^{2 osc U} times the MLSI integral of
/// phi against mu_{phi+U}. The density bound e^{-osc} <= dmu_{phi+U}/dmu_phi
/// <= e^{osc} is verified on the nodes and recorded.
DeficitReport check_perturbation(const Potential& normalized, const ScalarField& U, const TestFunction& g,
                                 const QuadratureRule& rule);

/// psi-bar(z, e) = z.e |z|^{q-2} - |z|^q / q + |z - e|^q / q: the MLSI integrand
/// of |x|^p / p divided by |grad g|^q, with z = grad phi(x) / |grad g| and
/// e = grad g / |grad g|.
double psi_bar(const Vec& z, const Vec& e, double q);

/// Grid sup of psi-bar over z = r (cos t, sin t), e = (1, 0), by rotation
/// invariance. Radii must be positive, angles in [0, pi]. Rejects p < 2.
double power_mlsi_constant(double p, const std::vector<double>& radii, const std::vector<double>& angles);
/// Default grids: `radii` geometric radii in [1e-4, 1e4], `angles` in [0, pi].
double power_mlsi_constant(double p, std::size_t radii = 4001, std::size_t angles = 721);

// Euclidean LSI for normalized phi:
// Ent_dx(e^g) <= -n log(lambda e) int e^g dx + int phi*(-lambda grad g) e^g dx.
DeficitReport euclidean_lsi_check(const Potential& normalized, const TestFunction& g, double lambda,
                                  const QuadratureRule& rule);

/// Right side of the Euclidean LSI as a function of lambda.
double euclidean_lsi_rhs(const Potential& normalized, const TestFunction& g, double lambda,
                         const QuadratureRule& rule);

struct OptimalLambda {
  double lambda = 0.0;
  double residual = 0.0;  // stationarity residual at lambda
  int iterations = 0;
};

/// Root of -n int e^g dx - lambda int grad g . grad phi*(-lambda grad g) e^g dx
/// on (0, lambda_max] by bisection in log lambda. Needs conjugate_grad.
OptimalLambda optimal_lambda(const Potential& normalized, const TestFunction& g, const QuadratureRule& rule,
                             double lambda_max = 1e3);

/// |deficit| of the Euclidean LSI at lambda = 1 for g = -C(x - center).
double equality_case_residual(const Potential& C, const Vec& center, const QuadratureRule& rule);

/// Closed form for q-homogeneous C:
/// (n/p) int e^g log(p / (n e^{p-1} L^{p/n}) int C*(-grad g) e^g / int e^g), L = int e^{-C}.
/// Metadata "closed_form_gap" compares with the Euclidean LSI minimized over lambda.
DeficitReport homogeneous_lsi_check(const Potential& C, const TestFunction& g, const QuadratureRule& rule);

// Large-entropy LSI.

/// Points of a tensor grid.
std::vector<Vec> tensor_points(const std::vector<Axis>& axes);

/// sup over the grid of (1 - alpha) Phi*(x / (1 - alpha)) / Phi*(x), skipping
/// points with Phi*(x) <= 1e-8. Phi must satisfy Phi >= 0 = Phi(0).
double psi_alpha(const Potential& Phi, double alpha, const std::vector<Vec>& grid);

struct MinAResult {
  double A = 0.0;           // sup of x.grad Phi / Phi - 1 over the grid
  double A_extended = 0.0;  // same over the grid scaled by 2
  bool bounded = true;      // A_extended within 1e-3 relative of A
};

/// Smallest A with x.grad Phi(x) <= (A + 1) Phi(x) on the grid (Phi(x) > 1e-8).
MinAResult min_A(const Potential& Phi, const std::vector<Vec>& grid);

struct LargeEntropyOptions {
  std::vector<double> alpha_grid;   // default: 0.001 .. 0.5
  std::vector<double> lambda_grid;  // default: 1.01 .. 1000
  std::vector<Vec> psi_grid;        // default: tensor grid on [-50, 50]^n
  std::vector<Vec> a_grid;          // default: tensor grid on [-20, 20]^n
  double eqm_tolerance = 5e-2;      // psi at the smallest alpha must be within this of 1
};

struct LargeEntropyConstants {
  double lambda = 0.0;
  double alpha = 0.0;
  double A = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double psi = 0.0;           // psi(alpha)
  double log_integral = 0.0;  // log int e^{Phi/lambda} dmu_Phi, must be <= 1
  double product = 0.0;       // (alpha + A |psi - 1|) lambda, must be <= 1/4
  std::map<std::string, double> metadata;
};

/// log int e^{Phi / lambda} dmu_Phi, each lambda on its own truncation box.
double lambda_condition(const Potential& Phi, double lambda, std::size_t resolution);

/// Grid selection of the proof: smallest feasible lambda, then the largest
/// alpha with (alpha + A |psi(alpha) - 1|) lambda <= 1/4. C1 = 4 alpha,
/// C2 = 1 / alpha. Phi is the raw potential (Phi(0) = 0). Throws InfeasibleError.
LargeEntropyConstants derive_large_entropy_constants(const Potential& Phi, const QuadratureRule& rule,
                                                     LargeEntropyOptions options = {});

/// Ent(e^g) <= C1 int Phi*(C2 grad g) e^g dmu_Phi for g shifted so that
/// int e^g dmu_Phi = 1. Throws OutOfScope when the entropy is below 1.
DeficitReport check_large_entropy(const Potential& Phi, const TestFunction& g, const LargeEntropyConstants& constants,
                                  const QuadratureRule& rule);

}  // namespace mlsi
