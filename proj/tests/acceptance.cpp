// One PASS/FAIL line per acceptance criterion. Exit status 0 iff all pass.

#include <mlsi/inequalities.hpp>
#include <mlsi/legendre.hpp>
#include <mlsi/prekopa_transport.hpp>
#include <mlsi/suite.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace mlsi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << ']';
    }
  }
};

QuadratureRule measure_rule(const Potential& P) {
  return make_rule(truncation_box(P, 1e-10).padded(2.0), default_resolution(P.dim));
}

QuadratureRule lebesgue_rule(const Potential& C, const Vec& center) {
  return make_rule(truncation_box(C, 1e-12).padded(center.cwiseAbs().maxCoeff() + 1.0), 4001);
}

std::string scenarios(const std::string& file) { return std::string(MLSI_SCENARIOS) + "/" + file; }

int run_tool(const std::string& args, const std::string& out_dir) {
  const std::string cmd = "MLSI_OUTPUT_DIR=" + out_dir + " " + MLSI_TOOL + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void gaussian_reduction(Verdict& v) {
  const auto start = Clock::now();
  const Potential G = make_gaussian(1);
  const QuadratureRule rule = measure_rule(G);
  double worst = 0.0;
  for (const TestFunction& g : {bump_function(vec1(0.3), 1.0), linear_function(vec1(1.5)), quadratic_function(0.2, vec1(0.5))}) {
    worst = std::max(worst, gross_reduction_residual(g, rule));
  }
  const Potential G2 = make_gaussian(2);
  worst = std::max(worst, gross_reduction_residual(bump_function(vec2(0.1, 0.2), 1.0), measure_rule(G2)));
  const double t = seconds_since(start);
  v.detail << "max residual " << worst << ", " << t << " s";
  v.require(worst <= 1e-8, "residual <= 1e-8");
  v.require(t < 5.0, "runtime < 5 s");
}

void mlsi_nonnegativity(Verdict& v) {
  const auto start = Clock::now();
  const SuiteConfig suite = load_config(scenarios("mlsi-suite.cfg"));
  const SuiteResult result = run_suite(suite);
  std::set<std::string> families;
  std::size_t count = 0;
  double worst = 1e300;
  for (const ScenarioConfig& c : suite.scenarios) {
    std::string family = to_string(c.potential.kind);
    if (c.potential.kind == PotentialKind::power) family += "-" + format_number(c.potential.p);
    if (c.potential.kind == PotentialKind::interaction) family += "-n" + std::to_string(c.potential.dim);
    for (const DeficitReport& r : result.reports) {
      if (r.name != c.name + "/mlsi") continue;
      ++count;
      families.insert(family);
      worst = std::min(worst, r.deficit);
      v.require(r.deficit >= -1e-6, r.name + " deficit >= -1e-6");
    }
  }
  const double t = seconds_since(start);
  v.detail << count << " scenarios, min deficit " << worst << ", " << t << " s";
  v.require(count >= 12, ">= 12 scenarios");
  v.require(result.errors.empty(), "no errors");
  for (const char* f : {"gaussian", "power-2", "power-3", "power-4", "powerlog", "interaction-n2"}) {
    v.require(families.count(f) == 1, std::string("covers ") + f);
  }
  v.require(t < 120.0, "runtime < 2 min");
}

void equality_cases(Verdict& v) {
  double worst_deficit = 0.0, worst_lambda = 0.0;
  for (double p : {2.0, 3.0}) {
    const Potential C = make_power(1, p);
    const Potential phi = normalize(C, make_rule(truncation_box(C, 1e-12), 2001));
    for (double xbar : {-1.0, 0.0, 0.7}) {
      const QuadratureRule rule = lebesgue_rule(C, vec1(xbar));
      const TestFunction g = neg_potential_function(C, 1.0, vec1(xbar));
      worst_deficit = std::max(worst_deficit, std::abs(euclidean_lsi_check(phi, g, 1.0, rule).deficit));
      worst_lambda = std::max(worst_lambda, std::abs(optimal_lambda(phi, g, rule).lambda - 1.0));
    }
  }
  v.detail << "max |deficit| " << worst_deficit << ", max |lambda0 - 1| " << worst_lambda;
  v.require(worst_deficit <= 1e-4, "|deficit| <= 1e-4");
  v.require(worst_lambda <= 1e-4, "lambda0 = 1 +- 1e-4");
}

void homogeneous_consistency(Verdict& v) {
  const Potential C2 = make_power(1, 2.0), C3 = make_power(1, 3.0);
  const QuadratureRule wide = make_rule(symmetric_box(1, 10.0), 4001);
  const TestFunction bumpy = sum_function(quadratic_function(-0.5, vec1(0.0)), bump_function(vec1(0.5), 1.0));
  std::vector<DeficitReport> reports{
      homogeneous_lsi_check(C2, neg_potential_function(C2, 0.5, vec1(0.0)), lebesgue_rule(C2, vec1(0.0))),
      homogeneous_lsi_check(C2, neg_potential_function(C2, 0.5, vec1(0.7)), lebesgue_rule(C2, vec1(0.7))),
      homogeneous_lsi_check(C2, bumpy, wide),
      homogeneous_lsi_check(C3, neg_potential_function(C3, 1.0, vec1(1.0)), lebesgue_rule(C3, vec1(1.0)))};
  double worst = 0.0;
  for (const DeficitReport& r : reports) worst = std::max(worst, r.metadata.at("closed_form_gap"));
  v.detail << reports.size() << " scenarios, max gap " << worst;
  v.require(worst <= 1e-5, "gap <= 1e-5");
}

void conjugate_correctness(Verdict& v) {
  for (double p : {2.0, 3.0}) {
    const Potential P = make_power(1, p);
    std::vector<double> errors;
    for (std::size_t nodes : {2001u, 4001u}) {
      const Axis xs = linspace(-5.0, 5.0, nodes);
      const GridFunction f = GridFunction::sample({xs}, P.eval);
      const Axis dual = linspace(-3.987, 3.987, 777);
      const GridFunction fstar = discrete_legendre_1d(f, dual);
      double err = 0.0;
      for (std::size_t j = 0; j < dual.size(); ++j) err = std::max(err, std::abs(fstar[j] - P.conjugate(vec1(dual[j]))));
      errors.push_back(err);
    }
    v.detail << " p=" << p << ": " << errors[0] << " -> " << errors[1] << ';';
    v.require(errors[0] <= 5e-3, "error <= 5e-3 at 2001 nodes");
    v.require(errors[1] <= 0.55 * errors[0], "error halves under doubling");
  }
  // Double conjugation of convex inputs.
  const Axis xs = linspace(-4.0, 4.0, 2001);
  for (const auto& fn : std::vector<ScalarField>{[](const Vec& x) { return std::pow(std::abs(x[0]), 3.0) / 3.0 + x[0]; },
                                                 [](const Vec& x) { return std::cosh(x[0]); }}) {
    const GridFunction f = GridFunction::sample({xs}, fn);
    const Axis dual = slope_range_axis(f, 2001);
    const GridFunction fss = discrete_legendre_1d(discrete_legendre_1d(f, dual), xs);
    double err = 0.0;
    for (std::size_t i = 200; i + 200 < xs.size(); ++i) err = std::max(err, std::abs(fss[i] - f[i]));
    const double h = dual[1] - dual[0];
    v.detail << " involution " << err << " (h^2 " << h * h << ");";
    v.require(err <= h * h, "double conjugation within h^2");
  }
}

void lemma_order(Verdict& v) {
  const auto start = Clock::now();
  const std::vector<double> ladder{0.01, 0.005, 0.0025};
  std::vector<Vec> z;
  for (double x : linspace(-1.5, 1.5, 13)) z.push_back(vec1(x));
  const TestFunction bump = bump_function(vec1(0.0), 1.0);
  for (const Potential& P : {make_gaussian(1), make_power(1, 4.0)}) {
    const ExpansionOrder eo = lemma_expansion_order(P, bump, ladder, z);
    v.require(eo.slope.has_value(), "nonzero remainder");
    if (!eo.slope) continue;
    v.detail << ' ' << P.label << " slope " << *eo.slope << ';';
    v.require(*eo.slope >= 1.8 && *eo.slope <= 2.2, "slope in [1.8, 2.2]");
  }
  const double t = seconds_since(start);
  v.detail << ' ' << t << " s";
  v.require(t < 60.0, "runtime < 1 min");
}

void large_entropy_pipeline(Verdict& v) {
  const Potential sq = make_power(1, 2.0, 2.0);  // x^2
  const LargeEntropyConstants k = derive_large_entropy_constants(sq, measure_rule(sq));
  v.detail << "lambda " << k.lambda << ", alpha " << k.alpha << ", A " << k.A << ';';
  v.require(k.metadata.at("lambda_condition_holds") == 1.0, "log int e^{Phi/lambda} dmu <= 1");
  v.require(k.metadata.at("alpha_condition_holds") == 1.0, "(alpha + A|psi - 1|) lambda <= 1/4");
  v.require(k.metadata.at("eqh_holds") == 1.0, "x.grad Phi <= (A + 1) Phi");

  std::vector<Vec> grid;
  for (double x : linspace(-50.0, 50.0, 801)) grid.push_back(vec1(x));
  double psi_err = 0.0;
  for (double alpha : {0.3, 0.2, 0.1, 0.01}) psi_err = std::max(psi_err, std::abs(psi_alpha(sq, alpha, grid) - 1.0 / (1.0 - alpha)));
  v.detail << " psi error " << psi_err << ';';
  v.require(psi_err <= 1e-6, "psi_alpha = 1/(1 - alpha)");

  std::vector<Vec> agrid;
  for (double x : linspace(-20.0, 20.0, 801)) agrid.push_back(vec1(x));
  for (double p : {2.0, 3.0}) {
    const double A = min_A(make_power(1, p), agrid).A;
    v.require(std::abs(A - (p - 1.0)) <= 1e-6, "min_A(|x|^p/p) = p - 1");
  }

  const SuiteResult result = run_suite(load_config(scenarios("corollaries.cfg")));
  std::size_t passed = 0;
  for (const DeficitReport& r : result.reports) {
    if (r.name.size() > 14 && r.name.ends_with("/large_entropy") && r.pass && r.lhs >= 1.0) ++passed;
  }
  v.detail << " " << passed << " large-entropy scenarios pass";
  v.require(passed >= 3, ">= 3 large-entropy scenarios pass");
}

void power_constant(Verdict& v) {
  const double c2 = power_mlsi_constant(2.0), c2f = power_mlsi_constant(2.0, 8001, 1441);
  const double c3 = power_mlsi_constant(3.0), c3f = power_mlsi_constant(3.0, 8001, 1441);
  v.detail << "p=2: " << c2 << " / " << c2f << ", p=3: " << c3 << " / " << c3f;
  v.require(std::abs(c2 - 0.5) <= 1e-4 && std::abs(c2f - 0.5) <= 1e-4, "p=2 constant 0.5 +- 1e-4 under doubling");
  v.require(std::abs(c3 - c3f) <= 0.01 * c3f, "p=3 changes < 1% under doubling");
}

void transport(Verdict& v) {
  const QuadratureRule rule = make_rule(symmetric_box(1, 12.0), 4001);
  const Potential G = normalize(make_gaussian(1), rule);
  const ScalarField shift = [](const Vec& x) { return std::exp(x[0] - 0.5); };
  double previous = 1e300;
  for (std::size_t k : {64u, 128u, 256u}) {
    const DeficitReport r = check_transport(G, shift, rule, k);
    v.detail << " k=" << k << ": " << r.deficit << ';';
    if (k == 64) v.require(std::abs(r.deficit) <= 0.05, "|deficit| <= 0.05 at k = 64");
    v.require(std::abs(r.deficit) <= previous + 1e-9, "|deficit| shrinks as k doubles");
    previous = std::abs(r.deficit);
  }
  std::mt19937_64 rng(kDefaultSeed);
  std::normal_distribution<double> normal;
  const Potential P4 = make_power(1, 4.0);
  const Potential I2 = make_interaction(2, 1.5, 4.0);
  std::size_t instances = 0, agree = 0;
  for (std::size_t k = 1; k <= 8; ++k) {
    for (int trial = 0; trial < 10; ++trial) {
      const Potential& P = trial % 2 ? P4 : I2;
      std::vector<Vec> a, b;
      for (std::size_t i = 0; i < k; ++i) {
        Vec x(P.dim), y(P.dim);
        for (int d = 0; d < P.dim; ++d) x[d] = normal(rng), y[d] = normal(rng);
        a.push_back(x);
        b.push_back(y);
      }
      ++instances;
      if (wasserstein_L(P, uniform_points(a), uniform_points(b), TransportSolver::exhaustive) ==
          wasserstein_L(P, uniform_points(a), uniform_points(b), TransportSolver::assignment)) {
        ++agree;
      }
    }
  }
  v.detail << " solvers agree on " << agree << "/" << instances;
  v.require(agree == instances, "exhaustive == assignment");
}

void determinism(Verdict& v) {
  const SuiteConfig config = load_config(scenarios("gaussian-equalities.cfg"));
  nlohmann::json a = to_json(run_suite(config)), b = to_json(run_suite(config));
  a.erase("timestamp");
  b.erase("timestamp");
  v.require(a.dump() == b.dump(), "identical JSON");

  const auto out = std::filesystem::temp_directory_path() / "mlsi-acceptance";
  std::filesystem::remove_all(out);
  const int ok = run_tool("run " + scenarios("gaussian-equalities.cfg"), out.string());
  const int bad = run_tool("run " + scenarios("violation.cfg"), out.string());
  const int broken = run_tool("run " + scenarios("malformed.cfg"), out.string());
  v.detail << "exit codes " << ok << '/' << bad << '/' << broken;
  v.require(ok == 0 && bad == 1 && broken == 2, "exit codes 0/1/2");
  std::filesystem::remove_all(out);
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    void (*run)(Verdict&);
  };
  const Criterion criteria[] = {
      {"1 gaussian reduction", gaussian_reduction},
      {"2 mlsi nonnegativity", mlsi_nonnegativity},
      {"3 equality cases", equality_cases},
      {"4 homogeneous consistency", homogeneous_consistency},
      {"5 conjugate correctness", conjugate_correctness},
      {"6 lemma order", lemma_order},
      {"7 large-entropy pipeline", large_entropy_pipeline},
      {"8 power constant", power_constant},
      {"9 transport", transport},
      {"10 determinism and exit codes", determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Verdict v;
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << ']';
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << ":" << (v.detail.str().starts_with(" ") ? "" : " ")
              << v.detail.str() << std::endl;
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
