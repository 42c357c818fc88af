// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 when every failing
// criterion is one of the documented conflicts listed in the README.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "gz/curvature.hpp"
#include "gz/errors.hpp"
#include "gz/fpe.hpp"

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double rel(double a, double b) { return std::fabs(a - b) / std::max(1e-300, std::fabs(b)); }

const gz::GridSpec se2_box{{-0.1, -0.1, -0.1}, {0.1, 0.1, 0.1}, {11, 11, 11}};

gz::CurvatureOptions generalized_with_drift() {
  gz::CurvatureOptions o;
  o.mode = gz::Mode::generalized;
  o.drift = true;
  return o;
}

Outcome se2_bound() {
  const gz::Structure s = gz::builtin("se2", {{"beta", 0.1}});
  const auto r = gz::kappa_at(s, std::vector<double>{0, 0, 0}, generalized_with_drift());
  Eigen::Matrix3d want;
  want << 0.99, -0.05, 0, -0.05, 0.99, -0.05, 0, -0.05, 0.5;
  const double entry = (r.A - want).cwiseAbs().maxCoeff();
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.A).eigenvalues()(0);
  // The band is closed; 1e-12 absorbs rounding at its upper edge.
  const bool lmin_ok = std::fabs(lmin - 0.495) <= 0.005 + 1e-12;
  return {entry <= 1e-12 && lmin_ok,
          "lambda_min(A)=" + fmt("%.15g", lmin) + (lmin_ok ? " in band" : " OUT of band") +
              ", max entry deviation " + fmt("%.3g", entry) + ", A diag (" +
              fmt("%.6g", r.A(0, 0)) + ", " + fmt("%.6g", r.A(1, 1)) + ", " +
              fmt("%.6g", r.A(2, 2)) + "), Lambda residual " + fmt("%.2g", r.lambda_residual)};
}

Outcome grushin_closed_form() {
  double worst = 0.0;
  gz::CurvatureOptions opt;
  for (int k = 1; k <= 3; ++k) {
    const gz::Structure s = gz::builtin("grushin", {{"k", static_cast<double>(k)}});
    for (double x : {0.5, 1.0, 2.0}) {
      const std::vector<double> p{x, 0.3};
      const gz::AssembledPoint ap = gz::assemble(s, p);
      const Eigen::MatrixXd R = gz::ricci_a(ap, gz::solve_lambda(ap, gz::Mode::horizontal)).M;
      const double r00 = -k * k / (x * x);
      const double r11 = -(2.0 * k * k + k) * std::pow(x, 2 * k - 2);
      worst = std::max({worst, rel(R(0, 0), r00), rel(R(1, 1), r11),
                        std::fabs(R(0, 1)) / std::fabs(r00)});
      worst = std::max(worst, rel(gz::kappa_at(s, p, opt).kappa, -(2.0 * k * k + k) / (x * x)));
    }
  }
  return {worst <= 1e-10, "worst relative error " + fmt("%.3g", worst) + " over 9 (k, x) pairs"};
}

Outcome decomposition_identity() {
  struct Case {
    const char* name;
    std::map<std::string, double> params;
    gz::Mode mode;
    bool drift;
  };
  // The Λ equation of each example is solvable in the listed mode only; see the README.
  const std::vector<Case> cases{
      {"euclidean", {}, gz::Mode::horizontal, false},
      {"heisenberg", {}, gz::Mode::z_plain, false},
      {"su2", {}, gz::Mode::generalized, false},
      {"grushin", {{"k", 2}}, gz::Mode::horizontal, false},
      {"langevin_const", {}, gz::Mode::generalized, true},
      {"se2", {{"beta", 0.1}}, gz::Mode::generalized, true},
      {"conformal2d", {}, gz::Mode::horizontal, true},
  };
  std::mt19937_64 rng(20241016);
  double worst_dec = 0.0, worst_lam = 0.0;
  std::string worst_name;
  int count = 0;
  for (const auto& cs : cases) {
    const gz::Structure s = gz::builtin(cs.name, cs.params);
    gz::DecompositionOptions opt;
    opt.mode = cs.mode;
    opt.drift = cs.drift;
    for (const auto& x : gz::sample_points(s, 10, 7)) {
      const gz::GammaContext ctx(s, x);
      const gz::AssembledPoint ap = gz::assemble(s, x);
      const gz::LambdaSolution lam = gz::solve_lambda(ap, cs.mode);
      worst_lam = std::max(worst_lam, gz::lambda_residual(ap, lam));
      for (int t = 0; t < 100; ++t) {
        const auto f = ctx.jet(gz::random_polynomial(s.variables, 4, rng));
        const double r = gz::decomposition_residual(ctx, ap, lam, f, opt).residual;
        if (r > worst_dec) {
          worst_dec = r;
          worst_name = cs.name;
        }
        ++count;
      }
    }
  }
  return {worst_dec <= 1e-8 && worst_lam <= 1e-8,
          std::to_string(count) + " evaluations, worst decomposition residual " +
              fmt("%.3g", worst_dec) + " (" + worst_name + "), worst Lambda residual " +
              fmt("%.3g", worst_lam)};
}

Outcome langevin_drift_tensor() {
  double worst = 0.0, worst_half = 0.0;
  for (auto [gamma, u] : {std::pair{1.0, 1.0}, std::pair{0.7, 1.3}}) {
    const gz::Structure s = gz::builtin("langevin_const", {{"gamma", gamma}, {"u", u}});
    const gz::AssembledPoint ap = gz::assemble(s, std::vector<double>{0.4, -0.3});
    const gz::QuadraticForm R = gz::drift_correction(ap, false);
    const double gu = gamma * u;
    const std::vector<Eigen::Vector2d> basis{{1, 0}, {0, 1}, {1, 1}, {1, -2}};
    for (const auto& g : basis) {
      const double stated = 8 * gu * gu * g(1) * g(1) - 8 * gu * g(0) * g(1);
      worst = std::max(worst, std::fabs(R(g) - stated));
      worst_half = std::max(worst_half, std::fabs(R(g) - 0.5 * stated));
    }
  }
  return {worst <= 1e-12, "max |R - (8g^2u^2 fv^2 - 8gu fx fv)| = " + fmt("%.3g", worst) +
                              "; against half of it: " + fmt("%.3g", worst_half)};
}

Outcome invariant_measures() {
  const gz::Structure su2 = gz::builtin("su2");
  const gz::Structure lang = gz::builtin("langevin_const");
  const double r_su2 = gz::invariant_measure_residual(su2, gz::sample_points(su2, 100, 5));
  // Langevin is not reversible: e^{-V} is stationary without the symmetric defect vanishing.
  const double r_lang = gz::stationary_residual(lang, gz::sample_points(lang, 100, 5));
  return {r_su2 <= 1e-10 && r_lang <= 1e-10, "su2 symmetric residual " + fmt("%.3g", r_su2) +
                                                  ", langevin_const stationary residual " +
                                                  fmt("%.3g", r_lang)};
}

Outcome fisher_decay() {
  const std::map<std::string, double> p{{"harmonic", 1}, {"z1", 1.6}, {"z2", 0.8}};
  const gz::Structure s = gz::builtin("langevin_const", p);
  // The density relaxes under the time-reversed generator, so κ is read off its dual.
  gz::Structure dual = s;
  dual.dual_drift = true;
  double kappa = std::numeric_limits<double>::infinity();
  for (const auto& x : gz::sample_points(dual, 10, 3))
    kappa = std::min(kappa, gz::kappa_at(dual, x, generalized_with_drift()).kappa);
  if (!(kappa > 0)) return {false, "kappa " + fmt("%.6g", kappa) + " is not positive"};

  const gz::FokkerPlanck op(s, gz::Grid::make({-6, -6}, {6, 6}, {64, 64}));
  const auto rho0 =
      gz::density_from_log(op.grid(), gz::parse("-((x-1)^2 + (v+0.5)^2)/2", s.variables));
  const double T = 3.0 / kappa;
  const auto ts = gz::simulate(op, rho0, T, 0.5 * op.cfl_limit(), 20);
  if (ts.aborted) return {false, "simulation aborted: " + ts.error};

  std::size_t i0 = 0;
  while (i0 < ts.t.size() && ts.t[i0] < 0.1 * T) ++i0;
  const double t0 = ts.t[i0], I0 = ts.samples[i0].fisher_az;
  double worst = 0.0;
  for (std::size_t i = i0; i < ts.t.size(); ++i)
    worst = std::max(worst, ts.samples[i].fisher_az / (I0 * std::exp(-2 * kappa * (ts.t[i] - t0))));
  const double rate = gz::fit_decay(ts, gz::SeriesField::fisher_az);
  return {worst <= 1.05 && rate >= 1.6 * kappa,
          "kappa " + fmt("%.6g", kappa) + ", worst I/bound " + fmt("%.4f", worst) +
              ", fitted rate " + fmt("%.4f", rate) + " vs 1.6 kappa " + fmt("%.4f", 1.6 * kappa)};
}

Outcome zlsi() {
  const gz::Structure s = gz::builtin("se2", {{"beta", 0.1}});
  const double kappa = gz::scan(s, se2_box, generalized_with_drift(), 0, 1).min_kappa;
  const gz::FokkerPlanck op(s, gz::Grid::make({-0.1, -0.1, -0.1}, {0.1, 0.1, 0.1}, {16, 16, 16},
                                              false));
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> amp(-1.5, 1.5), freq(5.0, 30.0), phase(0.0, 6.28);
  double worst = std::numeric_limits<double>::infinity();
  int held = 0;
  for (int i = 0; i < 20; ++i) {
    std::string log_rho = fmt("%.17g", amp(rng)) + "*theta*x*100";
    for (const char* v : {"theta", "x", "y"})
      log_rho += " + " + fmt("%.17g", amp(rng)) + "*sin(" + fmt("%.17g", freq(rng)) + "*" + v +
                 " + " + fmt("%.17g", phase(rng)) + ")";
    const auto rho = gz::density_from_log(op.grid(), gz::parse(log_rho, s.variables));
    const auto r = gz::check_zlsi(op, rho, kappa);
    worst = std::min(worst, r.rhs - r.lhs);
    if (r.applicable && r.holds) ++held;
  }
  return {worst >= -1e-6 && held == 20, "kappa " + fmt("%.6g", kappa) + ", " +
                                            std::to_string(held) + "/20 hold, worst margin " +
                                            fmt("%.4g", worst)};
}

Outcome weak_identity() {
  const gz::Structure s = gz::builtin("heisenberg");
  // On this group the left integrand vanishes pointwise, so the check is that the
  // divergence quadrature on the right converges to zero at second order.
  const auto h = gz::parse("0.5*sin(x1) + 0.3*cos(x2) + 0.2*x3 + 0.1*x1*x2", s.variables);
  const auto lr = gz::parse("-(x1^2 + x2^2 + x3^2)/(2*0.49)", s.variables);
  const auto coarse = gz::weak_identity_check(s, h, lr, gz::Grid::make({-4, -4, -4}, {4, 4, 4}, {32, 32, 32}));
  const auto fine = gz::weak_identity_check(s, h, lr, gz::Grid::make({-4, -4, -4}, {4, 4, 4}, {64, 64, 64}));
  const double order = std::log2(coarse.gap / fine.gap);
  return {fine.gap <= 1e-3 && order >= 1.8,
          "gap " + fmt("%.3g", fine.gap) + " at 64^3, order " + fmt("%.3f", order) + ", lhs " +
              fmt("%.3g", fine.lhs) + ", rhs " + fmt("%.3g", fine.rhs)};
}

Outcome jet_correctness() {
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  const std::vector<std::string> v{"x", "y", "z"};
  int bad = 0;
  oracle::JetErrors worst;
  for (int i = 0; i < 1000; ++i) {
    const auto e = gz::parse(oracle::random_expression(rng, v, 5), v);
    const auto err = oracle::jet_vs_differences(e, {coord(rng), coord(rng), coord(rng)});
    worst.order1 = std::max(worst.order1, err.order1);
    worst.order2 = std::max(worst.order2, err.order2);
    worst.order3 = std::max(worst.order3, err.order3);
    if (err.order1 > gz::JetTolerance::order1 || err.order2 > gz::JetTolerance::order2 ||
        err.order3 > gz::JetTolerance::order3)
      ++bad;
  }
  return {bad == 0, std::to_string(1000 - bad) + "/1000 within tolerance, worst errors " +
                        fmt("%.2g", worst.order1) + " / " + fmt("%.2g", worst.order2) + " / " +
                        fmt("%.2g", worst.order3)};
}

Outcome coordinate_equivariance() {
  const double c = std::cos(0.7), sn = std::sin(0.7);
  const std::vector<std::vector<double>> R{{c, -sn}, {sn, c}};
  std::mt19937_64 rng(10);
  double worst_kappa = 0.0, worst_res = 0.0;
  struct Case {
    const char* name;
    gz::Mode mode;
    bool drift;
  };
  for (const Case& cs : {Case{"langevin_const", gz::Mode::generalized, true},
                         Case{"euclidean", gz::Mode::horizontal, false}}) {
    const gz::Structure s = gz::builtin(cs.name);
    const gz::Structure t = gz::rotate(s, R);
    const auto& vars = s.variables;
    // f∘R^T in the rotated coordinates.
    const std::vector<gz::Expression> back{
        gz::parse(fmt("%.17g", c) + "*" + vars[0] + " + " + fmt("%.17g", sn) + "*" + vars[1], vars),
        gz::parse(fmt("%.17g", -sn) + "*" + vars[0] + " + " + fmt("%.17g", c) + "*" + vars[1], vars)};
    gz::CurvatureOptions copt;
    copt.mode = cs.mode;
    copt.drift = cs.drift;
    gz::DecompositionOptions dopt;
    dopt.mode = cs.mode;
    dopt.drift = cs.drift;
    for (const auto& x : gz::sample_points(s, 10, 4)) {
      const std::vector<double> y{c * x[0] - sn * x[1], sn * x[0] + c * x[1]};
      worst_kappa = std::max(worst_kappa, std::fabs(gz::kappa_at(s, x, copt).kappa -
                                                    gz::kappa_at(t, y, copt).kappa));
      for (int k = 0; k < 5; ++k) {
        const auto f = gz::random_polynomial(vars, 4, rng);
        const double r1 = gz::decomposition_residual(s, f, x, dopt).residual;
        const double r2 = gz::decomposition_residual(t, f.substitute(back), y, dopt).residual;
        worst_res = std::max(worst_res, std::fabs(r1 - r2));
      }
    }
  }
  return {worst_kappa <= 1e-10 && worst_res <= 1e-10,
          "max kappa change " + fmt("%.3g", worst_kappa) + ", max residual change " +
              fmt("%.3g", worst_res)};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 for none
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  // Conflicts between the stated target values and what the formulas they come from produce.
  const std::set<int> documented{1, 4};

  const std::vector<Criterion> criteria{
      {1, "SE(2) bound at the origin", 1.0, se2_bound},
      {2, "Grushin closed form", 1.0, grushin_closed_form},
      {3, "decomposition identity", 30.0, decomposition_identity},
      {4, "kinetic Langevin drift tensor", 0.0, langevin_drift_tensor},
      {5, "invariant-measure identities", 0.0, invariant_measures},
      {6, "Fisher information decay", 60.0, fisher_decay},
      {7, "z-log-Sobolev inequality", 0.0, zlsi},
      {8, "weak commutator identity", 0.0, weak_identity},
      {9, "jet correctness", 0.0, jet_correctness},
      {10, "coordinate equivariance", 0.0, coordinate_equivariance},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      out.pass = false;
      out.detail += "; exceeded " + fmt("%.0f", c.time_limit) + " s";
    }
    const bool known = !out.pass && documented.count(c.id);
    if (!out.pass && !known) ++unexpected;
    std::printf("criterion %2d %s  %s: %s [%.2f s]%s\n", c.id, out.pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), secs, known ? " (documented conflict)" : "");
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
