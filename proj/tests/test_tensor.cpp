#include <cmath>
#include <random>

#include "doctest.h"

#include "gz/tensor.hpp"

namespace {

struct Solvable {
  std::string name;
  std::map<std::string, double> params;
  gz::Mode mode;
  bool drift;
};

const std::vector<Solvable>& solvable() {
  static const std::vector<Solvable> cases{
      {"euclidean", {}, gz::Mode::horizontal, false},
      {"heisenberg", {}, gz::Mode::z_plain, false},
      {"su2", {}, gz::Mode::generalized, false},
      {"grushin", {{"k", 2}}, gz::Mode::horizontal, false},
      {"langevin_const", {}, gz::Mode::generalized, true},
      {"langevin_var", {}, gz::Mode::generalized, true},
      {"se2", {}, gz::Mode::generalized, true},
      {"conformal2d", {}, gz::Mode::horizontal, true},
  };
  return cases;
}

}  // namespace

TEST_CASE("heisenberg Q at the origin") {
  const gz::Structure s = gz::builtin("heisenberg");
  const gz::AssembledPoint ap = gz::assemble(s, std::vector<double>{0, 0, 0});
  CHECK(ap.Q.rows() == 4);
  CHECK(ap.Q.cols() == 9);
  int ones = 0;
  for (int r = 0; r < ap.Q.rows(); ++r)
    for (int c = 0; c < ap.Q.cols(); ++c) {
      if (ap.Q(r, c) == 1.0) ++ones;
      else CHECK(ap.Q(r, c) == 0.0);
    }
  CHECK(ones == 4);
}

TEST_CASE("Λ solves and the Bochner decomposition closes") {
  std::mt19937_64 rng(123);
  for (const auto& cs : solvable()) {
    const gz::Structure s = gz::builtin(cs.name, cs.params);
    gz::DecompositionOptions opt;
    opt.mode = cs.mode;
    opt.drift = cs.drift;
    for (const auto& x : gz::sample_points(s, 6, 21)) {
      const gz::GammaContext ctx(s, x);
      const gz::AssembledPoint ap = gz::assemble(s, x);
      const gz::LambdaSolution lam = gz::solve_lambda(ap, cs.mode);
      INFO(cs.name);
      CHECK(gz::lambda_residual(ap, lam) <= 1e-10);
      for (int t = 0; t < 4; ++t) {
        const auto f = ctx.jet(gz::random_polynomial(s.variables, 4, rng));
        CHECK(gz::decomposition_residual(ctx, ap, lam, f, opt).residual <= 1e-9);
      }
    }
  }
}

TEST_CASE("heisenberg horizontal Λ has no solution") {
  const gz::Structure s = gz::builtin("heisenberg");
  const std::vector<double> x{0.4, -0.2, 0.7};
  const gz::AssembledPoint ap = gz::assemble(s, x);
  const gz::LambdaSolution lam = gz::solve_lambda(ap, gz::Mode::horizontal);
  CHECK(gz::lambda_residual(ap, lam) > 1e-3);
}

TEST_CASE("with m = 0 the z-modes reduce to the horizontal one") {
  const gz::Structure s = gz::builtin("euclidean");
  const std::vector<double> x{0.2, 0.3};
  const gz::AssembledPoint ap = gz::assemble(s, x);
  const auto h = gz::solve_lambda(ap, gz::Mode::horizontal);
  const auto z = gz::solve_lambda(ap, gz::Mode::z_plain);
  CHECK(h.L1 == z.L1);
  CHECK(gz::ricci_a(ap, h).M == gz::ricci_a(ap, z).M);
}

TEST_CASE("grushin Ricci form") {
  // ℛ_a = diag(−k²/x², −(2k²+k) x^{2k−2}) in the ∇f basis, from a hand computation with
  // X = ∂x, Y = x^k ∂y.
  const std::vector<double> x{1.3, 0.4};
  for (int k = 1; k <= 3; ++k) {
    const gz::Structure s = gz::builtin("grushin", {{"k", static_cast<double>(k)}});
    const gz::AssembledPoint ap = gz::assemble(s, x);
    const gz::LambdaSolution lam = gz::solve_lambda(ap, gz::Mode::horizontal);
    const Eigen::MatrixXd R = gz::ricci_a(ap, lam).M;
    CHECK(R(0, 0) == doctest::Approx(-k * k / (1.3 * 1.3)));
    CHECK(R(1, 1) == doctest::Approx(-(2.0 * k * k + k) * std::pow(1.3, 2 * k - 2)));
    CHECK(std::fabs(R(0, 1)) < 1e-12);
    CHECK(gz::lambda_residual(ap, lam) < 1e-12);
  }
}

TEST_CASE("hessian and gradient vectors follow the index convention") {
  const gz::Jet f = gz::eval_jet(gz::parse("x*y^2 + 3*z", {"x", "y", "z"}),
                                 std::vector<double>{1.0, 2.0, 0.5}, 2);
  const Eigen::VectorXd g = gz::gradient_vector(f);
  CHECK(g(0) == 4.0);
  CHECK(g(1) == 4.0);
  CHECK(g(2) == 3.0);
  const Eigen::VectorXd X = gz::hessian_vector(f);
  CHECK(X.size() == 9);
  CHECK(X(0 * 3 + 1) == 4.0);
  CHECK(X(1 * 3 + 0) == 4.0);
  CHECK(X(1 * 3 + 1) == 2.0);
  CHECK(X(2 * 3 + 2) == 0.0);
}

TEST_CASE("symmetrizer is an idempotent projection") {
  const Eigen::MatrixXd S = gz::symmetrizer(3);
  CHECK((S * S - S).norm() < 1e-15);
  CHECK((S - S.transpose()).norm() < 1e-15);
}
