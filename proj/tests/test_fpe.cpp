#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "gz/errors.hpp"
#include "gz/fpe.hpp"

namespace {

constexpr double pi = std::numbers::pi;

/// Diffusion on the circle with ρ* ∝ 1 + ½cos x and the reversible drift ½(log ρ*)'.
gz::Structure circle() {
  return gz::load_structure(nlohmann::json::parse(R"j({
    "variables": ["x"],
    "a": [["1"]],
    "b": ["-0.25*sin(x)/(1 + 0.5*cos(x))"],
    "log_vol": "log(1 + 0.5*cos(x))"
  })j"));
}

/// Smallest nonzero λ of −(ρ* u')' = λ ρ* u on the circle, by Galerkin in e^{ikx}, |k| ≤ K.
/// With ρ* ∝ 1 + ½cos x both Gram matrices are real tridiagonal in k.
double circle_gap(int K) {
  const int N = 2 * K + 1;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(N, N), M = Eigen::MatrixXd::Zero(N, N);
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) {
      const int j = r - K, k = c - K;
      const double w = (j == k) ? 1.0 : (std::abs(j - k) == 1 ? 0.25 : 0.0);
      M(r, c) = w;
      S(r, c) = j * k * w;
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, M);
  return es.eigenvalues()(1);
}

}  // namespace

TEST_CASE("grid indexing") {
  const gz::Grid g = gz::Grid::make({0, 0, 0}, {1, 2, 3}, {8, 10, 12});
  CHECK(g.size() == 960);
  CHECK(g.cell_volume() == doctest::Approx(6.0 / 960));
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{959}})
    CHECK(g.flat(g.multi_index(i)) == i);
  CHECK(g.neighbor(0, 0, -1).value() == g.flat({7, 0, 0}));
  const gz::Grid open = gz::Grid::make({0, 0}, {1, 1}, {8, 8}, false);
  CHECK(!open.neighbor(0, 1, -1).has_value());
  CHECK(open.neighbor(0, 1, 1).value() == open.flat({0, 1, 0}));
  CHECK_THROWS_AS(gz::Grid::make({0}, {1}, {4}), gz::SchemaError);
}

TEST_CASE("steady state on the circle matches the closed form") {
  const gz::Structure s = circle();
  const gz::FokkerPlanck op(s, gz::Grid::make({-pi}, {pi}, {64}));
  CHECK(op.reversible());
  const auto& st = op.steady_state();
  CHECK(st.mass() == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    const double x = op.grid().center(i)[0];
    CHECK(st.rho[i] == doctest::Approx((1 + 0.5 * std::cos(x)) / (2 * pi)).epsilon(1e-12));
  }
}

TEST_CASE("steady states are discrete fixed points") {
  SUBCASE("reversible") {
    const gz::FokkerPlanck op(circle(), gz::Grid::make({-pi}, {pi}, {64}));
    for (double r : op.rate(op.steady_state())) CHECK(std::fabs(r) <= 1e-13);
  }
  SUBCASE("non-reversible langevin, up to the face quadrature of the transport flux") {
    const gz::FokkerPlanck op(gz::builtin("langevin_const"),
                              gz::Grid::make({-6, -6}, {6, 6}, {64, 64}));
    CHECK(!op.reversible());
    double peak = 0.0;
    for (double v : op.steady_state().rho) peak = std::max(peak, v);
    for (double r : op.rate(op.steady_state())) CHECK(std::fabs(r) <= 1e-11 * peak);
  }
}

TEST_CASE("uniform density is stationary in flat space") {
  const gz::FokkerPlanck op(gz::builtin("euclidean"), gz::Grid::make({0, 0}, {1, 1}, {16, 16}));
  gz::DensityField rho = op.steady_state();
  for (double v : rho.rho) CHECK(v == doctest::Approx(1.0));
  rho = op.step(rho, op.cfl_limit());
  for (double v : rho.rho) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mass is conserved and the entropy decreases") {
  const gz::Structure s = gz::builtin("langevin_const");
  const gz::FokkerPlanck op(s, gz::Grid::make({-6, -6}, {6, 6}, {32, 32}));
  const auto rho0 =
      gz::density_from_log(op.grid(), gz::parse("-((x-1)^2 + (v+0.5)^2)/2", s.variables));
  const auto ts = gz::simulate(op, rho0, 0.5, 0.5 * op.cfl_limit(), 5);
  REQUIRE(!ts.aborted);
  for (std::size_t i = 1; i < ts.samples.size(); ++i) {
    CHECK(std::fabs(ts.samples[i].mass - 1.0) <= 1e-12);
    CHECK(ts.samples[i].entropy < ts.samples[i - 1].entropy);
  }
  CHECK(ts.t.back() == doctest::Approx(0.5));
}

TEST_CASE("explicit steps beyond the CFL limit are refused") {
  const gz::FokkerPlanck op(gz::builtin("euclidean"), gz::Grid::make({0, 0}, {1, 1}, {16, 16}));
  CHECK_THROWS_AS(op.step(op.steady_state(), 3 * op.cfl_limit()), gz::CFLViolation);
}

TEST_CASE("circle relaxation rate matches the spectral gap") {
  const gz::Structure s = circle();
  const gz::FokkerPlanck op(s, gz::Grid::make({-pi}, {pi}, {128}));
  const auto rho0 = gz::density_from_log(
      op.grid(), gz::parse("log(1 + 0.5*cos(x)) + 0.3*sin(x) + 0.2*cos(x)", s.variables));
  const double gap = circle_gap(40);
  const auto ts = gz::simulate(op, rho0, 10.0 / gap, 0.5 * op.cfl_limit(), 50);
  REQUIRE(!ts.aborted);
  // Both functionals are quadratic in ρ/ρ* − 1 near equilibrium.
  CHECK(gz::fit_decay(ts, gz::SeriesField::entropy) == doctest::Approx(2 * gap).epsilon(0.01));
  CHECK(gz::fit_decay(ts, gz::SeriesField::fisher_a) == doctest::Approx(2 * gap).epsilon(0.01));
}

TEST_CASE("fit_decay on synthetic series") {
  gz::TimeSeries ts;
  for (int i = 0; i <= 40; ++i) {
    const double t = 0.05 * i;
    gz::Functionals f;
    f.entropy = 2.0 * std::exp(-3.0 * t);
    f.fisher_az = 0.7;
    ts.t.push_back(t);
    ts.samples.push_back(f);
  }
  CHECK(gz::fit_decay(ts, gz::SeriesField::entropy) == doctest::Approx(3.0));
  CHECK(std::fabs(gz::fit_decay(ts, gz::SeriesField::fisher_az)) < 1e-12);
  const std::string csv = ts.to_csv();
  CHECK(csv.rfind("t,mass,entropy,fisher_a,fisher_z,fisher_az\n", 0) == 0);
}

TEST_CASE("zlsi needs positive curvature") {
  const gz::FokkerPlanck op(gz::builtin("euclidean"), gz::Grid::make({0, 0}, {1, 1}, {8, 8}));
  CHECK(!gz::check_zlsi(op, op.steady_state(), 0.0).applicable);
  const auto at_eq = gz::check_zlsi(op, op.steady_state(), 1.0);
  CHECK(at_eq.applicable);
  CHECK(at_eq.holds);
}

TEST_CASE("weak identity") {
  SUBCASE("constant fields give zero on both sides") {
    const gz::Structure s = gz::builtin("langevin_const");
    const auto r = gz::weak_identity_check(s, gz::parse("sin(x) + cos(v)", s.variables),
                                           gz::parse("-(x^2 + v^2)/2", s.variables),
                                           gz::Grid::make({-5, -5}, {5, 5}, {32, 32}));
    CHECK(std::fabs(r.lhs) < 1e-12);
    CHECK(std::fabs(r.rhs) < 1e-12);
  }
  SUBCASE("variable z: the gap shrinks at second order") {
    const gz::Structure s = gz::builtin("langevin_var");
    const auto h = gz::parse("sin(x) + 0.5*v*cos(x) + 0.2*v^2", s.variables);
    const auto lr = gz::parse("cos(x) - v^2/2", s.variables);
    const auto coarse = gz::weak_identity_check(s, h, lr, gz::Grid::make({-pi, -7}, {pi, 7}, {64, 64}));
    const auto fine = gz::weak_identity_check(s, h, lr, gz::Grid::make({-pi, -7}, {pi, 7}, {128, 128}));
    CHECK(coarse.lhs == doctest::Approx(fine.lhs).epsilon(1e-6));
    CHECK(std::fabs(coarse.lhs) > 1.0);
    CHECK(std::log2(coarse.gap / fine.gap) == doctest::Approx(2.0).epsilon(0.05));
  }
}
