#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "gz/expr.hpp"

using gz::eval_jet;
using gz::parse;

TEST_CASE("parse accepts the grammar and reports free variables") {
  const auto e = parse("sin(x1)^2 + 2*x2", {"x1", "x2"});
  const std::vector<double> p{0.3, 1.5};
  CHECK(gz::eval_value(e, p) == doctest::Approx(std::pow(std::sin(0.3), 2) + 3.0));
  CHECK(e.dim() == 2);
}

TEST_CASE("unbound identifiers are rejected by name") {
  try {
    parse("x^k", {"x"});
    FAIL("expected UnknownIdentifier");
  } catch (const gz::UnknownIdentifier& err) {
    CHECK(err.name() == "k");
  }
  CHECK_NOTHROW(parse("x^k", {"x"}, {{"k", 2.0}}));
}

TEST_CASE("syntax and arity errors carry their details") {
  try {
    parse("x + * y", {"x", "y"});
    FAIL("expected SyntaxError");
  } catch (const gz::SyntaxError& err) {
    CHECK(err.position() == 4);
  }
  try {
    parse("pow(x)", {"x"});
    FAIL("expected ArityError");
  } catch (const gz::ArityError& err) {
    CHECK(err.got() == 1);
    CHECK(err.expected() == 2);
  }
  CHECK_THROWS_AS(parse("foo(x)", {"x"}), gz::UnknownIdentifier);
  CHECK_THROWS_AS(parse("(x", {"x"}), gz::SyntaxError);
  CHECK_THROWS_AS(parse("x", {"x", "x"}), gz::SchemaError);
}

TEST_CASE("unary minus binds below the power") {
  const std::vector<std::string> v{"x"};
  const std::vector<double> p{3.0};
  CHECK(gz::eval_value(parse("-x^2", v), p) == doctest::Approx(-9.0));
  CHECK(gz::eval_value(parse("(-x)^2", v), p) == doctest::Approx(9.0));
  CHECK(gz::eval_value(parse("2^3^2", v), p) == doctest::Approx(512.0));
  CHECK(gz::eval_value(parse("-x2/2", {"x1", "x2", "x3"}), std::vector<double>{1, 4, 2}) ==
        doctest::Approx(-2.0));
}

TEST_CASE("integer powers work for negative bases, real powers do not") {
  const std::vector<std::string> v{"x"};
  const std::vector<double> p{-2.0};
  CHECK(gz::eval_value(parse("x^3", v), p) == doctest::Approx(-8.0));
  CHECK(gz::eval_value(parse("pow(x, 2)", v), p) == doctest::Approx(4.0));
  CHECK_THROWS_AS(gz::eval_value(parse("x^1.5", v), p), gz::DomainError);
}

TEST_CASE("domain errors name the subexpression and the point") {
  try {
    gz::eval_value(parse("1 + log(x - 2)", {"x"}), std::vector<double>{1.0});
    FAIL("expected DomainError");
  } catch (const gz::DomainError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("log") != std::string::npos);
    CHECK(msg.find("x=1") != std::string::npos);
  }
  CHECK_THROWS_AS(gz::eval_value(parse("1/x", {"x"}), std::vector<double>{0.0}), gz::DomainError);
  CHECK_THROWS_AS(gz::eval_value(parse("sqrt(x)", {"x"}), std::vector<double>{-1.0}),
                  gz::DomainError);
}

TEST_CASE("canonical text round-trips to a structurally identical tree") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> v{"x", "y", "z"};
  for (int i = 0; i < 200; ++i) {
    const auto e = parse(oracle::random_expression(rng, v, 4), v);
    const auto again = parse(e.to_string(), v);
    REQUIRE(gz::structurally_equal(e.root(), again.root()));
    CHECK(again.to_string() == e.to_string());
  }
  const auto neg = parse("x * -3", {"x"});
  CHECK(gz::structurally_equal(neg.root(), parse(neg.to_string(), {"x"}).root()));
}

TEST_CASE("jets of simple expressions") {
  const auto ex = parse("exp(beta*theta)", {"theta", "x", "y"}, {{"beta", 0.1}});
  const auto j = eval_jet(ex, std::vector<double>{0, 0, 0}, 1);
  CHECK(j.value() == doctest::Approx(1.0));
  CHECK(j.d1(0) == doctest::Approx(0.1));
  CHECK(j.d1(1) == 0.0);
  CHECK(j.d1(2) == 0.0);

  const auto b = eval_jet(parse("x1*x2", {"x1", "x2"}), std::vector<double>{3, 5}, 2);
  CHECK(b.value() == 15.0);
  CHECK(b.d1(0) == 5.0);
  CHECK(b.d1(1) == 3.0);
  CHECK(b.d2(0, 0) == 0.0);
  CHECK(b.d2(0, 1) == 1.0);
  CHECK(b.d2(1, 1) == 0.0);
}

TEST_CASE("sin jet against finite differences") {
  const auto e = parse("sin(x)", {"x"});
  const auto err = oracle::jet_vs_differences(e, {0.7});
  CHECK(err.order1 <= 1e-6);
  CHECK(err.order2 <= 1e-6);
  CHECK(err.order3 <= 1e-6);
}

TEST_CASE("random expressions: every derivative agrees with differences") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  const std::vector<std::string> v{"x", "y", "z"};
  for (int i = 0; i < 200; ++i) {
    const auto e = parse(oracle::random_expression(rng, v, 5), v);
    const std::vector<double> x{coord(rng), coord(rng), coord(rng)};
    const auto err = oracle::jet_vs_differences(e, x);
    INFO(e.source());
    CHECK(err.order1 <= gz::JetTolerance::order1);
    CHECK(err.order2 <= gz::JetTolerance::order2);
    CHECK(err.order3 <= gz::JetTolerance::order3);
  }
}

TEST_CASE("jet storage is symmetric and the product follows Leibniz") {
  const std::vector<std::string> v{"x", "y", "z"};
  const std::vector<double> p{0.4, -0.3, 0.9};
  const auto f = eval_jet(parse("sin(x*y) + z^3*x", v), p, 3);
  const auto g = eval_jet(parse("exp(y - z) + x^2", v), p, 3);
  const auto fg = eval_jet(parse("(sin(x*y) + z^3*x)*(exp(y - z) + x^2)", v), p, 3);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      CHECK(f.d2(i, k) == f.d2(k, i));
      for (int l = 0; l < 3; ++l) {
        CHECK(f.d3(i, k, l) == f.d3(l, i, k));
        CHECK(f.d3(i, k, l) == f.d3(k, l, i));
      }
      const double leibniz = f.d2(i, k) * g.value() + f.d1(i) * g.d1(k) + f.d1(k) * g.d1(i) +
                             f.value() * g.d2(i, k);
      CHECK(std::fabs(fg.d2(i, k) - leibniz) <= 1e-13 * (1.0 + std::fabs(leibniz)));
    }
}

TEST_CASE("substitution and linear combinations") {
  const std::vector<std::string> v{"x", "y"};
  const auto e = parse("x*y + x", v);
  const auto sw = e.substitute({parse("y", v), parse("x", v)});
  CHECK(gz::eval_value(sw, std::vector<double>{2, 3}) == doctest::Approx(9.0));
  const auto lc = gz::linear_combination({2.0, 0.0, -1.0},
                                         {parse("x", v), parse("y", v), parse("x*y", v)}, v);
  CHECK(gz::eval_value(lc, std::vector<double>{2, 3}) == doctest::Approx(-2.0));
}

TEST_CASE("random polynomials contain every monomial up to the degree") {
  std::mt19937_64 rng(5);
  const auto p = gz::random_polynomial({"x", "y"}, 4, rng);
  // 15 monomials of total degree ≤ 4 in two variables: the fourth derivatives vanish,
  // so the order-3 jet is exact and the value at 0 is the constant coefficient.
  const auto j = eval_jet(p, std::vector<double>{0, 0}, 3);
  CHECK(std::fabs(j.value()) <= 1.0);
  CHECK(std::count(p.source().begin(), p.source().end(), '(') == 15);
}
