#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stabcert/expr.hpp"

using namespace stabcert;

namespace {

// Independent derivative oracle: central finite difference with
// h = 1e-6*(1+|x|), accurate to ~1e-8 relative for smooth expressions.
double central_difference(const Expr& e, const Bindings& at, const std::string& var) {
  Bindings lo = at, hi = at;
  double x = at.at(var);
  double h = 1e-6 * (1.0 + std::abs(x));
  lo[var] = x - h;
  hi[var] = x + h;
  return (e.eval(hi) - e.eval(lo)) / (2.0 * h);
}

// Random expression generator for round-trip and derivative properties.
Expr random_expr(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  std::uniform_real_distribution<double> cval(-3.0, 3.0);
  switch (pick(rng)) {
    case 0: return Expr::constant(cval(rng));
    case 1: return Expr::variable(rng() % 2 == 0 ? "x" : "y");
    case 2: return random_expr(rng, depth - 1) + random_expr(rng, depth - 1);
    case 3: return random_expr(rng, depth - 1) - random_expr(rng, depth - 1);
    case 4: return random_expr(rng, depth - 1) * random_expr(rng, depth - 1);
    case 5: return Expr::sin(random_expr(rng, depth - 1));
    case 6: return Expr::cos(random_expr(rng, depth - 1));
    case 7: return random_expr(rng, depth - 1).pow(double(1 + rng() % 3));
    case 8: return -random_expr(rng, depth - 1);
    default:
      return Expr::exp(Expr::constant(0.1) * random_expr(rng, depth - 1));
  }
}

}  // namespace

TEST_CASE("parse: atoms and precedence") {
  Expr v = Expr::parse("v");
  CHECK(v.kind() == Expr::Kind::Variable);
  CHECK(v.name() == "v");

  // (q^2) + (v^2), not q^(2+v^2)
  Expr e = Expr::parse("q^2 + v^2");
  CHECK(e.kind() == Expr::Kind::Add);
  CHECK(e.child(0).kind() == Expr::Kind::Pow);
  CHECK(e.child(1).kind() == Expr::Kind::Pow);
  CHECK(e.eval({{"q", 3.0}, {"v", 4.0}}) == 25.0);

  // ^ binds tighter than unary minus
  CHECK(Expr::parse("-2^2").eval({}) == -4.0);
  // right-associative
  CHECK(Expr::parse("2^3^2").eval({}) == 512.0);
  CHECK(Expr::parse("2^-1").eval({}) == 0.5);
  CHECK(Expr::parse("6/2/3").eval({}) == 1.0);
  CHECK(Expr::parse("1 - 2 - 3").eval({}) == -4.0);
  CHECK(Expr::parse("2*pi").eval({}) == 2.0 * std::numbers::pi);
  CHECK(Expr::parse("1.5e2").eval({}) == 150.0);
}

TEST_CASE("parse: errors carry byte offsets") {
  try {
    Expr::parse("q +");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 3);
  }
  CHECK_THROWS_AS(Expr::parse(""), ParseError);
  CHECK_THROWS_AS(Expr::parse("2q"), ParseError);      // no implicit multiplication
  CHECK_THROWS_AS(Expr::parse("(1+2"), ParseError);
  CHECK_THROWS_AS(Expr::parse("foo(1)"), ParseError);  // unknown function
  try {
    Expr::parse("1 + bar(2)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 4);
  }
}

TEST_CASE("eval: standard arithmetic and domain errors") {
  CHECK(Expr::parse("sin(x)").eval({{"x", std::numbers::pi / 2}}) == doctest::Approx(1.0));
  CHECK(Expr::parse("q^2+v^2").eval({{"q", 3.0}, {"v", 4.0}}) == 25.0);

  CHECK_THROWS_AS(Expr::parse("log(x)").eval({{"x", -1.0}}), EvalError);
  CHECK_THROWS_AS(Expr::parse("sqrt(x)").eval({{"x", -4.0}}), EvalError);
  CHECK_THROWS_AS(Expr::parse("1/x").eval({{"x", 0.0}}), EvalError);
  CHECK_THROWS_AS(Expr::parse("x+1").eval({{"y", 0.0}}), EvalError);

  // offending subexpression is reported
  try {
    Expr::parse("1 + log(x*x - 1)").eval({{"x", 0.5}});
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    CHECK(e.subexpr.find("log") != std::string::npos);
  }
}

TEST_CASE("diff: exact symbolic derivatives") {
  Expr e = Expr::parse("q^2");
  CHECK(e.diff("q").eval({{"q", 3.0}}) == 6.0);
  CHECK(Expr::parse("sin(q)").diff("q").eval({{"q", 0.0}}) == 1.0);
  CHECK(Expr::parse("q*v").diff("q").eval({{"q", 7.0}, {"v", 11.0}}) == 11.0);
  CHECK(Expr::parse("exp(2*x)").diff("x").eval({{"x", 0.0}}) == 2.0);
  CHECK(Expr::parse("x^x").diff("x").eval({{"x", 1.0}}) == doctest::Approx(1.0));
  // derivative with respect to an absent variable is zero
  CHECK(Expr::parse("q^2").diff("v").eval({{"q", 5.0}}) == 0.0);
}

TEST_CASE("diff matches central finite differences at random points") {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> xs(-2.0, 2.0);
  Expr e = Expr::parse("q*v");
  Expr dq = e.diff("q");
  for (int i = 0; i < 100; ++i) {
    Bindings b{{"q", xs(rng)}, {"v", xs(rng)}};
    double sym = dq.eval(b);
    double num = central_difference(e, b, "q");
    CHECK(std::abs(sym - num) <= 1e-6 * (1.0 + std::abs(sym)));
  }
}

TEST_CASE("property: symbolic vs numeric derivative on random expressions") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> xs(-1.5, 1.5);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    Expr e = random_expr(rng, 3);
    Expr d = e.diff("x");
    Bindings b{{"x", xs(rng)}, {"y", xs(rng)}};
    double sym, num;
    try {
      sym = d.eval(b);
      num = central_difference(e, b, "x");
    } catch (const EvalError&) {
      continue;  // point outside domain; property quantifies over valid points
    }
    if (std::abs(num) > 1e6) continue;  // FD oracle unreliable when huge
    CHECK(std::abs(sym - num) <= 2e-5 * (1.0 + std::abs(sym)));
    ++checked;
  }
  CHECK(checked > 200);
}

TEST_CASE("property: render/parse round trip is evaluation-exact") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> xs(-2.0, 2.0);
  for (int i = 0; i < 400; ++i) {
    Expr e = random_expr(rng, 4);
    Expr back = Expr::parse(e.render());
    Bindings b{{"x", xs(rng)}, {"y", xs(rng)}};
    double v0, v1;
    try {
      v0 = e.eval(b);
      v1 = back.eval(b);
    } catch (const EvalError&) {
      continue;
    }
    CHECK(v0 == v1);  // bit-identical
  }
}

TEST_CASE("eval is referentially transparent") {
  Expr e = Expr::parse("sin(x)^2 + cos(x)^2 - exp(x/3)");
  Bindings b{{"x", 0.7365}};
  double first = e.eval(b);
  for (int i = 0; i < 10; ++i) CHECK(e.eval(b) == first);
}

TEST_CASE("compiled evaluation matches tree evaluation") {
  std::vector<std::string> vars{"x", "y"};
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> xs(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    Expr e = random_expr(rng, 4);
    CompiledExpr c(e, vars);
    double x = xs(rng), y = xs(rng);
    std::vector<double> vals{x, y};
    Bindings b{{"x", x}, {"y", y}};
    double v0, v1;
    try {
      v0 = e.eval(b);
    } catch (const EvalError&) {
      CHECK_THROWS_AS(c.eval(vals), EvalError);
      continue;
    }
    v1 = c.eval(vals);
    CHECK(v0 == v1);
  }
}

TEST_CASE("compiled evaluation folds parameters as constants") {
  std::vector<std::string> vars{"q"};
  CompiledExpr c(Expr::parse("omega*q"), vars, {{"omega", 2.5}});
  std::vector<double> vals{4.0};
  CHECK(c.eval(vals) == 10.0);
  CHECK_THROWS_AS(CompiledExpr(Expr::parse("nope*q"), vars), EvalError);
}
