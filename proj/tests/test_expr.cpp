#include "doctest.h"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "liekit/expr.hpp"

using liekit::Env;
using liekit::EvalError;
using liekit::Expr;
using liekit::ExprError;
using liekit::parse_expr;

namespace {

// Random expression tree in the single variable t.  `safe` restricts the
// node set to operations that stay finite on t > 0 (no log/sqrt/tan/abs and
// only literal integer exponents) so the derivative comparison below rarely
// has to skip a sample.
Expr random_expr(std::mt19937_64& rng, int depth, bool safe) {
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  auto leaf = [&] {
    if (rng() % 2 == 0) return Expr::symbol("t");
    double v = coef(rng);
    return Expr::number(std::round(v * 16.0) / 16.0);
  };
  if (depth == 0) return leaf();
  switch (rng() % (safe ? 8 : 10)) {
    case 0: return random_expr(rng, depth - 1, safe) + random_expr(rng, depth - 1, safe);
    case 1: return random_expr(rng, depth - 1, safe) - random_expr(rng, depth - 1, safe);
    case 2: return random_expr(rng, depth - 1, safe) * random_expr(rng, depth - 1, safe);
    case 3: return random_expr(rng, depth - 1, safe) / random_expr(rng, depth - 1, safe);
    case 4: {
      double k = static_cast<double>(2 + rng() % 3);
      return Expr::pow(random_expr(rng, depth - 1, safe), Expr::number(k));
    }
    case 5: return sin(random_expr(rng, depth - 1, safe));
    case 6: return cos(random_expr(rng, depth - 1, safe));
    case 7: return -random_expr(rng, depth - 1, safe);
    case 8: {
      switch (rng() % 5) {
        case 0: return tan(random_expr(rng, depth - 1, safe));
        case 1: return log(random_expr(rng, depth - 1, safe));
        case 2: return sqrt(random_expr(rng, depth - 1, safe));
        case 3: return abs(random_expr(rng, depth - 1, safe));
        default: return tanh(random_expr(rng, depth - 1, safe));
      }
    }
    default: {
      switch (rng() % 4) {
        case 0: return exp(random_expr(rng, depth - 1, safe));
        case 1: return sinh(random_expr(rng, depth - 1, safe));
        case 2: return cosh(random_expr(rng, depth - 1, safe));
        default: return Expr::pow(random_expr(rng, depth - 1, safe),
                                  random_expr(rng, depth - 1, safe));
      }
    }
  }
}

}  // namespace

TEST_CASE("expr: literal evaluation and folding") {
  CHECK(parse_expr("1 + 2*3").is_number());
  CHECK(parse_expr("1 + 2*3").number_value() == 7.0);
  CHECK(parse_expr("2^-2").number_value() == 0.25);
  CHECK(parse_expr("2^3^2").number_value() == 512.0);  // right associative
  CHECK(parse_expr("-2^2").number_value() == -4.0);    // ^ binds before unary -
  CHECK(parse_expr("(-2)^2").number_value() == 4.0);
  CHECK(parse_expr("10 - 4 - 3").number_value() == 3.0);  // left associative
  CHECK(parse_expr("12/4/3").number_value() == 1.0);
  // 1/0 must not fold into inf; it stays a tree and fails at eval time.
  Expr q = parse_expr("1/0");
  CHECK(!q.is_number());
  CHECK_THROWS_AS(q.eval(Env{}), EvalError);
}

TEST_CASE("expr: precedence against explicit trees") {
  Expr t = Expr::symbol("t");
  CHECK(parse_expr("-t^2").identical(-Expr::pow(t, Expr::number(2.0))));
  CHECK(parse_expr("a - b - c")
            .identical((Expr::symbol("a") - Expr::symbol("b")) - Expr::symbol("c")));
  CHECK(parse_expr("a^b^c").identical(
      Expr::pow(Expr::symbol("a"),
                Expr::pow(Expr::symbol("b"), Expr::symbol("c")))));
  CHECK(parse_expr("t^-2").identical(Expr::pow(t, Expr::number(-2.0))));
  CHECK(parse_expr("2*t + 1").identical(Expr::number(2.0) * t + Expr::number(1.0)));
  CHECK(parse_expr("sin(t)^2").identical(Expr::pow(sin(t), Expr::number(2.0))));
  Env at2{{"t", 2.0}, {"a", 2.0}, {"b", 3.0}, {"c", 2.0}};
  CHECK(parse_expr("-t^2").eval(at2) == -4.0);
  // Symbolic exponents evaluate through exp(b*log(a)), so only approximately.
  CHECK(parse_expr("a^b^c").eval(at2) == doctest::Approx(512.0).epsilon(1e-12));
}

TEST_CASE("expr: parse errors carry offsets") {
  auto offset_of = [](const char* text) -> std::size_t {
    try {
      parse_expr(text);
    } catch (const ExprError& e) {
      return e.offset();
    }
    return static_cast<std::size_t>(-1);
  };
  CHECK(offset_of("2 + foo(3)") == 4);
  CHECK(offset_of("2 + ") == 4);
  CHECK(offset_of("(1 + 2") == 6);
  CHECK(offset_of("1 + 2)") == 5);   // trailing input
  CHECK(offset_of("1 ? 2") == 2);    // trailing input at '?'
  CHECK(offset_of("@x") == 0);
}

TEST_CASE("expr: evaluation errors") {
  Env env{{"t", 2.0}};
  CHECK_THROWS_AS(parse_expr("t + u").eval(env), EvalError);
  CHECK_THROWS_AS(parse_expr("log(1 - t)").eval(env), EvalError);
  CHECK_THROWS_AS(parse_expr("sqrt(1 - t)").eval(env), EvalError);
  CHECK_THROWS_AS(parse_expr("1/(t - 2)").eval(env), EvalError);
  CHECK_THROWS_AS(parse_expr("(0*t)^-1").eval(env), EvalError);
  CHECK_THROWS_AS(parse_expr("(1 - t)^t").eval(env), EvalError);  // neg base, symbolic exp
  CHECK(parse_expr("(t - 3)^2").eval(env) == 1.0);  // neg base, integer literal is fine
  try {
    parse_expr("t + u").eval(env);
  } catch (const EvalError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("expr: print/reparse round trip is structural") {
  std::mt19937_64 rng(20260814u);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    Expr e = random_expr(rng, 1 + static_cast<int>(rng() % 6), /*safe=*/false);
    Expr back = parse_expr(e.str());
    CHECK(e.identical(back));
    if (!e.identical(back)) {
      MESSAGE("failed on: " << e.str());
      break;
    }
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("expr: derivative matches finite differences") {
  std::mt19937_64 rng(977001u);
  std::uniform_real_distribution<double> tdist(0.1, 2.0);
  int used = 0;
  for (int i = 0; i < 200; ++i) {
    Expr e = random_expr(rng, 1 + static_cast<int>(rng() % 6), /*safe=*/true);
    Expr de = e.diff("t");
    double t0 = tdist(rng);
    const double h = 1e-6;
    double fm, fp, d;
    try {
      fm = e.eval(Env{{"t", t0 - h}});
      fp = e.eval(Env{{"t", t0 + h}});
      d = de.eval(Env{{"t", t0}});
    } catch (const EvalError&) {
      continue;  // wandered into a pole
    }
    if (!std::isfinite(fm) || !std::isfinite(fp) || !std::isfinite(d)) continue;
    if (std::fabs(d) > 1e6 || std::fabs(fp) > 1e6) continue;  // FD is hopeless there
    double fd = (fp - fm) / (2 * h);
    CHECK(std::fabs(fd - d) <= 1e-5 * (1.0 + std::fabs(d)));
    if (std::fabs(fd - d) > 1e-5 * (1.0 + std::fabs(d)))
      MESSAGE("failed on: " << e.str() << " at t=" << t0);
    ++used;
  }
  // The guards above may drop some samples, but most must survive.
  CHECK(used >= 100);
}

TEST_CASE("expr: known derivatives") {
  Env env{{"t", 0.7}};
  Expr e = parse_expr("sin(t)*exp(t/2)");
  double expect = std::cos(0.7) * std::exp(0.35) + 0.5 * std::sin(0.7) * std::exp(0.35);
  CHECK(e.diff("t").eval(env) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(parse_expr("t^3").diff("t").eval(env) == doctest::Approx(3 * 0.49).epsilon(1e-14));
  CHECK(parse_expr("log(t)").diff("t").eval(env) == doctest::Approx(1 / 0.7).epsilon(1e-14));
  CHECK(parse_expr("t^t").diff("t").eval(env) ==
        doctest::Approx(std::pow(0.7, 0.7) * (std::log(0.7) + 1.0)).epsilon(1e-13));
  CHECK(parse_expr("5").diff("t").is_number());
  CHECK(parse_expr("5").diff("t").number_value() == 0.0);
}
