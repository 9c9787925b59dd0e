#include <cmath>

#include "doctest.h"
#include "vfc/errors.hpp"
#include "vfc/expr.hpp"

using namespace vfc;

TEST_CASE("expression parsing and evaluation") {
  ExprEnv env{{"u1", Cx(2, 0)}, {"z1", Cx(1, 1)}};
  CHECK(Expr::parse("u1 + 3").eval(env) == Cx(5, 0));
  CHECK(Expr::parse("(u1 + i*u1)^2").eval(env) == Cx(0, 8));
  CHECK(Expr::parse("conj(z1)").eval(env) == Cx(1, -1));
  CHECK(Expr::parse("abs(z1)").eval(env).real() == doctest::Approx(std::sqrt(2.0)));
  CHECK(Expr::parse("re(z1) - im(z1)").eval(env) == Cx(0, 0));
  CHECK(Expr::parse("2*pi").eval(env).real() == doctest::Approx(2 * M_PI));
  CHECK(Expr::parse("-u1/4").eval(env) == Cx(-0.5, 0));
  CHECK(Expr::parse("exp(log(u1))").eval(env).real() == doctest::Approx(2.0));
  CHECK(Expr::parse("bump(0)").eval(env).real() == doctest::Approx(1.0));
  CHECK(Expr::parse("bump(2)").eval(env).real() == 0.0);
}

TEST_CASE("parse errors carry SCHEMA code") {
  CHECK_THROWS_WITH_AS(Expr::parse("u1 +"), doctest::Contains("SCHEMA"), Error);
  CHECK_THROWS_WITH_AS(Expr::parse("frobnicate(u1)").eval({{"u1", Cx(1, 0)}}),
                       doctest::Contains("SCHEMA"), Error);
  CHECK_THROWS_WITH_AS(Expr::parse("u1").eval({}), doctest::Contains("unbound"), Error);
}
