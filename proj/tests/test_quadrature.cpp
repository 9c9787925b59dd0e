#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vfc/errors.hpp"
#include "vfc/quadrature.hpp"

using namespace vfc;

TEST_CASE("gl8 is exact on low-degree polynomials") {
  auto f = [](double x) { return 3 * x * x - 2 * x + 1; };
  double v = integrate_gl8_1d(-1.0, 2.0, f);
  CHECK(v == doctest::Approx(9.0 - 3.0 + 3.0).epsilon(1e-13));  // x^3 - x^2 + x on [-1,2]
}

TEST_CASE("adaptive quadrature reaches 1e-8 on a smooth 2d integrand") {
  Box dom;
  dom.lo = {-2, -2};
  dom.hi = {2, 2};
  auto f = [](const std::vector<double>& x) { return std::exp(-(x[0] * x[0] + x[1] * x[1])); };
  double got = integrate_adaptive(dom, f);
  double exact = M_PI * std::pow(std::erf(2.0), 2);
  CHECK(std::abs(got - exact) < 1e-8 * (1 + std::abs(exact)));
  // independent slow oracle
  double mid = oracles::midpoint_integral({-2, -2}, {2, 2}, 220, f);
  CHECK(std::abs(got - mid) < 5e-4);
}

TEST_CASE("adaptive quadrature handles zero-dimensional domains") {
  Box dom;  // a point
  double got = integrate_adaptive(dom, [](const std::vector<double>&) { return 7.5; });
  CHECK(got == 7.5);
}

TEST_CASE("depth cap raises NONCONVERGED") {
  Box dom;
  dom.lo = {0};
  dom.hi = {1};
  // Integrable singularity at 0 resists the fixed depth cap.
  auto f = [](const std::vector<double>& x) { return 1.0 / std::sqrt(x[0] + 1e-300); };
  QuadOptions opt;
  opt.max_depth = 4;
  CHECK_THROWS_WITH_AS(integrate_adaptive(dom, f, opt), doctest::Contains("NONCONVERGED"), Error);
}
