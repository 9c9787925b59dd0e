#include <cmath>

#include "doctest.h"
#include "vfc/parallel.hpp"
#include "vfc/quadrature.hpp"

using namespace vfc;

TEST_CASE("serial and openmp kernels are bit-identical") {
  auto work = [](std::size_t i) { return std::sin(0.1 * static_cast<double>(i)) / (1.0 + i); };
  double a = par::map_sum_serial(10000, work);
  double b = par::map_sum_openmp(10000, work);
  CHECK(a == b);
}

TEST_CASE("quadrature agrees bitwise across modes") {
  Box dom;
  dom.lo = {-1, -1};
  dom.hi = {1, 1};
  auto f = [](const std::vector<double>& x) { return std::cos(3 * x[0]) * std::exp(x[1]); };
  par::Mode saved = par::mode();
  par::mode() = par::Mode::serial;
  double s = integrate_adaptive(dom, f);
  par::mode() = par::Mode::openmp;
  double p = integrate_adaptive(dom, f);
  par::mode() = saved;
  CHECK(s == p);
}
