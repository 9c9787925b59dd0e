#ifndef VFC_TESTS_ORACLES_HPP
#define VFC_TESTS_ORACLES_HPP

// Independent oracles for the frozen expected values. These stay on their own
// code path: nothing here calls the implementation it cross-checks.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "vfc/rational.hpp"
#include "vfc/tropical.hpp"

namespace oracles {

// Ray oracle for tropical completion: the ray p + t d meets P in more than
// one point iff every constraint decreasing along d has strictly positive
// slack at p. Evaluated exactly from the raw constraint data.
inline bool ray_meets_in_segment(const vfc::tropical::Polytope& p, const std::vector<vfc::Rat>& base,
                                 const std::vector<vfc::Int>& dir) {
  using vfc::Rat;
  for (const auto& c : p.constraints()) {
    Rat rate = 0, slack = -c.offset;
    for (std::size_t i = 0; i < dir.size(); ++i) rate += Rat(c.normal[i]) * Rat(dir[i]);
    for (std::size_t i = 0; i < base.size(); ++i) slack += Rat(c.normal[i]) * base[i];
    if (rate < 0 && slack == 0) return false;
  }
  return true;
}

// All primitive integer directions with entries in [-span, span].
inline std::vector<std::vector<vfc::Int>> direction_grid(int dim, int span) {
  std::vector<std::vector<vfc::Int>> dirs;
  std::vector<int> idx(dim, -span);
  for (;;) {
    bool all_zero = true;
    for (int v : idx) all_zero = all_zero && v == 0;
    if (!all_zero) {
      vfc::Int g = 0;
      for (int v : idx) g = gcd(g, vfc::Int(v));
      if (g == 1) {
        std::vector<vfc::Int> d;
        for (int v : idx) d.emplace_back(v);
        dirs.push_back(std::move(d));
      }
    }
    int i = 0;
    while (i < dim && idx[i] == span) idx[i++] = -span;
    if (i == dim) break;
    ++idx[i];
  }
  return dirs;
}

// Winding number of a closed loop t -> f(gamma(t)) around 0; counts signed
// zeros of f inside the circle |center - x| = radius for maps C -> C.
inline int winding_number(const std::function<std::complex<double>(std::complex<double>)>& f,
                          std::complex<double> center, double radius, int steps = 4096) {
  double total = 0.0;
  std::complex<double> prev = f(center + std::complex<double>(radius, 0.0));
  for (int k = 1; k <= steps; ++k) {
    double t = 2.0 * M_PI * k / steps;
    std::complex<double> cur = f(center + radius * std::complex<double>(std::cos(t), std::sin(t)));
    total += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

// Composite midpoint quadrature over a box grid; slow but independent of the
// Gauss-Legendre engine.
inline double midpoint_integral(const std::vector<double>& lo, const std::vector<double>& hi, int per_axis,
                                const std::function<double(const std::vector<double>&)>& f) {
  const int d = static_cast<int>(lo.size());
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  double cellvol = 1.0;
  for (int i = 0; i < d; ++i) cellvol *= (hi[i] - lo[i]) / per_axis;
  double sum = 0.0;
  std::vector<double> x(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (int i = 0; i < d; ++i) {
      int k = rem % per_axis;
      rem /= per_axis;
      x[i] = lo[i] + (hi[i] - lo[i]) * (k + 0.5) / per_axis;
    }
    sum += f(x);
  }
  return sum * cellvol;
}

}  // namespace oracles

#endif
