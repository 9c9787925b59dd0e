#ifndef VFC_QUADRATURE_HPP
#define VFC_QUADRATURE_HPP

#include <functional>
#include <vector>

#include "vfc/geometry.hpp"

namespace vfc {

struct QuadOptions {
  double tol = 1e-8;     // accept when |fine - coarse| <= tol * (1 + |I|)
  int max_depth = 12;    // dyadic subdivision depth cap
  int max_cells = 200000;
};

// Adaptive tensor Gauss-Legendre (order 8 per axis, dyadic refinement).
// Cells of one level are evaluated in parallel; accepted contributions are
// summed in deterministic cell order. Throws NONCONVERGED at the depth cap.
double integrate_adaptive(const Box& domain, const std::function<double(const std::vector<double>&)>& f,
                          const QuadOptions& opt = {});

// Fixed-order tensor rule on one box (no adaptivity); building block and
// serial reference kernel for tests.
double integrate_box_gl8(const Box& domain, const std::function<double(const std::vector<double>&)>& f);

// 1D Gauss-Legendre order 8 on [a,b].
double integrate_gl8_1d(double a, double b, const std::function<double(double)>& f);

}  // namespace vfc

#endif
