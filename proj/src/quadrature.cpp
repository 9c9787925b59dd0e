#include "vfc/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "vfc/errors.hpp"
#include "vfc/parallel.hpp"

namespace vfc {

namespace {

// 8-point Gauss-Legendre nodes/weights on [-1,1].
constexpr double kGlNode[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeight[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};

double tensor_gl8(const Box& b, const std::function<double(const std::vector<double>&)>& f) {
  const int d = b.dim();
  if (d == 0) return f({});
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= 8;
  double sum = 0.0;
  std::vector<double> x(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      int k = rem % 8;
      rem /= 8;
      double half = 0.5 * (b.hi[i] - b.lo[i]);
      x[i] = 0.5 * (b.lo[i] + b.hi[i]) + half * kGlNode[k];
      w *= half * kGlWeight[k];
    }
    sum += w * f(x);
  }
  return sum;
}

void split_box(const Box& b, std::vector<Box>& out) {
  const int d = b.dim();
  std::size_t pieces = std::size_t{1} << d;
  for (std::size_t mask = 0; mask < pieces; ++mask) {
    Box c = b;
    for (int i = 0; i < d; ++i) {
      double mid = 0.5 * (b.lo[i] + b.hi[i]);
      if (mask & (std::size_t{1} << i))
        c.lo[i] = mid;
      else
        c.hi[i] = mid;
    }
    out.push_back(std::move(c));
  }
}

}  // namespace

double integrate_gl8_1d(double a, double b, const std::function<double(double)>& f) {
  double half = 0.5 * (b - a), mid = 0.5 * (a + b), s = 0.0;
  for (int k = 0; k < 8; ++k) s += kGlWeight[k] * f(mid + half * kGlNode[k]);
  return s * half;
}

double integrate_box_gl8(const Box& domain, const std::function<double(const std::vector<double>&)>& f) {
  return tensor_gl8(domain, f);
}

double integrate_adaptive(const Box& domain, const std::function<double(const std::vector<double>&)>& f,
                          const QuadOptions& opt) {
  if (domain.dim() == 0) return f({});
  struct Cell {
    Box box;
    int depth;
  };
  std::vector<Cell> level{{domain, 0}};
  double accepted = 0.0;
  double estimate = std::abs(tensor_gl8(domain, f));
  std::size_t cells_seen = 1;
  while (!level.empty()) {
    const std::size_t n = level.size();
    // coarse and refined estimates per cell, in parallel
    std::vector<double> coarse(n), fine(n);
    par::for_each(n, [&](std::size_t i) {
      coarse[i] = tensor_gl8(level[i].box, f);
      std::vector<Box> kids;
      split_box(level[i].box, kids);
      double s = 0.0;
      for (const auto& k : kids) s += tensor_gl8(k, f);
      fine[i] = s;
    });
    std::vector<Cell> next;
    for (std::size_t i = 0; i < n; ++i) {
      double err = std::abs(fine[i] - coarse[i]);
      if (err <= opt.tol * (1.0 + std::abs(estimate)) / static_cast<double>(n)) {
        accepted += fine[i];
      } else {
        if (level[i].depth + 1 > opt.max_depth)
          throw err_nonconverged("adaptive quadrature exceeded depth cap");
        std::vector<Box> kids;
        split_box(level[i].box, kids);
        for (auto& k : kids) next.push_back({std::move(k), level[i].depth + 1});
      }
    }
    cells_seen += next.size();
    if (cells_seen > static_cast<std::size_t>(opt.max_cells))
      throw err_nonconverged("adaptive quadrature exceeded cell cap");
    // Keep the running magnitude estimate current for the relative test.
    estimate = std::max(estimate, std::abs(accepted));
    level = std::move(next);
  }
  return accepted;
}

}  // namespace vfc
