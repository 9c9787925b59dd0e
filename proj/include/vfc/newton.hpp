#ifndef VFC_NEWTON_HPP
#define VFC_NEWTON_HPP

#include <functional>

#include "vfc/linalg.hpp"

namespace vfc {

using RealFn = std::function<Vec(const Vec&)>;

inline Mat fd_jacobian(const RealFn& f, const Vec& x, double h = 1e-6) {
  Vec f0 = f(x);
  Mat j(f0.size(), x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    Vec xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    j.col(c) = (f(xp) - f(xm)) / (2 * h);
  }
  return j;
}

struct NewtonOptions {
  int max_iter = 40;
  double tol = 1e-11;
  double fd_step = 1e-6;
  double max_step = 0.5;  // per-iteration step clamp
};

struct NewtonResult {
  bool converged = false;
  Vec x;
  double residual = 0.0;
};

// Gauss-Newton with least-squares steps; works for square and underdetermined
// systems (minimum-norm step via SVD).
inline NewtonResult gauss_newton(const RealFn& f, Vec x, const NewtonOptions& opt = {}) {
  NewtonResult res;
  for (int it = 0; it < opt.max_iter; ++it) {
    Vec fx = f(x);
    double r = fx.norm();
    if (r < opt.tol) {
      res.converged = true;
      res.x = x;
      res.residual = r;
      return res;
    }
    Mat j = fd_jacobian(f, x, opt.fd_step);
    Eigen::JacobiSVD<Mat> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    Vec step = svd.solve(fx);
    double len = step.norm();
    if (len > opt.max_step) step *= opt.max_step / len;
    x -= step;
  }
  Vec fx = f(x);
  res.converged = fx.norm() < opt.tol * 10;
  res.x = x;
  res.residual = fx.norm();
  return res;
}

}  // namespace vfc

#endif
