#ifndef VFC_LINALG_HPP
#define VFC_LINALG_HPP

#include <Eigen/Dense>
#include <complex>

namespace vfc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline double smallest_singular_value(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

// Real 2r x 2c representation of a complex matrix, blocks [re -im; im re].
inline Mat complex_to_real(const CMat& c) {
  Mat r(2 * c.rows(), 2 * c.cols());
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      r(2 * i, 2 * j) = c(i, j).real();
      r(2 * i, 2 * j + 1) = -c(i, j).imag();
      r(2 * i + 1, 2 * j) = c(i, j).imag();
      r(2 * i + 1, 2 * j + 1) = c(i, j).real();
    }
  return r;
}

// Interleaved real coordinates (Re w_1, Im w_1, ...) of a complex vector.
inline Vec complex_to_real(const CVec& c) {
  Vec r(2 * c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    r(2 * i) = c(i).real();
    r(2 * i + 1) = c(i).imag();
  }
  return r;
}

inline CVec real_to_complex(const Vec& r) {
  CVec c(r.size() / 2);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = {r(2 * i), r(2 * i + 1)};
  return c;
}

}  // namespace vfc

#endif
