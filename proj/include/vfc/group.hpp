#ifndef VFC_GROUP_HPP
#define VFC_GROUP_HPP

#include <vector>

#include "vfc/charts.hpp"
#include "vfc/linalg.hpp"

namespace vfc::kcat {

using charts::Cx;
using charts::StratumPoint;

// Chart automorphism: affine orthogonal-ish map on u, monomial map on z
// (permutation, phase, optional conjugation). Fixes the tropical part.
struct GroupElement {
  Mat a;                    // n x n
  Vec b;                    // n
  std::vector<int> perm;    // z'_j = phase[j] * (conj?) z[perm[j]]
  std::vector<Cx> phase;
  std::vector<bool> conj_z;

  static GroupElement identity(int n, int m);

  StratumPoint apply(const StratumPoint& p) const;
  GroupElement compose_after(const GroupElement& inner) const;  // this(inner(x))
  GroupElement inverse() const;
  bool approx_equal(const GroupElement& o, double tol = 1e-9) const;
  bool orientation_preserving() const;
};

class FiniteGroup {
 public:
  FiniteGroup() = default;

  static FiniteGroup trivial(int n, int m);
  // z_index phase rotation of order k.
  static FiniteGroup cyclic_phase(int n, int m, int z_index, int order);
  // rotation by 2*pi/order in the (u_axis0, u_axis1) plane.
  static FiniteGroup cyclic_rotation(int n, int m, int axis0, int axis1, int order);
  // Closure of the generators; throws GROUP_NOT_CLOSED past max_order.
  static FiniteGroup generated(int n, int m, const std::vector<GroupElement>& gens, int max_order = 64);

  std::size_t size() const { return elems_.size(); }
  const GroupElement& elem(std::size_t i) const { return elems_[i]; }
  const std::vector<GroupElement>& elements() const { return elems_; }

  // Index of the product elem(i) . elem(j); fails GROUP_NOT_CLOSED if missing.
  int compose_index(int i, int j) const;
  int inverse_index(int i) const;

  void verify_closure() const;

 private:
  std::vector<GroupElement> elems_;  // elems_[0] = identity
};

}  // namespace vfc::kcat

#endif
