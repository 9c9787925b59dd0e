#include "vfc/group.hpp"

#include <cmath>

#include "vfc/errors.hpp"

namespace vfc::kcat {

GroupElement GroupElement::identity(int n, int m) {
  GroupElement g;
  g.a = Mat::Identity(n, n);
  g.b = Vec::Zero(n);
  g.perm.resize(m);
  for (int j = 0; j < m; ++j) g.perm[j] = j;
  g.phase.assign(m, Cx(1, 0));
  g.conj_z.assign(m, false);
  return g;
}

StratumPoint GroupElement::apply(const StratumPoint& p) const {
  StratumPoint q = p;
  const int n = p.n(), m = p.m();
  if (n > 0) {
    Vec u(n);
    for (int i = 0; i < n; ++i) u(i) = p.u[i];
    Vec v = a * u + b;
    for (int i = 0; i < n; ++i) q.u[i] = v(i);
  }
  for (int j = 0; j < m; ++j) {
    Cx w = p.z[perm[j]];
    if (conj_z[j]) w = std::conj(w);
    q.z[j] = phase[j] * w;
  }
  return q;
}

GroupElement GroupElement::compose_after(const GroupElement& inner) const {
  GroupElement g;
  g.a = a * inner.a;
  g.b = a * inner.b + b;
  const int m = static_cast<int>(perm.size());
  g.perm.resize(m);
  g.phase.resize(m);
  g.conj_z.resize(m);
  for (int j = 0; j < m; ++j) {
    // this: z'_j = phase[j] * C(conj_z[j]) z[perm[j]]
    // inner: z[k] = inner.phase[k] * C(inner.conj_z[k]) z0[inner.perm[k]]
    int k = perm[j];
    g.perm[j] = inner.perm[k];
    Cx inner_phase = inner.phase[k];
    if (conj_z[j]) inner_phase = std::conj(inner_phase);
    g.phase[j] = phase[j] * inner_phase;
    g.conj_z[j] = conj_z[j] != inner.conj_z[k];
  }
  return g;
}

GroupElement GroupElement::inverse() const {
  GroupElement g;
  g.a = a.inverse();
  g.b = -g.a * b;
  const int m = static_cast<int>(perm.size());
  g.perm.resize(m);
  g.phase.resize(m);
  g.conj_z.resize(m);
  for (int j = 0; j < m; ++j) {
    int k = perm[j];
    g.perm[k] = j;
    Cx ph = Cx(1, 0) / phase[j];
    if (conj_z[j]) ph = std::conj(ph);
    g.phase[k] = ph;
    g.conj_z[k] = conj_z[j];
  }
  return g;
}

bool GroupElement::approx_equal(const GroupElement& o, double tol) const {
  if (perm != o.perm || conj_z != o.conj_z) return false;
  if (a.size() > 0 && (a - o.a).cwiseAbs().maxCoeff() > tol) return false;
  if (b.size() > 0 && (b - o.b).cwiseAbs().maxCoeff() > tol) return false;
  for (std::size_t j = 0; j < phase.size(); ++j)
    if (std::abs(phase[j] - o.phase[j]) > tol) return false;
  return true;
}

bool GroupElement::orientation_preserving() const {
  double det = a.rows() > 0 ? a.determinant() : 1.0;
  // Each conjugated z factor flips the (x, y) plane; permutations of complex
  // coordinates and phase rotations preserve orientation.
  int flips = 0;
  for (bool c : conj_z) flips += c ? 1 : 0;
  return det * (flips % 2 == 0 ? 1.0 : -1.0) > 0.0;
}

FiniteGroup FiniteGroup::trivial(int n, int m) {
  FiniteGroup g;
  g.elems_.push_back(GroupElement::identity(n, m));
  return g;
}

FiniteGroup FiniteGroup::cyclic_phase(int n, int m, int z_index, int order) {
  GroupElement gen = GroupElement::identity(n, m);
  double th = 2.0 * M_PI / order;
  gen.phase[z_index] = Cx(std::cos(th), std::sin(th));
  return generated(n, m, {gen}, order + 1);
}

FiniteGroup FiniteGroup::cyclic_rotation(int n, int m, int axis0, int axis1, int order) {
  GroupElement gen = GroupElement::identity(n, m);
  double th = 2.0 * M_PI / order;
  gen.a(axis0, axis0) = std::cos(th);
  gen.a(axis0, axis1) = -std::sin(th);
  gen.a(axis1, axis0) = std::sin(th);
  gen.a(axis1, axis1) = std::cos(th);
  return generated(n, m, {gen}, order + 1);
}

FiniteGroup FiniteGroup::generated(int n, int m, const std::vector<GroupElement>& gens, int max_order) {
  FiniteGroup g;
  g.elems_.push_back(GroupElement::identity(n, m));
  std::vector<GroupElement> frontier = g.elems_;
  while (!frontier.empty()) {
    std::vector<GroupElement> fresh;
    for (const auto& e : frontier)
      for (const auto& gen : gens) {
        GroupElement w = gen.compose_after(e);
        bool known = false;
        for (const auto& k : g.elems_) known = known || w.approx_equal(k);
        for (const auto& k : fresh) known = known || w.approx_equal(k);
        if (!known) fresh.push_back(std::move(w));
      }
    for (auto& w : fresh) {
      if (static_cast<int>(g.elems_.size()) >= max_order)
        throw err_group_not_closed("generator words exceed the order cap " + std::to_string(max_order));
      g.elems_.push_back(w);
    }
    frontier = std::move(fresh);
  }
  g.verify_closure();
  return g;
}

int FiniteGroup::compose_index(int i, int j) const {
  GroupElement w = elems_[i].compose_after(elems_[j]);
  for (std::size_t k = 0; k < elems_.size(); ++k)
    if (w.approx_equal(elems_[k])) return static_cast<int>(k);
  throw err_group_not_closed("product of elements " + std::to_string(i) + "," + std::to_string(j) +
                             " escapes the element list");
}

int FiniteGroup::inverse_index(int i) const {
  GroupElement w = elems_[i].inverse();
  for (std::size_t k = 0; k < elems_.size(); ++k)
    if (w.approx_equal(elems_[k])) return static_cast<int>(k);
  throw err_group_not_closed("inverse of element " + std::to_string(i) + " escapes the element list");
}

void FiniteGroup::verify_closure() const {
  for (std::size_t i = 0; i < elems_.size(); ++i) {
    if (!elems_[i].orientation_preserving())
      throw err_group_not_closed("element " + std::to_string(i) + " reverses orientation");
    for (std::size_t j = 0; j < elems_.size(); ++j) compose_index(static_cast<int>(i), static_cast<int>(j));
    inverse_index(static_cast<int>(i));
  }
}

}  // namespace vfc::kcat
