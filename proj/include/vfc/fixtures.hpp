#ifndef VFC_FIXTURES_HPP
#define VFC_FIXTURES_HPP

#include "vfc/kcat.hpp"

namespace vfc::fixtures {

using kcat::KChart;
using kcat::KuranishiCategory;
using kcat::TargetSpace;
using kcat::Transition;

// Shared desk-scale categories. Every builder returns a validated category.

// Single chart over R^2 = C, trivial group, V = C, one of the standard
// sections: "z", "z^2", "conj(z)"; the evaluation map to A = R is u1.
KuranishiCategory plane_category(const std::string& section_expr);

// Same chart with the Z/2 rotation action (u -> -u) and the invariant z^2.
KuranishiCategory equivariant_z2_category();

// The single-chart category over T^1_[0,inf): V = C, dbar = smooth part.
KuranishiCategory t1_halfline_category();

// Chart over T^1_[0,1] with one zero per vertex stratum.
KuranishiCategory two_vertex_category();

// Compact 1-dimensional holomorphic locus: dbar = (u1^2+u2^2-1) + i u3.
KuranishiCategory circle_category();

// Closed zero curves inside a (C*)-stratum: n=1, m=1 chart.
KuranishiCategory torus_circles_category();

// Two charts with V_0 inside V_1 along the cut locus u3 = u4 = 0.
KuranishiCategory inclusion_pair_category();

// Orbifold annulus with charts w, v (w = v^2, Z/2) and t (w = t^3, Z/3).
KuranishiCategory three_chart_category();

// K0 x R over Z = R with the base map reading u3.
KuranishiCategory plane_times_r_category(const std::string& section_expr);

struct EvalToLine {
  // pi: K -> A = R reading a smooth coordinate.
  int u_coord = 0;
  Box a_bounds{{-3.0}, {3.0}};
};

}  // namespace vfc::fixtures

#endif
