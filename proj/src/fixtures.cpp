#include "vfc/fixtures.hpp"

#include <cmath>

namespace vfc::fixtures {

using kcat::FiniteGroup;
using kcat::Level;
using charts::StratumPoint;

namespace {

Region box_region(std::vector<double> lo, std::vector<double> hi) {
  Region r;
  r.boxes.push_back(Box{std::move(lo), std::move(hi)});
  return r;
}

tropical::Polytope halfline() {
  tropical::Constraint c;
  c.normal = {Int(1)};
  c.offset = 0;
  return tropical::Polytope::from_constraints(1, {c});
}

tropical::Polytope segment01() {
  tropical::Constraint a, b;
  a.normal = {Int(1)};
  a.offset = 0;
  b.normal = {Int(-1)};
  b.offset = -1;
  return tropical::Polytope::from_constraints(1, {a, b});
}

KChart plane_chart(int id, const std::string& section_expr) {
  KChart c;
  c.id = id;
  c.n = 2;
  c.m = 0;
  c.d = 1;
  c.F = box_region({-2, -2}, {2, 2});
  c.Fp = box_region({-2.4, -2.4}, {2.4, 2.4});
  c.Fs = box_region({-3, -3}, {3, 3});
  c.U = box_region({-2.75, -2.75}, {2.75, 2.75});
  c.group = FiniteGroup::trivial(2, 0);
  c.dbar_exprs[-1] = parse_expr_list({section_expr});
  c.orientation = 1;
  return c;
}

}  // namespace

KuranishiCategory plane_category(const std::string& section_expr) {
  TargetSpace z;  // a point
  return kcat::build_kuranishi({plane_chart(0, section_expr)}, {}, {}, z);
}

KuranishiCategory equivariant_z2_category() {
  KChart c = plane_chart(0, "(u1 + i*u2)^2");
  c.group = FiniteGroup::cyclic_rotation(2, 0, 0, 1, 2);
  TargetSpace z;
  return kcat::build_kuranishi({c}, {}, {}, z);
}

KuranishiCategory t1_halfline_category() {
  KChart c;
  c.id = 0;
  c.n = 0;
  c.m = 1;
  c.d = 1;
  c.polytope = halfline();
  c.F = box_region({-2}, {2});
  c.Fp = box_region({-2.4}, {2.4});
  c.Fs = box_region({-3}, {3});
  c.U = box_region({-2.75}, {2.75});
  c.group = FiniteGroup::trivial(0, 1);
  // Smooth part at the vertex stratum; the holomorphic locus sits in the
  // positive tropical strata, so the cutoff core is pinned over all of F and
  // the perturbed zero must land in the vertex stratum.
  c.dbar_exprs[-1] = parse_expr_list({"z1"});
  c.core_hint = box_region({-2}, {2});
  TargetSpace z;
  return kcat::build_kuranishi({c}, {}, {}, z);
}

KuranishiCategory two_vertex_category() {
  KChart c;
  c.id = 0;
  c.n = 0;
  c.m = 1;
  c.d = 1;
  c.polytope = segment01();
  c.F = box_region({-2}, {2});
  c.Fp = box_region({-2.4}, {2.4});
  c.Fs = box_region({-3}, {3});
  c.U = box_region({-2.75}, {2.75});
  c.group = FiniteGroup::trivial(0, 1);
  c.dbar_exprs[0] = parse_expr_list({"z1 - 1"});   // vertex t = 0
  c.dbar_exprs[1] = parse_expr_list({"z1 + 1"});   // vertex t = 1
  TargetSpace z;
  return kcat::build_kuranishi({c}, {}, {}, z);
}

KuranishiCategory circle_category() {
  KChart c;
  c.id = 0;
  c.n = 3;
  c.m = 0;
  c.d = 1;
  c.F = box_region({-2, -2, -2}, {2, 2, 2});
  c.Fp = box_region({-2.4, -2.4, -2.4}, {2.4, 2.4, 2.4});
  c.Fs = box_region({-3, -3, -3}, {3, 3, 3});
  c.U = box_region({-2.75, -2.75, -2.75}, {2.75, 2.75, 2.75});
  c.group = FiniteGroup::trivial(3, 0);
  c.dbar_exprs[-1] = parse_expr_list({"u1^2 + u2^2 - 1 + i*u3"});
  TargetSpace z;
  return kcat::build_kuranishi({c}, {}, {}, z);
}

KuranishiCategory torus_circles_category() {
  KChart c;
  c.id = 0;
  c.n = 1;
  c.m = 1;
  c.d = 1;
  c.polytope = halfline();
  c.F = box_region({-2, -2}, {2, 2});          // (u1, log|z1|)
  c.Fp = box_region({-2.4, -2.4}, {2.4, 2.4});
  c.Fs = box_region({-3, -3}, {3, 3});
  c.U = box_region({-2.75, -2.75}, {2.75, 2.75});
  c.group = FiniteGroup::trivial(1, 1);
  c.dbar_exprs[-1] =
      parse_expr_list({"log(abs(z1))^2 + u1^2 - 1/4 + i * im(z1)/abs(z1)"});
  TargetSpace z;
  return kcat::build_kuranishi({c}, {}, {}, z);
}

KuranishiCategory inclusion_pair_category() {
  KChart small = plane_chart(0, "u1 + i*u2");
  KChart big;
  big.id = 1;
  big.n = 4;
  big.m = 0;
  big.d = 2;
  big.F = box_region({-2, -2, -2, -2}, {2, 2, 2, 2});
  big.Fp = box_region({-2.4, -2.4, -2.4, -2.4}, {2.4, 2.4, 2.4, 2.4});
  big.Fs = box_region({-3, -3, -3, -3}, {3, 3, 3, 3});
  big.U = box_region({-2.75, -2.75, -2.75, -2.75}, {2.75, 2.75, 2.75, 2.75});
  big.group = FiniteGroup::trivial(4, 0);
  big.dbar_exprs[-1] = parse_expr_list({"u1 + i*u2", "u3 + i*u4"});

  Transition t;
  t.i = 0;
  t.j = 1;
  t.param_chart = 0;
  t.domain = box_region({-1.5, -1.5}, {1.5, 1.5});
  t.to_i = [](const StratumPoint& p) { return p; };
  t.to_j = [](const StratumPoint& p) {
    StratumPoint q = p;
    q.u = {p.u[0], p.u[1], 0.0, 0.0};
    return q;
  };
  t.from_i = [](const StratumPoint& p) { return p; };
  t.from_j = [](const StratumPoint& p) {
    StratumPoint q = p;
    q.u = {p.u[0], p.u[1]};
    return q;
  };
  t.image_in_i = t.domain;
  t.image_in_j = box_region({-1.5, -1.5, -0.2, -0.2}, {1.5, 1.5, 0.2, 0.2});

  CMat inc(2, 1);
  inc << Cx(1, 0), Cx(0, 0);
  std::map<std::pair<int, int>, CMat> incs;
  incs[{0, 1}] = inc;
  TargetSpace z;
  return kcat::build_kuranishi({small, big}, {t}, std::move(incs), z);
}

KuranishiCategory three_chart_category() {
  auto annulus_chart = [&](int id, double shalf, const std::string& expr, FiniteGroup group) {
    KChart c;
    c.id = id;
    c.n = 0;
    c.m = 1;
    c.d = 1;
    c.polytope = halfline();
    c.F = box_region({-shalf}, {shalf});
    c.Fp = box_region({-shalf - 0.25}, {shalf + 0.25});
    c.Fs = box_region({-shalf - 0.6}, {shalf + 0.6});
    c.U = box_region({-shalf - 0.42}, {shalf + 0.42});
    c.group = std::move(group);
    c.dbar_exprs[-1] = parse_expr_list({expr});
    c.orientation = 1;
    return c;
  };
  // w-chart, v-chart (w = v^2), t-chart (w = t^3); zeros of w - 6/5.
  KChart w = annulus_chart(0, 1.5, "z1 - 6/5", FiniteGroup::trivial(0, 1));
  KChart v = annulus_chart(1, 0.7, "z1^2 - 6/5", FiniteGroup::cyclic_phase(0, 1, 0, 2));
  KChart t = annulus_chart(2, 0.45, "z1^3 - 6/5", FiniteGroup::cyclic_phase(0, 1, 0, 3));

  auto power_transition = [&](int cover_id, int k) {
    Transition tr;
    tr.i = 0;            // base chart w
    tr.j = cover_id;     // covering chart (equal dimension)
    tr.param_chart = cover_id;
    const KChart& cover = cover_id == 1 ? v : t;
    tr.domain = cover.F;
    tr.to_i = [k](const StratumPoint& p) {
      StratumPoint q = p;
      q.z[0] = std::pow(p.z[0], k);
      return q;
    };
    tr.to_j = [](const StratumPoint& p) { return p; };
    // Declared branch of the k-th root (principal).
    tr.from_i = [k](const StratumPoint& p) {
      StratumPoint q = p;
      q.z[0] = std::pow(p.z[0], 1.0 / k);
      return q;
    };
    tr.from_j = [](const StratumPoint& p) { return p; };
    // w-image of the cover region: |w| in [e^{-k s}, e^{k s}].
    double shalf = cover.F.boxes[0].hi[0];
    tr.image_in_i = box_region({-double(k) * shalf}, {double(k) * shalf});
    tr.image_in_j = cover.F;
    return tr;
  };
  Transition t01 = power_transition(1, 2);
  Transition t02 = power_transition(2, 3);

  std::map<std::pair<int, int>, CMat> incs;
  CMat one = CMat::Identity(1, 1);
  // All bundles are the same C; identity inclusions in every direction keep
  // the cutoff bookkeeping across 2-leg overlaps honest.
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (a != b) incs[{a, b}] = one;
  TargetSpace z;
  return kcat::build_kuranishi({w, v, t}, {t01, t02}, std::move(incs), z);
}

KuranishiCategory plane_times_r_category(const std::string& section_expr) {
  KChart c;
  c.id = 0;
  c.n = 3;
  c.m = 0;
  c.d = 1;
  c.F = box_region({-2, -2, -1}, {2, 2, 1});
  c.Fp = box_region({-2.4, -2.4, -1.2}, {2.4, 2.4, 1.2});
  c.Fs = box_region({-3, -3, -1.5}, {3, 3, 1.5});
  c.U = box_region({-2.75, -2.75, -1.35}, {2.75, 2.75, 1.35});
  c.group = FiniteGroup::trivial(3, 0);
  c.dbar_exprs[-1] = parse_expr_list({section_expr});
  c.base_u_coords = {2};
  TargetSpace z;
  z.dim = 1;
  z.bounds = Box{{-1}, {1}};
  return kcat::build_kuranishi({c}, {}, {}, z);
}

}  // namespace vfc::fixtures
