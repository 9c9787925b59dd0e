#include <cmath>

#include "doctest.h"
#include "vfc/branched.hpp"
#include "vfc/errors.hpp"
#include "vfc/fixtures.hpp"
#include "vfc/vint.hpp"

using namespace vfc;
using namespace vfc::vint;
using charts::CovectorKind;
using charts::Form;
using charts::FormFlags;
using kcat::Level;
using kcat::StratumPoint;

namespace {

struct Rig {
  kcat::KuranishiCategory k;
  kcat::CutoffFamily cutoffs;
  kcat::Metric metric;
  branched::WBCover cover;
  vclass::VirtualClass vc;
  PartitionOfUnity part;
};

Rig make_rig(kcat::KuranishiCategory k, std::uint64_t seed = 2024) {
  Rig r{std::move(k), {}, {}, {}, {}, {}};
  r.cutoffs = kcat::choose_cutoffs(r.k);
  r.metric = kcat::choose_metric(r.k, r.cutoffs);
  r.cover = branched::standard_cover(r.k, r.cutoffs);
  r.vc = vclass::build_virtual_class(r.k, r.cutoffs, r.metric, r.cover, seed);
  r.part = build_partition(r.k, r.cutoffs);
  return r;
}

Form one_form_scalar(double c = 1.0) { return charts::constant_form(c); }

}  // namespace

TEST_CASE("partition of unity: formula cases and fiber sums") {
  SUBCASE("one chart, trivial group: r = 1 on K_C") {
    auto rig = make_rig(fixtures::plane_category("u1 + i*u2"));
    StratumPoint hol = rig.k.hol_samples[0][0];
    CHECK(rig.part.fiber_sum(rig.k, rig.cutoffs, 0, hol) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rig.part.r(rig.k, rig.cutoffs, 0, 0, hol) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("one chart, |G| = 2: r = 1/2, fiber has two points, sum 1") {
    auto rig = make_rig(fixtures::equivariant_z2_category());
    StratumPoint hol = rig.k.hol_samples[0][0];
    CHECK(rig.part.r(rig.k, rig.cutoffs, 0, 0, hol) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(rig.part.fiber_sum(rig.k, rig.cutoffs, 0, hol) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("three overlapping charts: fiber sums are 1 at sampled K_C points") {
    auto rig = make_rig(fixtures::three_chart_category());
    int checked = 0;
    for (std::size_t ci = 0; ci < rig.k.charts.size(); ++ci)
      for (const auto& p : rig.k.hol_samples[ci]) {
        CHECK(rig.part.fiber_sum(rig.k, rig.cutoffs, rig.k.charts[ci].id, p) ==
              doctest::Approx(1.0).epsilon(1e-7));
        ++checked;
      }
    CHECK(checked >= 6);
  }
}

TEST_CASE("integrate_vclass: the standard counts") {
  SUBCASE("dbar = z integrates 1 to 1") {
    auto rig = make_rig(fixtures::plane_category("u1 + i*u2"));
    double v = integrate_vclass(rig.k, rig.cutoffs, rig.vc, one_form_scalar(), rig.part);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("dbar = z^2 integrates 1 to 2") {
    auto rig = make_rig(fixtures::plane_category("(u1 + i*u2)^2"));
    double v = integrate_vclass(rig.k, rig.cutoffs, rig.vc, one_form_scalar(), rig.part);
    CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("dbar = conj(z) integrates 1 to -1") {
    auto rig = make_rig(fixtures::plane_category("conj(u1 + i*u2)"));
    double v = integrate_vclass(rig.k, rig.cutoffs, rig.vc, one_form_scalar(), rig.part);
    CHECK(v == doctest::Approx(-1.0).epsilon(1e-9));
  }
  SUBCASE("equivariant Z/2 fixture integrates 1 to 1 (orbit counted once)") {
    auto rig = make_rig(fixtures::equivariant_z2_category());
    double v = integrate_vclass(rig.k, rig.cutoffs, rig.vc, one_form_scalar(), rig.part);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("T^1 halfline fixture integrates 1 to 1") {
    auto rig = make_rig(fixtures::t1_halfline_category());
    double v = integrate_vclass(rig.k, rig.cutoffs, rig.vc, one_form_scalar(), rig.part);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("two-vertex fixture integrates 1 to 2") {
    auto rig = make_rig(fixtures::two_vertex_category());
    double v = integrate_vclass(rig.k, rig.cutoffs, rig.vc, one_form_scalar(), rig.part);
    CHECK(v == doctest::Approx(2.0).epsilon(1e-8));
  }
  SUBCASE("degree mismatch is rejected") {
    auto rig = make_rig(fixtures::plane_category("u1 + i*u2"));
    Form du = charts::monomial_form([](const StratumPoint&) { return 1.0; }, {{CovectorKind::du, 0}},
                                    FormFlags{true, true, false});
    CHECK_THROWS_WITH_AS(integrate_vclass(rig.k, rig.cutoffs, rig.vc, du, rig.part),
                         doctest::Contains("DEGREE_MISMATCH"), Error);
  }
}

TEST_CASE("partition independence and Stokes on the circle fixture") {
  auto rig = make_rig(fixtures::circle_category());
  // theta = closed 1-form du1 restricted: integral over the perturbed circle.
  Form du1 = charts::monomial_form([](const StratumPoint&) { return 1.0; }, {{CovectorKind::du, 0}},
                                   FormFlags{true, true, false});
  double v1 = integrate_vclass(rig.k, rig.cutoffs, rig.vc, du1, rig.part);
  CHECK(std::abs(v1) < 1e-7);  // closed form on a closed curve in R^3

  // A second, differently shaped partition gives the same integral.
  auto part2 = build_partition(rig.k, rig.cutoffs, 0.22);
  double v2 = integrate_vclass(rig.k, rig.cutoffs, rig.vc, du1, part2);
  CHECK(v1 == doctest::Approx(v2).epsilon(1e-7));

  // Stokes: d of a compactly supported function integrates to zero.
  Form f = charts::scalar_form([](const StratumPoint& p) {
    return std::sin(p.u[0]) * std::exp(-p.u[1]) + 0.3 * p.u[2];
  });
  double vs = integrate_vclass(rig.k, rig.cutoffs, rig.vc, charts::d(f), rig.part);
  CHECK(std::abs(vs) < 1e-6);
}

TEST_CASE("pushforward") {
  SUBCASE("A = point reduces to the integral") {
    auto rig = make_rig(fixtures::plane_category("u1 + i*u2"));
    TargetA a;
    a.dim = 0;
    a.pi[0] = [](const StratumPoint&) { return Vec::Zero(0); };
    auto cfg = PushforwardConfig::standard(0);
    auto pushed = pushforward(rig.k, rig.cutoffs, rig.vc, a, one_form_scalar(), cfg, rig.part);
    CHECK(pushed({}, Mat()) == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("point class pushes to a unit-mass 1-form on R") {
    auto rig = make_rig(fixtures::plane_category("u1 + i*u2"));
    TargetA a;
    a.dim = 1;
    a.bounds = Box{{-3}, {3}};
    a.pi[0] = [](const StratumPoint& p) {
      Vec v(1);
      v(0) = p.u[0];
      return v;
    };
    auto cfg = PushforwardConfig::standard(1, 0.8);
    cfg.grid_per_axis = 641;  // interpolation budget inside the 1e-6 check
    auto pushed = pushforward(rig.k, rig.cutoffs, rig.vc, a, one_form_scalar(), cfg, rig.part);
    REQUIRE(pushed.degree() == 1);
    // adjunction oracle: total integral of pi_!(1) is the count 1.
    double total = pushed.integral_against([](const Vec&) { return 1.0; });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("d commutes with the pushforward on the circle fixture") {
    auto rig = make_rig(fixtures::circle_category());
    TargetA a;
    a.dim = 1;
    a.bounds = Box{{-3}, {3}};
    a.pi[0] = [](const StratumPoint& p) {
      Vec v(1);
      v(0) = p.u[0];
      return v;
    };
    auto cfg = PushforwardConfig::standard(1, 1.2);
    cfg.grid_per_axis = 241;
    Form f = charts::scalar_form([](const StratumPoint& p) { return std::sin(1.3 * p.u[0]) + p.u[1]; });
    auto push_df = pushforward(rig.k, rig.cutoffs, rig.vc, a, charts::d(f), cfg, rig.part);
    auto push_f = pushforward(rig.k, rig.cutoffs, rig.vc, a, f, cfg, rig.part);
    REQUIRE(push_df.degree() == 1);
    REQUIRE(push_f.degree() == 0);
    // Compare d(push_f) with push_df at grid nodes (node values carry no
    // interpolation error) through a 5-point stencil.
    double h = (a.bounds.hi[0] - a.bounds.lo[0]) / (cfg.grid_per_axis - 1);
    Mat e1(1, 1);
    e1(0, 0) = 1.0;
    auto value0 = [&](double x) {
      Vec av(1);
      av(0) = x;
      return push_f(av, Mat::Zero(1, 0));
    };
    for (int node : {60, 90, 120, 150, 180}) {
      double x = a.bounds.lo[0] + node * h;
      Vec av(1);
      av(0) = x;
      double lhs = push_df(av, e1);
      double rhs = (-value0(x + 2 * h) + 8 * value0(x + h) - 8 * value0(x - h) + value0(x - 2 * h)) /
                   (12 * h);
      CHECK(lhs == doctest::Approx(rhs).epsilon(2e-5));
    }
  }
}

TEST_CASE("chern_c1") {
  auto chart = fixtures::plane_category("u1 + i*u2").charts[0].chart(Level::F);
  SUBCASE("trivial connection gives zero") {
    Form zero_alpha = charts::monomial_form([](const StratumPoint&) { return 0.0; },
                                            {{CovectorKind::du, 0}}, FormFlags{true, true, false});
    Form c1 = chern_c1(zero_alpha);
    StratumPoint p = chart.make_point(0, {0.2, -0.3}, {});
    CHECK(std::abs(c1(p, {charts::Tangent{1, 0}, charts::Tangent{0, 1}})) < 1e-9);
  }
  SUBCASE("curvature i omega gives omega / (2 pi)") {
    // alpha = x dy: d alpha = dx ^ dy, so c1 should be (dx ^ dy) / (2 pi).
    Form alpha = charts::monomial_form([](const StratumPoint& p) { return p.u[0]; },
                                       {{CovectorKind::du, 1}}, FormFlags{true, true, false});
    Form c1 = chern_c1(alpha);
    StratumPoint p = chart.make_point(0, {0.4, 0.1}, {});
    double got = c1(p, {charts::Tangent{1, 0}, charts::Tangent{0, 1}});
    CHECK(got == doctest::Approx(1.0 / (2 * M_PI)).epsilon(1e-6));
    CHECK(c1.flags().generated_by_functions);
    // dc1 = 0 sampled
    Form dc1 = charts::d(c1);
    // degree 3 > chart dim handled by evaluation on 3 vectors in R^2: zero
    // by alternation; sample d^2 alpha instead through a wedge check.
    (void)dc1;
  }
  SUBCASE("Whitney: c1 of a sum connection adds") {
    Form a1 = charts::monomial_form([](const StratumPoint& p) { return 0.5 * p.u[0]; },
                                    {{CovectorKind::du, 1}}, FormFlags{true, true, false});
    Form a2 = charts::monomial_form([](const StratumPoint& p) { return -1.5 * p.u[0]; },
                                    {{CovectorKind::du, 1}}, FormFlags{true, true, false});
    Form both = charts::add(a1, a2);
    StratumPoint p = chart.make_point(0, {-0.2, 0.6}, {});
    std::vector<charts::Tangent> vs{{1, 0}, {0, 1}};
    CHECK(chern_c1(both)(p, vs) ==
          doctest::Approx(chern_c1(a1)(p, vs) + chern_c1(a2)(p, vs)).epsilon(1e-6));
  }
}

TEST_CASE("tropical decomposition") {
  SUBCASE("m = 0 chart: single tropical point carries everything") {
    auto rig = make_rig(fixtures::plane_category("u1 + i*u2"));
    auto rep = check_decomposition(rig.k, rig.cutoffs, rig.vc, rig.part, one_form_scalar());
    REQUIRE(rep.contributions.size() == 1);
    CHECK(rep.sum() == doctest::Approx(rep.total).epsilon(1e-10));
  }
  SUBCASE("T^1 halfline fixture decomposes at its vertex") {
    auto rig = make_rig(fixtures::t1_halfline_category());
    auto rep = check_decomposition(rig.k, rig.cutoffs, rig.vc, rig.part, one_form_scalar());
    REQUIRE(rep.contributions.size() == 1);
    CHECK(rep.total == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rep.sum() == doctest::Approx(rep.total).epsilon(1e-8));
  }
  SUBCASE("two-vertex fixture splits 2 = 1 + 1") {
    auto rig = make_rig(fixtures::two_vertex_category());
    auto rep = check_decomposition(rig.k, rig.cutoffs, rig.vc, rig.part, one_form_scalar());
    REQUIRE(rep.contributions.size() == 2);
    CHECK(rep.contributions[0].second == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rep.contributions[1].second == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rep.sum() == doctest::Approx(rep.total).epsilon(1e-8));
  }
  SUBCASE("non-function-generated forms are rejected") {
    auto rig = make_rig(fixtures::t1_halfline_category());
    Form raw = charts::constant_form(1.0, FormFlags{true, false, false});
    CHECK_THROWS_WITH_AS(check_decomposition(rig.k, rig.cutoffs, rig.vc, rig.part, raw),
                         doctest::Contains("REJECTED"), Error);
  }
}

TEST_CASE("partition with a pinned neighborhood freezes r = 1/|G|") {
  auto rig = make_rig(fixtures::equivariant_z2_category());
  Region n_region;
  n_region.boxes.push_back(Box{{-0.2, -0.2}, {0.2, 0.2}});
  auto pinned = build_partition(rig.k, rig.cutoffs, 0.35, std::make_pair(0, n_region));
  auto chart = rig.k.charts[0].chart(Level::F);
  StratumPoint p = chart.make_point(0, {0.1, -0.05}, {});
  CHECK(pinned.r(rig.k, rig.cutoffs, 0, 0, p) == doctest::Approx(0.5).epsilon(1e-9));
}
