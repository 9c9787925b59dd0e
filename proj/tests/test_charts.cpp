#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vfc/charts.hpp"
#include "vfc/errors.hpp"
#include "vfc/tropical.hpp"

using namespace vfc;
using namespace vfc::charts;

namespace {

tropical::Polytope segment01() {
  using tropical::Constraint;
  Constraint a, b;
  a.normal = {Int(1)};
  a.offset = 0;
  b.normal = {Int(-1)};
  b.offset = -1;
  return tropical::Polytope::from_constraints(1, {a, b});
}

ExplodedChart plane_chart(double halfwidth = 2.0) {
  Region r;
  r.boxes.push_back(Box{{-halfwidth, -halfwidth}, {halfwidth, halfwidth}});
  return ExplodedChart(2, 0, tropical::Polytope::full_space(0), r);
}

ExplodedChart segment_chart() {
  Region r;
  r.boxes.push_back(Box{{-2.0}, {2.0}});  // s = log|z| range
  return ExplodedChart(0, 1, segment01(), r);
}

// Smooth (s, phi) bump of known mass, the same over both vertex strata.
double bump_coeff(const StratumPoint& p) {
  double s = std::log(std::abs(p.z[0]));
  double phi = std::arg(p.z[0]);
  if (phi < 0) phi += 2 * M_PI;
  auto cube = [](double t) {
    double q = 1 - t * t;
    return q > 0 ? q * q * q : 0.0;
  };
  return cube(s) * cube((phi - M_PI) / 2.0);
}

}  // namespace

TEST_CASE("strata enumeration over polytopes") {
  CHECK(segment_chart().strata().size() == 2);  // P = [0,1]
  using tropical::Constraint;
  Constraint a;
  a.normal = {Int(1)};
  a.offset = 0;
  Region r;
  r.boxes.push_back(Box{{-2.0}, {2.0}});
  ExplodedChart ray(0, 1, tropical::Polytope::from_constraints(1, {a}), r);
  CHECK(ray.strata().size() == 1);  // single vertex stratum over [0,inf)
  ExplodedChart line(0, 1, tropical::Polytope::full_space(1), r);
  CHECK(line.strata().empty());  // R: contributes nothing
}

TEST_CASE("wedge and exterior derivative basics") {
  auto chart = plane_chart();
  Form dx = monomial_form([](const StratumPoint&) { return 1.0; }, {{CovectorKind::du, 0}},
                          {true, true, false});
  Form dy = monomial_form([](const StratumPoint&) { return 1.0; }, {{CovectorKind::du, 1}},
                          {true, true, false});
  Form dxdy = wedge(dx, dy);
  StratumPoint p = chart.make_point(0, {0.3, -0.4}, {});
  Tangent ex{1, 0}, ey{0, 1};
  CHECK(dxdy(p, {ex, ey}) == doctest::Approx(1.0));
  CHECK(dxdy(p, {ey, ex}) == doctest::Approx(-1.0));

  Form c = constant_form(4.0);
  Form dc = d(c);
  CHECK(dc(p, {ex}) == doctest::Approx(0.0).epsilon(1e-9));

  // d^2 = 0 within 1e-6 on samples.
  Form f = scalar_form([](const StratumPoint& q) { return q.u[0] * q.u[0] * q.u[1] + std::sin(q.u[1]); });
  Form ddf = d(d(f));
  CHECK(std::abs(ddf(p, {ex, ey})) < 1e-6);

  // degree bookkeeping errors
  CHECK_THROWS_AS(add(dx, dxdy), Error);
}

TEST_CASE("form validation: multilinearity, alternation, R-nil probes") {
  auto chart = segment_chart();
  Prng rng(7);
  Form good = monomial_form([](const StratumPoint&) { return 1.0; }, {{CovectorKind::dlogr, 0}},
                            {false, true, false});
  auto rep = validate_form(chart, good, rng);
  CHECK(rep.multilinear_ok);
  CHECK(rep.rnil_ok);

  // dphi is not generated by functions: flagging it so must trip the probe.
  Form bad = monomial_form([](const StratumPoint&) { return 1.0; }, {{CovectorKind::dphi, 0}},
                           {false, true, false});
  Prng rng2(7);
  CHECK_FALSE(validate_form(chart, bad, rng2).rnil_ok);
}

TEST_CASE("integrate_chart: point chart evaluates the 0-form") {
  Region r;
  r.boxes.push_back(Box{});  // zero-dimensional box
  ExplodedChart pt(0, 0, tropical::Polytope::full_space(0), r);
  Form theta = constant_form(2.25);
  CHECK(integrate_chart(pt, theta) == doctest::Approx(2.25));
}

TEST_CASE("integrate_chart matches midpoint oracle on a plane bump") {
  auto chart = plane_chart();
  auto coeff = [](const StratumPoint& p) {
    double q1 = 1 - p.u[0] * p.u[0], q2 = 1 - p.u[1] * p.u[1];
    return (q1 > 0 && q2 > 0) ? q1 * q1 * q1 * q2 * q2 * q2 : 0.0;
  };
  Form omega = monomial_form(coeff, {{CovectorKind::du, 0}, {CovectorKind::du, 1}}, {true, true, false});
  double got = integrate_chart(chart, omega);
  double oracle = oracles::midpoint_integral({-1, -1}, {1, 1}, 600, [&](const std::vector<double>& x) {
    double q1 = 1 - x[0] * x[0], q2 = 1 - x[1] * x[1];
    return q1 * q1 * q1 * q2 * q2 * q2;
  });
  CHECK(got == doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("two-vertex bump integrates to twice the single-vertex mass") {
  auto chart = segment_chart();
  Form omega = monomial_form(bump_coeff, {{CovectorKind::dlogr, 0}, {CovectorKind::dphi, 0}},
                             {true, false, false});
  double total = integrate_chart(chart, omega);
  // oracle: mass per stratum by direct two-stratum
  // midpoint quadrature in (s, phi).
  double per_vertex = oracles::midpoint_integral({-1, M_PI - 2}, {1, M_PI + 2}, 500,
                                                 [&](const std::vector<double>& x) {
                                                   auto cube = [](double t) {
                                                     double q = 1 - t * t;
                                                     return q > 0 ? q * q * q : 0.0;
                                                   };
                                                   return cube(x[0]) * cube((x[1] - M_PI) / 2.0);
                                                 });
  CHECK(total == doctest::Approx(2.0 * per_vertex).epsilon(1e-6));

  // Ω-membership gate: unflagged top form on an m>0 chart is rejected.
  Form raw = monomial_form(bump_coeff, {{CovectorKind::dlogr, 0}, {CovectorKind::dphi, 0}},
                           {false, false, false});
  CHECK_THROWS_WITH_AS(integrate_chart(chart, raw), doctest::Contains("REJECTED"), Error);
}

TEST_CASE("integration is linear and additive over disjoint supports") {
  auto chart = plane_chart();
  auto bump_at = [](double cx, double cy) {
    return [cx, cy](const StratumPoint& p) {
      double q1 = 1 - (p.u[0] - cx) * (p.u[0] - cx) * 4, q2 = 1 - (p.u[1] - cy) * (p.u[1] - cy) * 4;
      return (q1 > 0 && q2 > 0) ? q1 * q1 * q1 * q2 * q2 * q2 : 0.0;
    };
  };
  std::vector<std::pair<CovectorKind, int>> vol{{CovectorKind::du, 0}, {CovectorKind::du, 1}};
  Form a = monomial_form(bump_at(-1, -1), vol, {true, true, false});
  Form b = monomial_form(bump_at(1, 1), vol, {true, true, false});
  double ia = integrate_chart(chart, a);
  double ib = integrate_chart(chart, b);
  double iab = integrate_chart(chart, add(scale(a, 2.0), b));
  CHECK(iab == doctest::Approx(2 * ia + ib).epsilon(1e-8));
}

TEST_CASE("chart completion and the completion-integration identity") {
  auto chart = segment_chart();
  SUBCASE("m=0 chart completes to itself") {
    auto plane = plane_chart();
    auto done = plane.tropical_completion({});
    CHECK(done.strata().size() == 1);
    CHECK(done.region().boxes.size() == plane.region().boxes.size());
  }
  SUBCASE("[0,1] at vertex 0 becomes [0,inf) and keeps the stratum integral") {
    std::vector<Rat> zero{Rat(0)};
    auto completed = chart.tropical_completion(zero);
    CHECK(completed.strata().size() == 1);
    CHECK(completed.polytope().is_complete());
    Form omega = monomial_form(bump_coeff, {{CovectorKind::dlogr, 0}, {CovectorKind::dphi, 0}},
                               {false, true, false});
    // generated-by-functions forms: integral of the p-stratum restriction
    // equals the integral over the completion.
    double total = integrate_chart(chart, omega);
    double at0 = integrate_chart(completed, complete_form(omega));
    CHECK(at0 == doctest::Approx(0.5 * total).epsilon(1e-7));
  }
  SUBCASE("completion may drop in_omega but keeps refined") {
    Form omega = monomial_form(bump_coeff, {{CovectorKind::dlogr, 0}, {CovectorKind::dphi, 0}},
                               {true, false, false});
    Form done = complete_form(omega);
    CHECK_FALSE(done.flags().in_omega);
    CHECK(done.flags().refined);
  }
}

TEST_CASE("pullback composes evaluators and tangents") {
  auto chart = plane_chart();
  Form dx = monomial_form([](const StratumPoint&) { return 1.0; }, {{CovectorKind::du, 0}},
                          {true, true, false});
  ChartMap doubler;
  doubler.apply = [&](const StratumPoint& p) {
    StratumPoint q = p;
    q.u[0] *= 2.0;
    return q;
  };
  Form pulled = pullback(dx, doubler);
  StratumPoint p = chart.make_point(0, {0.5, 0.5}, {});
  CHECK(pulled(p, {Tangent{1, 0}}) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("degree overflow is rejected by validation") {
  auto chart = plane_chart();
  Form three = Form(3, [](const StratumPoint&, const std::vector<Tangent>&) { return 0.0; },
                    FormFlags{true, true, false});
  Prng rng(3);
  CHECK_THROWS_WITH_AS(validate_form(chart, three, rng), doctest::Contains("DEGREE_OVERFLOW"), Error);
}
