#include <cmath>

#include "doctest.h"
#include "vfc/branched.hpp"
#include "vfc/errors.hpp"
#include "vfc/fixtures.hpp"

using namespace vfc;
using namespace vfc::branched;
using kcat::Level;
using kcat::StratumPoint;

namespace {

Region sbox(double lo, double hi) {
  Region r;
  r.boxes.push_back(Box{{lo}, {hi}});
  return r;
}

}  // namespace

TEST_CASE("per-chart cover: measures, equivalences, exactness") {
  auto k = fixtures::three_chart_category();
  // Cover on the v-chart (Z/2): U' strictly inside U inside F#.
  WBCover cover = per_chart_cover(k, 1, sbox(-0.4, 0.4), sbox(-0.8, 0.8));

  SUBCASE("trivial group gives singletons (w-chart cover)") {
    WBCover triv = per_chart_cover(k, 0, sbox(-0.5, 0.5), sbox(-1.0, 1.0));
    auto s = triv.space(OpenRef{0, sbox(-0.3, 0.3)});
    REQUIRE(s);
    CHECK(s->size() == 1);
    CHECK(s->total() == 1);
  }
  SUBCASE("Z/2 cover inside U': two branches, mu = 1/2, discrete") {
    auto s = cover.space(OpenRef{1, sbox(-0.2, 0.2)});
    REQUIRE(s);
    s->validate();       // exact: positive rational, sums to exactly 1
    CHECK(s->size() == 2);
    CHECK(s->mu[0] == make_rat(1, 2));
    CHECK_FALSE(s->equivalent(0, 1));
  }
  SUBCASE("open straddling the U' boundary: indiscrete equivalence") {
    auto s = cover.space(OpenRef{1, sbox(-0.6, 0.6)});
    REQUIRE(s);
    CHECK(s->size() == 2);
    CHECK(s->equivalent(0, 1));  // glued outside the closed core
  }
  SUBCASE("open missing closure(U') entirely: branches glued to one class") {
    auto s = cover.space(OpenRef{1, sbox(0.55, 0.68)});
    REQUIRE(s);
    CHECK(s->size() == 2);
    CHECK(s->equivalent(0, 1));
    CHECK(s->total() == 1);
  }
  SUBCASE("big own-chart opens stay admissible with glued branches") {
    auto s = cover.space(OpenRef{1, sbox(-1.2, 1.2)});
    REQUIRE(s);
    CHECK(s->size() == 2);
    CHECK(s->equivalent(0, 1));
  }
  SUBCASE("pullback along the group is measure preserving, exactly") {
    auto s = cover.space(OpenRef{1, sbox(-0.2, 0.2)});
    auto moved = cover.pull_group(OpenRef{1, sbox(-0.2, 0.2)}, 1);
    REQUIRE(moved.size() == 2);
    // right translation by the nontrivial element swaps the two labels
    CHECK(moved[0] == 1);
    CHECK(moved[1] == 0);
    Rat pre0 = s->mu[moved[0]], pre1 = s->mu[moved[1]];
    CHECK(pre0 + pre1 == 1);
  }
}

TEST_CASE("separation queries resolve through local opens") {
  auto k = fixtures::three_chart_category();
  WBCover cover = per_chart_cover(k, 1, sbox(-0.4, 0.4), sbox(-0.8, 0.8));
  auto chart = k.charts[1].chart(Level::F);
  OpenRef open{1, sbox(-0.6, 0.6)};
  StratumPoint deep = chart.make_point(0, {}, {Cx(1.0, 0.05)});    // s ~ 0: inside U'
  StratumPoint outside = chart.make_point(0, {}, {Cx(1.72, 0.0)});  // s ~ 0.54: outside U'
  CHECK(cover.separated_at(open, deep, 0, 1));
  CHECK_FALSE(cover.separated_at(open, outside, 0, 1));
  CHECK_FALSE(cover.separated_at(open, deep, 0, 0));
}

TEST_CASE("product covers multiply exactly") {
  auto k = fixtures::three_chart_category();
  WBCover v2 = per_chart_cover(k, 1, sbox(-0.4, 0.4), sbox(-0.8, 0.8));
  WBCover v3 = per_chart_cover(k, 2, sbox(-0.25, 0.25), sbox(-0.5, 0.5));
  // Factor spaces on an open routed into both covering charts.
  WBCover prod = product_cover(k, {v2, v3});
  auto s = prod.space(OpenRef{1, sbox(-0.1, 0.1)});
  REQUIRE(s);
  s->validate();
  CHECK(s->size() == 2 * 3);
  for (const Rat& q : s->mu) CHECK(q == make_rat(1, 6));  // 1/2 x 1/3 exactly

  SUBCASE("product with an all-singleton cover is the other factor") {
    WBCover triv = per_chart_cover(k, 0, sbox(0.9, 1.2), sbox(0.7, 1.4));
    // opens far from that U' get singletons from the w-cover
    WBCover mixed = product_cover(k, {v2, triv});
    auto sp = mixed.space(OpenRef{1, sbox(-0.1, 0.1)});
    REQUIRE(sp);
    CHECK(sp->size() == 2);  // singleton factor drops out
    CHECK(sp->mu[0] == make_rat(1, 2));
  }
}

TEST_CASE("trivial stabilizers") {
  auto k = fixtures::three_chart_category();
  auto chart = k.charts[1].chart(Level::F);
  AutomorphismFixture fix;
  fix.chart_id = 1;
  fix.group_elem = 1;  // v -> -v
  fix.samples = {chart.make_point(0, {}, {Cx(1.0, 0.1)}), chart.make_point(0, {}, {Cx(-0.9, 0.3)})};

  SUBCASE("per-chart cover on its own U' separates the swap") {
    WBCover cover = per_chart_cover(k, 1, sbox(-0.4, 0.4), sbox(-0.8, 0.8));
    CHECK(has_trivial_stabilizers(k, cover, {fix}));
  }
  SUBCASE("indiscrete relation fails") {
    // U' so small that the samples live in the glued zone.
    WBCover cover = per_chart_cover(k, 1, sbox(-0.01, 0.01), sbox(-0.8, 0.8));
    AutomorphismFixture far = fix;
    far.samples = {chart.make_point(0, {}, {Cx(1.6, 0.0)})};
    CHECK_FALSE(has_trivial_stabilizers(k, cover, {far}));
  }
  SUBCASE("trivial groups are vacuously fine") {
    WBCover cover = per_chart_cover(k, 0, sbox(-0.5, 0.5), sbox(-1.0, 1.0));
    CHECK(has_trivial_stabilizers(k, cover, {}));
  }
}

TEST_CASE("lifted sheaf S^I") {
  auto k = fixtures::three_chart_category();
  WBCover cover = per_chart_cover(k, 1, sbox(-0.4, 0.4), sbox(-0.8, 0.8));
  sheaves::FunctionSheaf fn(k, 0.0);
  BranchedSheaf lifted(k, fn, cover);
  ChartOpen v_open{1, sbox(-0.6, 0.6)};
  auto chart = k.charts[1].chart(Level::Fs);

  SUBCASE("all-singleton cover reduces S^I to S") {
    WBCover triv = per_chart_cover(k, 0, sbox(-0.5, 0.5), sbox(-1.0, 1.0));
    BranchedSheaf lifted0(k, fn, triv);
    ChartOpen w_open{0, sbox(-0.9, 0.9)};
    auto def = lifted0.make_default(w_open);
    StratumPoint p = k.charts[0].chart(Level::F).make_point(0, {}, {Cx(1.0, 0.0)});
    CHECK(lifted0.probe(def, p).size() == 1);
  }

  SUBCASE("average produces an equivariant branched section") {
    // A deliberately non-invariant per-branch section.
    auto raw = std::make_shared<BranchedSection>();
    raw->space = *cover.space(OpenRef{v_open.chart_id, v_open.region});
    auto f0 = std::make_shared<sheaves::FunctionSection>();
    f0->chart_id = 1;
    f0->eval = [](const StratumPoint& p) { return p.z[0].real(); };
    raw->per_branch = {f0, f0};
    auto averaged = lifted.average(k.charts[1].group, v_open, raw);
    const auto& avg = dynamic_cast<const BranchedSection&>(*averaged);
    // Equivariance on samples: nu(psi* i)(x) = nu(i)(psi x).
    auto psi = k.charts[1].group.elem(1);
    auto labels = cover.pull_group(OpenRef{v_open.chart_id, v_open.region}, 1);
    for (double s : {-0.15, 0.0, 0.2}) {
      StratumPoint p = chart.make_point(0, {}, {std::exp(s) * Cx(std::cos(0.7), std::sin(0.7))});
      for (int b = 0; b < 2; ++b) {
        double lhs = fn.probe(avg.per_branch[labels[b]], p)(0);
        double rhs = fn.probe(avg.per_branch[b], psi.apply(p))(0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
      }
    }
    // Where branches are not separated (outside U'), the branches agree.
    StratumPoint glued = chart.make_point(0, {}, {Cx(1.75, 0.0)});
    CHECK(fn.probe(avg.per_branch[0], glued)(0) ==
          doctest::Approx(fn.probe(avg.per_branch[1], glued)(0)).epsilon(1e-9));
  }

  SUBCASE("patch agrees with candidates where they agree") {
    auto mk = [&](double slope) {
      auto b = std::make_shared<BranchedSection>();
      b->space = *cover.space(OpenRef{v_open.chart_id, v_open.region});
      auto f = std::make_shared<sheaves::FunctionSection>();
      f->chart_id = 1;
      f->eval = [slope](const StratumPoint& p) { return slope * std::log(std::abs(p.z[0])); };
      b->per_branch = {f, f};
      return b;
    };
    // Two candidates with identical sections on overlapping plateaus.
    Sheaf::Candidate c1, c2;
    c1.section = mk(2.0);
    c1.inner = sbox(-0.5, 0.1);
    c1.outer = sbox(-0.6, 0.2);
    c2.section = mk(2.0);
    c2.inner = sbox(-0.1, 0.5);
    c2.outer = sbox(-0.2, 0.6);
    auto patched = lifted.patch(v_open, {c1, c2});
    for (double s : {-0.4, 0.0, 0.4}) {
      StratumPoint p = chart.make_point(0, {}, {std::exp(s) * Cx(1.0, 0.0)});
      CHECK(lifted.probe(patched, p)(0) == doctest::Approx(2.0 * s).epsilon(1e-12));
    }
  }
}
