#include "doctest.h"

#include "oracles.hpp"
#include "vfc/errors.hpp"
#include "vfc/prng.hpp"
#include "vfc/tropical.hpp"

using namespace vfc;
using namespace vfc::tropical;

namespace {

Constraint cons(std::vector<long> a, const char* b, bool strict = false) {
  Constraint c;
  for (long v : a) c.normal.emplace_back(v);
  c.offset = rat_from_string(b);
  c.strict = strict;
  return c;
}

std::vector<Rat> pt(std::initializer_list<const char*> coords) {
  std::vector<Rat> p;
  for (const char* c : coords) p.push_back(rat_from_string(c));
  return p;
}

Polytope interval01() {
  return Polytope::from_constraints(1, {cons({1}, "0"), cons({-1}, "-1")});
}

}  // namespace

TEST_CASE("polytope construction and canonicalization") {
  auto ray = Polytope::from_constraints(1, {cons({1}, "0")});
  CHECK(ray.constraints().size() == 1);

  auto square = Polytope::from_constraints(
      2, {cons({1, 0}, "0"), cons({-1, 0}, "-1"), cons({0, 1}, "0"), cons({0, -1}, "-1")});
  CHECK(square.constraints().size() == 4);
  CHECK(square.contains(pt({"1/2", "1/2"})));
  CHECK_FALSE(square.contains(pt({"2", "0"})));

  CHECK_THROWS_WITH_AS(Polytope::from_constraints(1, {cons({1}, "0"), cons({-1}, "1")}),
                       doctest::Contains("INFEASIBLE"), Error);
  CHECK_THROWS_AS(Polytope::from_constraints(2, {cons({1}, "0")}), Error);  // BAD_DIM

  // Non-primitive normals are reduced: 2x >= 1 becomes x >= 1/2.
  auto scaled = Polytope::from_constraints(1, {cons({2}, "1")});
  CHECK(scaled.constraints()[0].normal[0] == 1);
  CHECK(scaled.constraints()[0].offset == rat_from_string("1/2"));

  // Duplicates collapse; strict wins.
  auto dup = Polytope::from_constraints(1, {cons({1}, "0"), cons({1}, "0", true)});
  CHECK(dup.constraints().size() == 1);
  CHECK(dup.constraints()[0].strict);
}

TEST_CASE("active faces") {
  auto iv = interval01();
  auto act0 = iv.active_face(pt({"0"}));
  REQUIRE(act0.size() == 1);
  CHECK(iv.constraints()[act0[0]].normal[0] == 1);

  auto square = Polytope::from_constraints(
      2, {cons({1, 0}, "0"), cons({-1, 0}, "-1"), cons({0, 1}, "0"), cons({0, -1}, "-1")});
  CHECK(square.active_face(pt({"0", "0"})).size() == 2);
  CHECK(iv.active_face(pt({"1/2"})).empty());
  CHECK_THROWS_WITH_AS(iv.active_face(pt({"2"})), doctest::Contains("NOT_MEMBER"), Error);
}

TEST_CASE("tropical completion of [0,1] at its endpoints") {
  auto iv = interval01();
  auto at0 = iv.tropical_completion(pt({"0"}));
  // [0,infinity)
  REQUIRE(at0.constraints().size() == 1);
  CHECK(at0.constraints()[0].normal[0] == 1);
  CHECK(at0.constraints()[0].offset == 0);
  CHECK_FALSE(at0.constraints()[0].strict);

  auto interior = iv.tropical_completion(pt({"1/2"}));
  CHECK(interior.constraints().empty());  // all of R
}

TEST_CASE("completion against the ray-enumeration oracle (frozen cases)") {
  // {x>=0} x [0,1] at (0,0): second factor
  // completes at 0 to [0,inf). Direction grid verifies membership pointwise.
  auto prod = Polytope::from_constraints(2, {cons({1, 0}, "0"), cons({0, 1}, "0"), cons({0, -1}, "-1")});
  auto base = pt({"0", "0"});
  auto cone = prod.tropical_completion(base);
  for (const auto& dir : oracles::direction_grid(2, 6)) {
    std::vector<Rat> q = base;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += Rat(dir[i]);
    bool in_cone = cone.contains(q);
    bool oracle = oracles::ray_meets_in_segment(prod, base, dir);
    CHECK(in_cone == oracle);
  }
}

TEST_CASE("completion properties on random rational polytopes") {
  Prng rng(20240817);
  int built = 0;
  for (int trial = 0; trial < 400 && built < 60; ++trial) {
    int m = 1 + static_cast<int>(rng.next_below(3));
    int rows = 1 + static_cast<int>(rng.next_below(5));
    std::vector<Constraint> cs;
    for (int r = 0; r < rows; ++r) {
      Constraint c;
      bool zero = true;
      for (int i = 0; i < m; ++i) {
        long e = static_cast<long>(rng.next_below(7)) - 3;
        zero = zero && e == 0;
        c.normal.emplace_back(e);
      }
      if (zero) c.normal[0] = 1;
      c.offset = make_rat(static_cast<long>(rng.next_below(9)) - 4, 1 + static_cast<long>(rng.next_below(3)));
      c.strict = rng.next_below(4) == 0;  // a quarter of the facets are open
      cs.push_back(std::move(c));
    }
    // Anchor at a random rational point and shift constraints to keep it
    // inside, so feasibility and membership hold by construction. Strict
    // facets keep strictly positive slack; closed ones may become active.
    std::vector<Rat> base(m);
    for (int i = 0; i < m; ++i)
      base[i] = make_rat(static_cast<long>(rng.next_below(7)) - 3, 1 + static_cast<long>(rng.next_below(2)));
    for (auto& c : cs) {
      Rat v = 0;
      for (int i = 0; i < m; ++i) v += Rat(c.normal[i]) * base[i];
      if (c.strict) {
        c.offset = v - make_rat(1 + static_cast<long>(rng.next_below(3)), 1);
        continue;
      }
      if (v < c.offset) c.offset = v - make_rat(static_cast<long>(rng.next_below(3)), 1);
      // Half the time make the constraint active at base.
      if (rng.next_below(2) == 0) c.offset = v;
    }
    Polytope p = Polytope::from_constraints(m, cs);
    REQUIRE(p.contains(base));
    ++built;

    Polytope cone = p.tropical_completion(base);
    // P inside its completion (exact implication).
    CHECK(subset_of(p, cone));
    // Idempotence.
    CHECK(cone.tropical_completion(base) == cone);
    // Interior point completes to everything.
    if (p.active_face(base).empty()) CHECK(cone.constraints().empty());
    // Completions are closed polytopes.
    for (const auto& c : cone.constraints()) CHECK_FALSE(c.strict);
    // Ray oracle, exact, every primitive direction in a span-3 grid.
    for (const auto& dir : oracles::direction_grid(m, 3)) {
      std::vector<Rat> q = base;
      for (int i = 0; i < m; ++i) q[i] += Rat(dir[i]);
      CHECK(cone.contains(q) == oracles::ray_meets_in_segment(p, base, dir));
    }
  }
  CHECK(built >= 50);
}

TEST_CASE("is_complete distinguishes closed from open faces") {
  auto closed_ray = Polytope::from_constraints(1, {cons({1}, "0")});
  CHECK(closed_ray.is_complete());  // [0,infinity) is a closed subset
  auto open_ray = Polytope::from_constraints(1, {cons({1}, "0", true)});
  CHECK_FALSE(open_ray.is_complete());  // (0,infinity) is not closed
  CHECK(Polytope::full_space(3).is_complete());
  // Redundant strict constraint behind a closed one: still a closed set.
  auto shadowed = Polytope::from_constraints(1, {cons({1}, "0", true), cons({1}, "1")});
  CHECK(shadowed.is_complete());
}

TEST_CASE("vertex enumeration") {
  auto iv = interval01();
  auto vs = iv.vertices();
  REQUIRE(vs.size() == 2);
  CHECK(vs[0][0] == 0);
  CHECK(vs[1][0] == 1);
  CHECK(Polytope::from_constraints(1, {cons({1}, "0")}).vertices().size() == 1);
  CHECK(Polytope::full_space(1).vertices().empty());
  CHECK(Polytope::full_space(0).vertices().size() == 1);  // the point chart
}

TEST_CASE("tropical completion of maps") {
  auto iv = interval01();
  auto ray = Polytope::from_constraints(1, {cons({1}, "0")});

  SUBCASE("identity on [0,1] at 0") {
    auto f = IntegralAffineMap::identity(1);
    auto g = tropical_complete_map(f, iv, pt({"0"}), iv);
    CHECK(g.matrix[0][0] == 1);
  }
  SUBCASE("doubling map [0,1] -> [0,2] at 0") {
    IntegralAffineMap f;
    f.matrix = {{Int(2)}};
    f.translation = {Rat(0)};
    auto two = Polytope::from_constraints(1, {cons({1}, "0"), cons({-1}, "-2")});
    CHECK_NOTHROW(tropical_complete_map(f, iv, pt({"0"}), two));
    // Completion of both sides by the ray oracle: domain cone [0,inf),
    // codomain cone [0,inf); containment verified inside the call.
    auto dom_cone = iv.tropical_completion(pt({"0"}));
    CHECK(dom_cone == ray);
  }
  SUBCASE("diagonal at an interior point lands in R^2") {
    IntegralAffineMap f;
    f.matrix = {{Int(1)}, {Int(1)}};
    f.translation = {Rat(0), Rat(0)};
    auto square = Polytope::from_constraints(
        2, {cons({1, 0}, "0"), cons({-1, 0}, "-1"), cons({0, 1}, "0"), cons({0, -1}, "-1")});
    CHECK_NOTHROW(tropical_complete_map(f, iv, pt({"1/2"}), square));
    CHECK(square.tropical_completion(f.apply(pt({"1/2"}))).constraints().empty());
  }
  SUBCASE("not mapped") {
    auto f = IntegralAffineMap::identity(1);
    auto small = Polytope::from_constraints(1, {cons({1}, "0"), cons({-1}, "-1/2")});
    CHECK_THROWS_WITH_AS(tropical_complete_map(f, iv, pt({"0"}), small), doctest::Contains("NOT_MAPPED"),
                         Error);
  }
}

TEST_CASE("completion is functorial on random affine pairs") {
  Prng rng(99173);
  for (int trial = 0; trial < 40; ++trial) {
    // P --f--> Q --g--> R with P=[0,1]^2 shifted, f,g integer affine.
    auto square = Polytope::from_constraints(
        2, {cons({1, 0}, "0"), cons({-1, 0}, "-1"), cons({0, 1}, "0"), cons({0, -1}, "-1")});
    IntegralAffineMap f;
    f.matrix = {{Int(1), Int(0)}, {Int(static_cast<long>(rng.next_below(3)) - 1), Int(1)}};
    f.translation = {Rat(static_cast<long>(rng.next_below(5)) - 2), Rat(0)};
    IntegralAffineMap g;
    g.matrix = {{Int(1), Int(static_cast<long>(rng.next_below(3)) - 1)}, {Int(0), Int(1)}};
    g.translation = {Rat(0), Rat(static_cast<long>(rng.next_below(5)) - 2)};
    std::vector<Rat> base = {Rat(static_cast<long>(rng.next_below(2))), Rat(static_cast<long>(rng.next_below(2)))};

    auto gf = g.compose_after(f);
    auto pc = square.tropical_completion(base);
    // Completion of g o f equals completion of g after completion of f:
    // same (M, c), so compare images of cone points through both routes.
    for (const auto& dir : oracles::direction_grid(2, 2)) {
      std::vector<Rat> q = base;
      for (int i = 0; i < 2; ++i) q[i] += Rat(dir[i]);
      if (!pc.contains(q)) continue;
      auto via_composite = gf.apply(q);
      auto via_steps = g.apply(f.apply(q));
      CHECK(via_composite == via_steps);
    }
  }
}

TEST_CASE("polytope json round trip") {
  auto iv = interval01();
  auto j = iv.to_json();
  CHECK(j["dim"] == 1);
  auto back = Polytope::from_json(j);
  CHECK(back == iv);
}
