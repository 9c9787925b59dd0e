#ifndef VFC_TROPICAL_HPP
#define VFC_TROPICAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "vfc/rational.hpp"

#include "json.hpp"

namespace vfc::tropical {

// One halfspace: normal . x >= offset, or > offset when strict.
// Normals are primitive integer vectors after canonicalization.
struct Constraint {
  std::vector<Int> normal;
  Rat offset;
  bool strict = false;

  bool operator==(const Constraint& o) const {
    return strict == o.strict && offset == o.offset && normal == o.normal;
  }
};

// Rational polytope in H-representation. Always nonempty and canonical:
// primitive normals, duplicates collapsed, constraints in lexicographic
// order, feasibility certified at construction by exact Fourier-Motzkin.
class Polytope {
 public:
  static Polytope from_constraints(int ambient_dim, std::vector<Constraint> cons);
  static Polytope full_space(int ambient_dim) { return from_constraints(ambient_dim, {}); }

  int ambient_dim() const { return dim_; }
  const std::vector<Constraint>& constraints() const { return cons_; }

  bool contains(const std::vector<Rat>& p) const;

  // Indices of constraints tight at p. Throws NOT_MEMBER if p is outside.
  std::vector<int> active_face(const std::vector<Rat>& p) const;

  bool is_interior(const std::vector<Rat>& p) const;

  // Tropical completion at p: tangent cone, all constraints closed.
  Polytope tropical_completion(const std::vector<Rat>& p) const;

  // True iff the polytope is a closed subset of R^m.
  bool is_complete() const;

  // Exact vertex enumeration (intersections of dim-many tight constraints,
  // filtered by membership). Intended for small ambient dimension.
  std::vector<std::vector<Rat>> vertices() const;

  // Canonical form makes equality syntactic.
  bool operator==(const Polytope& o) const { return dim_ == o.dim_ && cons_ == o.cons_; }

  nlohmann::json to_json() const;
  static Polytope from_json(const nlohmann::json& j);

 private:
  Polytope(int dim, std::vector<Constraint> cons) : dim_(dim), cons_(std::move(cons)) {}
  int dim_ = 0;
  std::vector<Constraint> cons_;
};

struct TropicalPoint {
  std::vector<Rat> coords;
};

// x -> M x + c with integer M (integral-affine structure preserved).
struct IntegralAffineMap {
  std::vector<std::vector<Int>> matrix;  // rows x cols = target_dim x source_dim
  std::vector<Rat> translation;

  int source_dim() const { return matrix.empty() ? 0 : static_cast<int>(matrix[0].size()); }
  int target_dim() const { return static_cast<int>(matrix.size()); }
  std::vector<Rat> apply(const std::vector<Rat>& x) const;
  static IntegralAffineMap identity(int dim);
  IntegralAffineMap compose_after(const IntegralAffineMap& inner) const;  // this(inner(x))
};

// Exact feasibility of a strict/non-strict rational inequality system.
bool feasible(int dim, const std::vector<Constraint>& cons);

// Does every point of P satisfy c? (exact implication)
bool implies(const Polytope& p, const Constraint& c);

bool subset_of(const Polytope& a, const Polytope& b);

// Verifies f(P) within Q and f(completion of P at p) within completion of Q
// at f(p); returns f unchanged. Throws NOT_MAPPED / NOT_MEMBER.
IntegralAffineMap tropical_complete_map(const IntegralAffineMap& f, const Polytope& p_dom,
                                        const std::vector<Rat>& base_point, const Polytope& q_cod);

}  // namespace vfc::tropical

#endif
