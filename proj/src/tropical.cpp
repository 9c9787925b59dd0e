#include "vfc/tropical.hpp"

#include <algorithm>
#include <map>

#include "vfc/errors.hpp"

namespace vfc::tropical {

namespace {

// Lexicographic order on (normal, offset, strict); canonical constraint order.
bool constraint_less(const Constraint& a, const Constraint& b) {
  if (a.normal != b.normal) return std::lexicographical_compare(
      a.normal.begin(), a.normal.end(), b.normal.begin(), b.normal.end());
  if (a.offset != b.offset) return a.offset < b.offset;
  return a.strict < b.strict;
}

void canonicalize_one(Constraint& c) {
  // Scale so that the normal is primitive integer; the offset is rational so
  // only the gcd of the normal matters.
  std::vector<Int> n = c.normal;
  Int g = 0;
  for (const Int& e : n) g = gcd(g, e);
  if (g > 1) {
    for (Int& e : n) e /= g;
    c.offset /= Rat(g);
  }
  c.normal = std::move(n);
}

}  // namespace

// Fourier-Motzkin elimination with strictness tracking. Constraints are kept
// as normal.x >= offset / > offset; eliminating x_k pairs every lower bound
// with every upper bound. Empty normal rows degenerate to 0 >= b checks.
bool feasible(int dim, const std::vector<Constraint>& cons) {
  std::vector<Constraint> sys = cons;
  for (int k = dim - 1; k >= 0; --k) {
    std::vector<Constraint> lower, upper, rest;
    for (auto& c : sys) {
      const Int& a = c.normal[k];
      if (a > 0)
        lower.push_back(c);
      else if (a < 0)
        upper.push_back(c);
      else
        rest.push_back(c);
    }
    for (const auto& lo : lower)
      for (const auto& up : upper) {
        // lo: a x_k >= b - r.x  (a>0),  up: -a' x_k >= b' - r'.x (a'>0)
        // combine to eliminate x_k exactly.
        Constraint c;
        c.strict = lo.strict || up.strict;
        Rat a = Rat(lo.normal[k]);
        Rat ap = -Rat(up.normal[k]);
        // lo/a + up/ap eliminates x_k; clear denominators afterwards so rows
        // stay integral.
        std::vector<Rat> row(k);
        for (int j = 0; j < k; ++j) row[j] = Rat(lo.normal[j]) * ap + Rat(up.normal[j]) * a;
        Rat off = lo.offset * ap + up.offset * a;
        // Rescale to integers.
        Int denom_lcm = 1;
        for (auto& v : row) denom_lcm = lcm(denom_lcm, v.get_den());
        denom_lcm = lcm(denom_lcm, off.get_den());
        c.normal.resize(k);
        for (int j = 0; j < k; ++j) {
          Rat scaled = row[j] * Rat(denom_lcm);
          c.normal[j] = scaled.get_num();
        }
        c.offset = off * Rat(denom_lcm);
        canonicalize_one(c);
        rest.push_back(std::move(c));
      }
    // Drop the eliminated coordinate from untouched rows.
    for (auto& c : rest) c.normal.resize(k);
    sys = std::move(rest);
  }
  // All variables eliminated: rows are 0 >= b (or >).
  for (const auto& c : sys) {
    if (c.strict ? !(0 > c.offset) : !(0 >= c.offset)) return false;
  }
  return true;
}

Polytope Polytope::from_constraints(int ambient_dim, std::vector<Constraint> cons) {
  if (ambient_dim < 0) throw err_bad_dim("negative ambient dimension");
  for (auto& c : cons) {
    if (static_cast<int>(c.normal.size()) != ambient_dim)
      throw err_bad_dim("constraint normal has wrong dimension");
    bool all_zero = true;
    for (const Int& e : c.normal) all_zero = all_zero && e == 0;
    if (all_zero) {
      // 0 >= b: either vacuous or infeasible.
      if (c.strict ? !(0 > c.offset) : !(0 >= c.offset))
        throw err_infeasible("contradictory constant constraint");
      continue;
    }
    canonicalize_one(c);
  }
  // Drop vacuous rows, dedup (strict wins over non-strict on equal halfspace).
  std::vector<Constraint> kept;
  for (auto& c : cons) {
    bool all_zero = true;
    for (const Int& e : c.normal) all_zero = all_zero && e == 0;
    if (all_zero) continue;
    bool merged = false;
    for (auto& k : kept)
      if (k.normal == c.normal && k.offset == c.offset) {
        k.strict = k.strict || c.strict;
        merged = true;
        break;
      }
    if (!merged) kept.push_back(std::move(c));
  }
  std::sort(kept.begin(), kept.end(), constraint_less);
  if (!feasible(ambient_dim, kept)) throw err_infeasible("empty polytope");
  return Polytope(ambient_dim, std::move(kept));
}

bool Polytope::contains(const std::vector<Rat>& p) const {
  if (static_cast<int>(p.size()) != dim_) throw err_bad_dim("point dimension mismatch");
  for (const auto& c : cons_) {
    Rat v = dot(c.normal, p);
    if (c.strict ? !(v > c.offset) : !(v >= c.offset)) return false;
  }
  return true;
}

std::vector<int> Polytope::active_face(const std::vector<Rat>& p) const {
  if (!contains(p)) throw err_not_member("point outside polytope");
  std::vector<int> act;
  for (int i = 0; i < static_cast<int>(cons_.size()); ++i)
    if (dot(cons_[i].normal, p) == cons_[i].offset) act.push_back(i);
  return act;
}

bool Polytope::is_interior(const std::vector<Rat>& p) const { return active_face(p).empty(); }

Polytope Polytope::tropical_completion(const std::vector<Rat>& p) const {
  std::vector<int> act = active_face(p);  // throws NOT_MEMBER
  std::vector<Constraint> cons;
  cons.reserve(act.size());
  for (int i : act) {
    Constraint c = cons_[i];
    c.strict = false;  // completions are closed
    cons.push_back(std::move(c));
  }
  return from_constraints(dim_, std::move(cons));
}

bool Polytope::is_complete() const {
  // Closed iff no strict constraint's bounding hyperplane meets the closure.
  for (std::size_t i = 0; i < cons_.size(); ++i) {
    if (!cons_[i].strict) continue;
    std::vector<Constraint> sys;
    for (const auto& c : cons_) {
      Constraint cc = c;
      cc.strict = false;
      sys.push_back(cc);
    }
    // Add the reversed closed halfspace; together with row i this pins the
    // hyperplane normal.x == offset.
    Constraint eq = cons_[i];
    eq.strict = false;
    for (Int& e : eq.normal) e = -e;
    eq.offset = -eq.offset;
    sys.push_back(eq);
    if (feasible(dim_, sys)) return false;
  }
  return true;
}

std::vector<std::vector<Rat>> Polytope::vertices() const {
  std::vector<std::vector<Rat>> out;
  const int m = dim_;
  if (m == 0) {
    out.push_back({});
    return out;
  }
  const int nc = static_cast<int>(cons_.size());
  if (nc < m) return out;
  // Enumerate m-subsets of constraints.
  std::vector<int> comb(m);
  for (int i = 0; i < m; ++i) comb[i] = i;
  auto advance = [&]() {
    int i = m - 1;
    while (i >= 0 && comb[i] == nc - m + i) --i;
    if (i < 0) return false;
    ++comb[i];
    for (int j = i + 1; j < m; ++j) comb[j] = comb[j - 1] + 1;
    return true;
  };
  do {
    // Solve normal_i . x == offset_i exactly by Gaussian elimination.
    std::vector<std::vector<Rat>> a(m, std::vector<Rat>(m + 1));
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) a[r][c] = Rat(cons_[comb[r]].normal[c]);
      a[r][m] = cons_[comb[r]].offset;
    }
    bool singular = false;
    for (int col = 0; col < m && !singular; ++col) {
      int piv = -1;
      for (int r = col; r < m; ++r)
        if (a[r][col] != 0) {
          piv = r;
          break;
        }
      if (piv < 0) {
        singular = true;
        break;
      }
      std::swap(a[col], a[piv]);
      for (int r = 0; r < m; ++r) {
        if (r == col || a[r][col] == 0) continue;
        Rat f = a[r][col] / a[col][col];
        for (int c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
      }
    }
    if (singular) continue;
    std::vector<Rat> x(m);
    for (int r = 0; r < m; ++r) x[r] = a[r][m] / a[r][r];
    if (!contains(x)) continue;
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(std::move(x));
  } while (advance());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  });
  return out;
}

nlohmann::json Polytope::to_json() const {
  nlohmann::json j;
  j["dim"] = dim_;
  j["constraints"] = nlohmann::json::array();
  for (const auto& c : cons_) {
    nlohmann::json jc;
    jc["a"] = nlohmann::json::array();
    for (const Int& e : c.normal) jc["a"].push_back(e.get_str());
    jc["b"] = rat_to_string(c.offset);
    jc["strict"] = c.strict;
    j["constraints"].push_back(jc);
  }
  return j;
}

Polytope Polytope::from_json(const nlohmann::json& j) {
  if (!j.contains("dim") || !j.contains("constraints")) throw err_schema("polytope needs dim and constraints");
  int dim = j.at("dim").get<int>();
  std::vector<Constraint> cons;
  for (const auto& jc : j.at("constraints")) {
    Constraint c;
    for (const auto& e : jc.at("a")) {
      if (e.is_number_integer())
        c.normal.emplace_back(static_cast<long>(e.get<long long>()));
      else
        c.normal.emplace_back(e.get<std::string>());
    }
    const auto& b = jc.at("b");
    c.offset = b.is_number_integer() ? Rat(static_cast<long>(b.get<long long>()))
                                     : rat_from_string(b.get<std::string>());
    c.strict = jc.value("strict", false);
    cons.push_back(std::move(c));
  }
  return from_constraints(dim, std::move(cons));
}

std::vector<Rat> IntegralAffineMap::apply(const std::vector<Rat>& x) const {
  std::vector<Rat> y(target_dim());
  for (int r = 0; r < target_dim(); ++r) {
    Rat s = translation[r];
    for (int c = 0; c < source_dim(); ++c) s += Rat(matrix[r][c]) * x[c];
    y[r] = s;
  }
  return y;
}

IntegralAffineMap IntegralAffineMap::identity(int dim) {
  IntegralAffineMap f;
  f.matrix.assign(dim, std::vector<Int>(dim, 0));
  for (int i = 0; i < dim; ++i) f.matrix[i][i] = 1;
  f.translation.assign(dim, Rat(0));
  return f;
}

IntegralAffineMap IntegralAffineMap::compose_after(const IntegralAffineMap& inner) const {
  IntegralAffineMap g;
  const int rows = target_dim(), mid = source_dim(), cols = inner.source_dim();
  g.matrix.assign(rows, std::vector<Int>(cols, 0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int k = 0; k < mid; ++k) g.matrix[r][c] += matrix[r][k] * inner.matrix[k][c];
  g.translation.assign(rows, Rat(0));
  for (int r = 0; r < rows; ++r) {
    Rat s = translation[r];
    for (int k = 0; k < mid; ++k) s += Rat(matrix[r][k]) * inner.translation[k];
    g.translation[r] = s;
  }
  return g;
}

bool implies(const Polytope& p, const Constraint& c) {
  // P implies (a.x >= b) iff P cap {a.x < b} is empty.
  std::vector<Constraint> sys(p.constraints().begin(), p.constraints().end());
  Constraint neg;
  neg.normal = c.normal;
  for (Int& e : neg.normal) e = -e;
  neg.offset = -c.offset;
  neg.strict = !c.strict;  // negation of >= is >, of > is >=
  sys.push_back(neg);
  return !feasible(p.ambient_dim(), sys);
}

bool subset_of(const Polytope& a, const Polytope& b) {
  if (a.ambient_dim() != b.ambient_dim()) throw err_bad_dim("subset check across dimensions");
  for (const auto& c : b.constraints())
    if (!implies(a, c)) return false;
  return true;
}

IntegralAffineMap tropical_complete_map(const IntegralAffineMap& f, const Polytope& p_dom,
                                        const std::vector<Rat>& base_point, const Polytope& q_cod) {
  if (f.source_dim() != p_dom.ambient_dim() || f.target_dim() != q_cod.ambient_dim())
    throw err_bad_dim("map dimensions do not match polytopes");
  if (!p_dom.contains(base_point)) throw err_not_member("base point outside domain");
  // f(P) within Q: every constraint of Q pulls back to an implied constraint.
  auto pullback_holds = [&](const Polytope& dom, const Polytope& cod) {
    for (const auto& c : cod.constraints()) {
      Constraint pb;
      pb.normal.assign(dom.ambient_dim(), 0);
      Rat shift = 0;
      for (int r = 0; r < f.target_dim(); ++r) {
        for (int col = 0; col < f.source_dim(); ++col) pb.normal[col] += c.normal[r] * f.matrix[r][col];
        shift += Rat(c.normal[r]) * f.translation[r];
      }
      pb.offset = c.offset - shift;
      pb.strict = c.strict;
      bool all_zero = true;
      for (const Int& e : pb.normal) all_zero = all_zero && e == 0;
      if (all_zero) {
        if (pb.strict ? !(0 > pb.offset) : !(0 >= pb.offset)) return false;
        continue;
      }
      if (!implies(dom, pb)) return false;
    }
    return true;
  };
  if (!pullback_holds(p_dom, q_cod)) throw err_not_mapped("f(P) not contained in Q");
  Polytope p_hat = p_dom.tropical_completion(base_point);
  Polytope q_hat = q_cod.tropical_completion(f.apply(base_point));
  // A theorem for affine maps; failure would be a bug in completion.
  if (!pullback_holds(p_hat, q_hat))
    throw err_not_mapped("completed map fails containment (internal inconsistency)");
  return f;
}

}  // namespace vfc::tropical
