#include "vfc/branched.hpp"

#include <algorithm>

#include "vfc/errors.hpp"

namespace vfc::branched {

using kcat::KChart;
using kcat::Level;

void BranchSpace::validate() const {
  if (ids.size() != mu.size() || ids.size() != cls.size()) throw err_schema("branch space shape mismatch");
  for (const Rat& q : mu)
    if (!(q > 0)) throw err_schema("branch measure must be positive");
  if (total() != 1) throw err_schema("branch measures must sum to exactly 1");
}

BranchSpace BranchSpace::singleton() {
  BranchSpace s;
  s.ids = {"*"};
  s.mu = {Rat(1)};
  s.cls = {0};
  return s;
}

namespace {

// Region of chart `target` corresponding to an open on chart `src` through a
// declared route, bounding-box style.
std::optional<Region> routed_region(const KuranishiCategory& k, const OpenRef& open, int target_chart) {
  if (open.chart_id == target_chart) return open.region;
  auto routes = k.routes(open.chart_id, target_chart);
  if (routes.empty()) return std::nullopt;
  const auto& route = routes.front();
  const KChart& src = k.chart_by_id(open.chart_id);
  Region out;
  for (const auto& bx : open.region.boxes) {
    const int dim = bx.dim();
    Box target;
    bool first = true;
    for (std::size_t mask = 0; mask < (std::size_t{1} << dim); ++mask) {
      std::vector<double> x(dim);
      for (int a = 0; a < dim; ++a) x[a] = (mask & (std::size_t{1} << a)) ? bx.hi[a] : bx.lo[a];
      StratumPoint p;
      kcat::ExplodedChart ch = src.chart(Level::Fs);
      if (ch.strata().empty()) return std::nullopt;
      p.vertex = 0;
      p.vertex_coords = ch.strata()[0].coords;
      p.u.assign(x.begin(), x.begin() + src.n);
      p.z.resize(src.m);
      for (int j = 0; j < src.m; ++j) p.z[j] = std::exp(x[src.n + j]);
      if (!route.defined(p)) return std::nullopt;
      StratumPoint q = route.map(p);
      std::vector<double> y = q.region_coords();
      if (first) {
        target.lo = y;
        target.hi = y;
        first = false;
      } else {
        for (std::size_t a = 0; a < y.size(); ++a) {
          target.lo[a] = std::min(target.lo[a], y[a]);
          target.hi[a] = std::max(target.hi[a], y[a]);
        }
      }
    }
    out.boxes.push_back(std::move(target));
  }
  return out;
}

bool regions_disjoint(const Region& a, const Region& b) {
  for (const auto& ba : a.boxes)
    for (const auto& bb : b.boxes) {
      bool overlap = true;
      for (int i = 0; i < ba.dim(); ++i)
        if (ba.hi[i] < bb.lo[i] || bb.hi[i] < ba.lo[i]) overlap = false;
      if (overlap) return false;
    }
  return true;
}

StratumPoint route_point(const KuranishiCategory& k, const OpenRef& open, int target_chart,
                         const StratumPoint& p) {
  if (open.chart_id == target_chart) return p;
  for (const auto& route : k.routes(open.chart_id, target_chart))
    if (route.defined(p)) return route.map(p);
  throw err_schema("point cannot be routed to the covering chart");
}

}  // namespace

WBCover per_chart_cover(const KuranishiCategory& k, int chart_id, Region u_prime, Region u) {
  if (!u_prime.inside(u, 0.0)) throw err_bad_nesting("per-chart cover needs U' inside U");
  const KChart& home = k.chart_by_id(chart_id);
  const std::size_t order = home.group.size();

  WBCover cover;
  cover.space = [&k, chart_id, u_prime, u, order](const OpenRef& open) -> std::optional<BranchSpace> {
    (void)u;
    if (order == 1) return BranchSpace::singleton();
    // Uniform label count |G| on every open keeps pullbacks well defined on
    // all of O_I; away from U' (and on phase-blind cross-chart opens) the
    // labels are indiscretely glued, which is the "gluing together branches
    // outside a closed set" variant of the cover. Discrete equivalence only
    // on own-chart opens inside U'.
    BranchSpace s;
    for (std::size_t g = 0; g < order; ++g) {
      s.ids.push_back("g" + std::to_string(g));
      s.mu.push_back(Rat(1) / Rat(static_cast<long>(order)));
    }
    bool discrete = false;
    if (open.chart_id == chart_id) {
      auto routed = routed_region(k, open, chart_id);
      discrete = routed && routed->inside(u_prime, 0.0);
    }
    s.cls.resize(order);
    for (std::size_t g = 0; g < order; ++g) s.cls[g] = discrete ? static_cast<int>(g) : 0;
    return s;
  };
  cover.pull_group = [&k, chart_id](const OpenRef& open, int g_elem) {
    const KChart& home_chart = k.chart_by_id(chart_id);
    const std::size_t order = home_chart.group.size();
    std::vector<int> out(order);
    // Cross-chart opens carry the glued trivialization: every label map acts
    // trivially on sections, so the identity transport is consistent.
    if (g_elem == 0 || open.chart_id != chart_id) {
      for (std::size_t h = 0; h < order; ++h) out[h] = static_cast<int>(h);
      return out;
    }
    for (std::size_t h = 0; h < order; ++h)
      out[h] = home_chart.group.compose_index(static_cast<int>(h), g_elem);
    return out;
  };
  cover.separated_at = [&k, chart_id, u_prime, u](const OpenRef& open, const StratumPoint& p, int a,
                                                  int b) {
    if (a == b) return false;
    if (open.chart_id != chart_id) return false;  // glued on other charts
    StratumPoint q = route_point(k, open, chart_id, p);
    std::vector<double> x = q.region_coords();
    // Radius halving around the point until the classification settles.
    double r = 0.05 * std::max(u.diameter(), 1e-6);
    for (int it = 0; it < 20; ++it, r *= 0.5) {
      Box ball;
      for (double c : x) {
        ball.lo.push_back(c - r);
        ball.hi.push_back(c + r);
      }
      Region ball_region;
      ball_region.boxes.push_back(ball);
      if (ball_region.inside(u_prime, 0.0)) return true;        // discrete zone
      if (regions_disjoint(ball_region, u_prime)) return false;  // glued zone
    }
    throw err_axiom_violation("separation query does not settle at the sampled point");
  };
  cover.nonsep_weight = [&k, chart_id, u_prime](const OpenRef& open, const StratumPoint& p, int a, int b) {
    if (a == b) return 1.0;
    if (open.chart_id != chart_id) return 1.0;  // glued on other charts
    StratumPoint q = route_point(k, open, chart_id, p);
    double depth = u_prime.depth(q.region_coords());
    double collar = 0.1 * std::max(u_prime.diameter(), 1e-6);
    return 1.0 - smooth01(depth / collar);
  };
  return cover;
}

WBCover product_cover(const KuranishiCategory& k, std::vector<WBCover> factors) {
  auto shared = std::make_shared<std::vector<WBCover>>(std::move(factors));
  WBCover cover;
  cover.space = [shared](const OpenRef& open) -> std::optional<BranchSpace> {
    std::vector<BranchSpace> spaces;
    for (const auto& f : *shared) {
      auto s = f.space(open);
      if (!s) return std::nullopt;
      spaces.push_back(std::move(*s));
    }
    BranchSpace out;
    std::vector<std::size_t> idx(spaces.size(), 0);
    for (;;) {
      std::string id;
      Rat mu = 1;
      for (std::size_t v = 0; v < spaces.size(); ++v) {
        if (v) id += "|";
        id += spaces[v].ids[idx[v]];
        mu *= spaces[v].mu[idx[v]];
      }
      out.ids.push_back(id);
      out.mu.push_back(mu);
      std::size_t c = 0;
      while (c < spaces.size() && ++idx[c] == spaces[c].size()) idx[c++] = 0;
      if (c == spaces.size()) break;
    }
    // Equivalent iff equivalent in every factor.
    const std::size_t total = out.ids.size();
    out.cls.assign(total, 0);
    auto unrank = [&](std::size_t t) {
      std::vector<int> comp(spaces.size());
      for (std::size_t v = 0; v < spaces.size(); ++v) {
        comp[v] = static_cast<int>(t % spaces[v].size());
        t /= spaces[v].size();
      }
      return comp;
    };
    for (std::size_t t = 0; t < total; ++t) {
      auto ct = unrank(t);
      int rep = static_cast<int>(t);
      for (std::size_t s = 0; s < t; ++s) {
        auto cs = unrank(s);
        bool equiv = true;
        for (std::size_t v = 0; v < spaces.size(); ++v)
          equiv = equiv && spaces[v].equivalent(ct[v], cs[v]);
        if (equiv) {
          rep = out.cls[s];
          break;
        }
      }
      out.cls[t] = rep;
    }
    return out;
  };
  cover.pull_group = [shared](const OpenRef& open, int g_elem) {
    std::vector<std::vector<int>> per(shared->size());
    std::vector<std::size_t> sizes(shared->size());
    for (std::size_t v = 0; v < shared->size(); ++v) {
      per[v] = (*shared)[v].pull_group(open, g_elem);
      sizes[v] = per[v].size();
    }
    std::size_t total = 1;
    for (auto s : sizes) total *= s;
    std::vector<int> out(total);
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t rem = t, mapped = 0, stride = 1;
      for (std::size_t v = 0; v < shared->size(); ++v) {
        std::size_t comp = rem % sizes[v];
        rem /= sizes[v];
        mapped += static_cast<std::size_t>(per[v][comp]) * stride;
        stride *= sizes[v];
      }
      out[t] = static_cast<int>(mapped);
    }
    return out;
  };
  cover.separated_at = [shared](const OpenRef& open, const StratumPoint& p, int a, int b) {
    if (a == b) return false;
    std::vector<std::size_t> sizes;
    for (const auto& f : *shared) {
      auto s = f.space(open);
      sizes.push_back(s ? s->size() : 1);
    }
    std::size_t ra = a, rb = b;
    for (std::size_t v = 0; v < shared->size(); ++v) {
      int ca = static_cast<int>(ra % sizes[v]);
      int cb = static_cast<int>(rb % sizes[v]);
      ra /= sizes[v];
      rb /= sizes[v];
      if ((*shared)[v].separated_at(open, p, ca, cb)) return true;  // some factor separates
    }
    return false;
  };
  cover.nonsep_weight = [shared](const OpenRef& open, const StratumPoint& p, int a, int b) {
    if (a == b) return 1.0;
    std::vector<std::size_t> sizes;
    for (const auto& f : *shared) {
      auto s = f.space(open);
      sizes.push_back(s ? s->size() : 1);
    }
    double w = 1.0;
    std::size_t ra = a, rb = b;
    for (std::size_t v = 0; v < shared->size(); ++v) {
      int ca = static_cast<int>(ra % sizes[v]);
      int cb = static_cast<int>(rb % sizes[v]);
      ra /= sizes[v];
      rb /= sizes[v];
      if (ca != cb) w = std::min(w, (*shared)[v].nonsep_weight(open, p, ca, cb));
    }
    return w;
  };
  return cover;
}

bool has_trivial_stabilizers(const KuranishiCategory& k, const WBCover& cover,
                             const std::vector<AutomorphismFixture>& fixtures) {
  for (const auto& fix : fixtures) {
    if (fix.group_elem == 0) continue;
    const KChart& c = k.chart_by_id(fix.chart_id);
    OpenRef open{c.id, c.F};
    auto space = cover.space(open);
    if (!space) throw err_schema("fixture open is not admissible");
    auto moved = cover.pull_group(open, fix.group_elem);
    for (const auto& f : fix.samples)
      for (std::size_t i = 0; i < space->size(); ++i)
        if (!cover.separated_at(open, f, static_cast<int>(i), moved[i])) return false;
  }
  return true;
}

WBCover standard_cover(const KuranishiCategory& k, const kcat::CutoffFamily& cutoffs) {
  std::vector<WBCover> factors;
  for (const auto& cut : cutoffs.cutoffs) {
    Region uprime;
    uprime.boxes.push_back(cut.core.inflate(0.4 * cut.margin));
    Region u;
    u.boxes.push_back(cut.core.inflate(0.7 * cut.margin));
    factors.push_back(per_chart_cover(k, cut.chart_id, uprime, u));
  }
  if (factors.empty()) {
    // No cutoffs (empty holomorphic locus): a singleton cover suffices.
    const auto& c0 = k.charts[0];
    factors.push_back(per_chart_cover(k, c0.id, c0.F, c0.Fp));
  }
  return product_cover(k, std::move(factors));
}

// ---- BranchedSheaf ------------------------------------------------------------

namespace {

const BranchedSection& as_branched(const SectionPtr& s) {
  auto p = dynamic_cast<const BranchedSection*>(s.get());
  if (!p) throw err_schema("section is not a branched section");
  return *p;
}

}  // namespace

BranchSpace BranchedSheaf::space_of(const ChartOpen& open) const {
  auto s = cover_->space(OpenRef{open.chart_id, open.region});
  if (!s) throw err_schema("open is not admissible for the branched cover");
  s->validate();
  return *s;
}

SectionPtr BranchedSheaf::make_default(const ChartOpen& open) const {
  auto out = std::make_shared<BranchedSection>();
  out->space = space_of(open);
  SectionPtr one = inner_->make_default(open);
  out->per_branch.assign(out->space.size(), one);  // constant map I(O) -> S(O)
  return out;
}

SectionPtr BranchedSheaf::restrict(const OpenMorphism& m, SectionPtr on_target) const {
  const auto& b = as_branched(on_target);
  auto out = std::make_shared<BranchedSection>();
  out->space = b.space;  // labels transport identically along declared branches
  for (const auto& s : b.per_branch) out->per_branch.push_back(inner_->restrict(m, s));
  return out;
}

SectionPtr BranchedSheaf::extend(const OpenMorphism& into_target, SectionPtr on_source,
                                 const ChartOpen& target) const {
  const auto& b = as_branched(on_source);
  auto out = std::make_shared<BranchedSection>();
  out->space = space_of(target);
  if (out->space.size() == b.space.size()) {
    // Lemma "patch extend": extend per branch; non-separated pairs share
    // their extension through the shared class representative.
    std::map<int, SectionPtr> by_class;
    for (std::size_t i = 0; i < b.space.size(); ++i) {
      int rep = b.space.cls[i];
      if (!by_class.count(rep))
        by_class[rep] = inner_->extend(into_target, b.per_branch[rep], target);
      out->per_branch.push_back(by_class[rep]);
    }
    // Branches separated somewhere keep their own extensions.
    for (std::size_t i = 0; i < b.space.size(); ++i)
      if (b.space.cls[i] == static_cast<int>(i))
        out->per_branch[i] = inner_->extend(into_target, b.per_branch[i], target);
  } else if (b.space.size() == 1) {
    SectionPtr one = inner_->extend(into_target, b.per_branch[0], target);
    out->per_branch.assign(out->space.size(), one);
  } else if (out->space.size() == 1) {
    // Declared-branch transport: the canonical sheet (label 0) represents
    // the single-valued content on the target side.
    out->per_branch.push_back(inner_->extend(into_target, b.per_branch[0], target));
  } else {
    throw err_schema("branched extension across incompatible branch spaces");
  }
  return out;
}

SectionPtr BranchedSheaf::patch(const ChartOpen& target, const std::vector<Candidate>& cands) const {
  auto out = std::make_shared<BranchedSection>();
  out->space = space_of(target);
  const std::size_t nb = out->space.size();
  OpenRef target_ref{target.chart_id, target.region};

  // Claim "two patch", branch by branch: earlier branches override later ones
  // over the non-separated collar, forcing agreement where the branches are
  // glued; ordinary plateau blending happens elsewhere.
  auto point_of = [k = k_, cid = target.chart_id](const std::vector<double>& x) {
    const KChart& c = k->chart_by_id(cid);
    StratumPoint p;
    kcat::ExplodedChart ch = c.chart(Level::Fs);
    p.vertex = 0;
    if (!ch.strata().empty()) p.vertex_coords = ch.strata()[0].coords;
    p.u.assign(x.begin(), x.begin() + c.n);
    p.z.resize(c.m);
    for (int j = 0; j < c.m; ++j) p.z[j] = std::exp(x[c.n + j]);
    return p;
  };
  for (std::size_t bidx = 0; bidx < nb; ++bidx) {
    // Combined glue weight to the earlier branches.
    auto wglue = [cover = cover_, target_ref, bidx, point_of](const std::vector<double>& x) {
      if (bidx == 0) return 0.0;
      double w = 0.0;
      StratumPoint p = point_of(x);
      for (std::size_t prev = 0; prev < bidx; ++prev)
        w = std::max(w, cover->nonsep_weight(target_ref, p, static_cast<int>(prev),
                                             static_cast<int>(bidx)));
      return w;
    };
    std::vector<Candidate> branch_cands;
    for (const auto& c : cands) {
      const auto& bs = as_branched(c.section);
      Candidate inner_c;
      inner_c.section = bs.per_branch[bs.per_branch.size() == nb ? bidx : 0];
      bool is_default = !c.weight && c.inner.empty() && c.outer.empty();
      if (is_default) {
        inner_c.inner = c.inner;
        inner_c.outer = c.outer;
      } else {
        // Suppress regular candidates on the glued collar.
        auto base_w = c.weight;
        Region inner = c.inner, outer = c.outer;
        inner_c.weight = [base_w, inner, outer, wglue](const std::vector<double>& x) {
          double w = base_w ? base_w(x) : plateau_weight(inner, outer, x);
          return w * (1.0 - wglue(x));
        };
      }
      branch_cands.push_back(std::move(inner_c));
    }
    for (std::size_t prev = 0; prev < bidx; ++prev) {
      auto wfun = [cover = cover_, target_ref, prev, bidx, point_of](const std::vector<double>& x) {
        StratumPoint p = point_of(x);
        return cover->nonsep_weight(target_ref, p, static_cast<int>(prev), static_cast<int>(bidx));
      };
      Candidate glue;
      glue.section = out->per_branch[prev];
      glue.weight = wfun;
      branch_cands.insert(branch_cands.begin(), std::move(glue));
    }
    out->per_branch.push_back(inner_->patch(target, branch_cands));
  }
  return out;
}

SectionPtr BranchedSheaf::average(const kcat::FiniteGroup& g, const ChartOpen& open, SectionPtr s) const {
  if (g.size() <= 1) return s;
  const auto& b = as_branched(s);
  auto out = std::make_shared<BranchedSection>();
  out->space = b.space;
  out->per_branch.resize(b.space.size());
  OpenRef open_ref{open.chart_id, open.region};

  // Claim "2average" with I_0 = the orbit transversal {identity label}: set
  // nu'(g* j) := g* nu'(j). Labels move by right translation.
  std::vector<bool> assigned(b.space.size(), false);
  for (std::size_t seed = 0; seed < b.space.size(); ++seed) {
    if (assigned[seed]) continue;
    assigned[seed] = true;
    out->per_branch[seed] = b.per_branch[seed];
    for (std::size_t ge = 1; ge < g.size(); ++ge) {
      auto moved = cover_->pull_group(open_ref, static_cast<int>(ge));
      int target_label = moved[seed];
      if (assigned[target_label]) continue;
      assigned[target_label] = true;
      OpenMorphism mg;
      mg.source_chart = open.chart_id;
      mg.target_chart = open.chart_id;
      mg.fwd = [elem = g.elem(ge)](const StratumPoint& p) { return elem.apply(p); };
      mg.back = [inv = g.elem(g.inverse_index(static_cast<int>(ge)))](const StratumPoint& p) {
        return inv.apply(p);
      };
      mg.back_domain = open.region;
      out->per_branch[target_label] = inner_->restrict(mg, b.per_branch[seed]);
    }
  }

  // Repair the glued collars: branches that are not separated must agree.
  auto point_of = [k = k_, cid = open.chart_id](const std::vector<double>& x) {
    const KChart& c = k->chart_by_id(cid);
    StratumPoint p;
    kcat::ExplodedChart ch = c.chart(Level::Fs);
    p.vertex = 0;
    if (!ch.strata().empty()) p.vertex_coords = ch.strata()[0].coords;
    p.u.assign(x.begin(), x.begin() + c.n);
    p.z.resize(c.m);
    for (int j = 0; j < c.m; ++j) p.z[j] = std::exp(x[c.n + j]);
    return p;
  };
  auto patched = std::make_shared<BranchedSection>(*out);
  for (std::size_t bidx = 1; bidx < b.space.size(); ++bidx) {
    auto wfun = [cover = cover_, open_ref, bidx, point_of](const std::vector<double>& x) {
      return cover->nonsep_weight(open_ref, point_of(x), 0, static_cast<int>(bidx));
    };
    std::vector<Candidate> cands;
    Candidate glue;
    glue.section = patched->per_branch[0];
    glue.weight = wfun;
    cands.push_back(std::move(glue));
    Candidate self;
    self.section = out->per_branch[bidx];
    self.weight = [wfun](const std::vector<double>& x) { return 1.0 - wfun(x); };
    cands.push_back(std::move(self));
    patched->per_branch[bidx] = inner_->patch(ChartOpen{open.chart_id, open.region}, cands);
  }
  return patched;
}

Vec BranchedSheaf::probe(SectionPtr s, const StratumPoint& p) const {
  const auto& b = as_branched(s);
  std::vector<Vec> per;
  Eigen::Index total = 0;
  for (const auto& sec : b.per_branch) {
    per.push_back(inner_->probe(sec, p));
    total += per.back().size();
  }
  Vec out(total);
  Eigen::Index at = 0;
  for (const auto& v : per) {
    out.segment(at, v.size()) = v;
    at += v.size();
  }
  return out;
}

}  // namespace vfc::branched
