#include "vfc/sheaf.hpp"

#include <algorithm>
#include <cmath>

#include "vfc/errors.hpp"

namespace vfc::sheaves {

using kcat::KChart;
using kcat::Level;
using kcat::ExplodedChart;

double plateau_weight(const Region& inner, const Region& outer, const std::vector<double>& x) {
  if (outer.empty()) return 0.0;
  double d_out = outer.depth(x);
  if (d_out <= 0.0) return 0.0;
  if (inner.empty()) {
    double scale = 0.1 * std::max(outer.diameter(), 1e-9);
    return smooth01(d_out / scale);
  }
  double d_in = inner.distance(x);
  if (d_in <= 0.0) return 1.0;
  return smooth01(d_out / (d_in + d_out));
}

// ---- FunctionSheaf ------------------------------------------------------------

namespace {

const FunctionSection& as_fn(const SectionPtr& s) {
  auto p = dynamic_cast<const FunctionSection*>(s.get());
  if (!p) throw err_schema("section is not a function section");
  return *p;
}

struct PatchedFunction {
  struct Part {
    std::function<double(const StratumPoint&)> eval;
    Region inner, outer;
    std::function<double(const std::vector<double>&)> weight;
    bool is_default;
  };
  std::vector<Part> parts;

  double operator()(const StratumPoint& p) const {
    std::vector<double> x = p.region_coords();
    double wmax = 0.0;
    double num = 0.0, den = 0.0;
    int nonzero = -1;
    int count = 0;
    std::vector<double> ws(parts.size(), 0.0);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (parts[k].is_default) continue;
      double w = parts[k].weight ? parts[k].weight(x) : plateau_weight(parts[k].inner, parts[k].outer, x);
      ws[k] = w;
      wmax = std::max(wmax, w);
      if (w > 0) {
        nonzero = static_cast<int>(k);
        ++count;
      }
    }
    for (std::size_t k = 0; k < parts.size(); ++k)
      if (parts[k].is_default) {
        ws[k] = std::max(0.0, 1.0 - wmax);
        if (ws[k] > 0) {
          nonzero = static_cast<int>(k);
          ++count;
        }
      }
    if (count == 1) return parts[nonzero].eval(p);  // plateau zones stay bit-exact
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (ws[k] <= 0) continue;
      num += ws[k] * parts[k].eval(p);
      den += ws[k];
    }
    if (den <= 0) return 0.0;
    return num / den;
  }
};

}  // namespace

SectionPtr FunctionSheaf::make_default(const ChartOpen&) const {
  auto s = std::make_shared<FunctionSection>();
  s->eval = [v = default_value_](const StratumPoint&) { return v; };
  return s;
}

SectionPtr FunctionSheaf::restrict(const OpenMorphism& m, SectionPtr on_target) const {
  const auto& f = as_fn(on_target);
  auto s = std::make_shared<FunctionSection>();
  s->chart_id = m.source_chart;
  s->eval = [fwd = m.fwd, eval = f.eval](const StratumPoint& p) { return eval(fwd(p)); };
  return s;
}

SectionPtr FunctionSheaf::extend(const OpenMorphism& into_target, SectionPtr on_source,
                                 const ChartOpen& target) const {
  const auto& f = as_fn(on_source);
  auto s = std::make_shared<FunctionSection>();
  s->chart_id = target.chart_id;
  s->eval = [back = into_target.back, dom = into_target.back_domain, eval = f.eval,
             dflt = default_value_](const StratumPoint& p) {
    if (!dom.contains(p.region_coords(), 1e-12)) return dflt;
    return eval(back(p));
  };
  return s;
}

SectionPtr FunctionSheaf::patch(const ChartOpen& target, const std::vector<Candidate>& cands) const {
  PatchedFunction pf;
  for (const auto& c : cands) {
    PatchedFunction::Part part;
    part.eval = as_fn(c.section).eval;
    part.inner = c.inner;
    part.outer = c.outer;
    part.weight = c.weight;
    part.is_default = !c.weight && c.inner.empty() && c.outer.empty();
    pf.parts.push_back(std::move(part));
  }
  auto s = std::make_shared<FunctionSection>();
  s->chart_id = target.chart_id;
  s->eval = pf;
  return s;
}

SectionPtr FunctionSheaf::average(const FiniteGroup& g, const ChartOpen& open, SectionPtr sec) const {
  if (g.size() <= 1) return sec;
  const auto& f = as_fn(sec);
  auto s = std::make_shared<FunctionSection>();
  s->chart_id = open.chart_id;
  s->eval = [elems = g.elements(), eval = f.eval](const StratumPoint& p) {
    double sum = 0.0;
    for (const auto& e : elems) sum += eval(e.apply(p));
    return sum / static_cast<double>(elems.size());
  };
  return s;
}

Vec FunctionSheaf::probe(SectionPtr s, const StratumPoint& p) const {
  Vec v(1);
  v(0) = as_fn(s).eval(p);
  return v;
}

// ---- MetricSheaf ------------------------------------------------------------

namespace {

struct MetricSection : SectionBase {
  int chart_id = 0;
  std::function<double(const StratumPoint&)> scale;  // positive
};

const MetricSection& as_metric(const SectionPtr& s) {
  auto p = dynamic_cast<const MetricSection*>(s.get());
  if (!p) throw err_schema("section is not a metric section");
  return *p;
}

}  // namespace

SectionPtr MetricSheaf::make_default(const ChartOpen&) const {
  auto s = std::make_shared<MetricSection>();
  s->scale = [v = default_scale_](const StratumPoint&) { return v; };
  return s;
}

SectionPtr MetricSheaf::restrict(const OpenMorphism& m, SectionPtr on_target) const {
  const auto& f = as_metric(on_target);
  auto s = std::make_shared<MetricSection>();
  s->chart_id = m.source_chart;
  s->scale = [fwd = m.fwd, eval = f.scale](const StratumPoint& p) { return eval(fwd(p)); };
  return s;
}

SectionPtr MetricSheaf::extend(const OpenMorphism& into_target, SectionPtr on_source,
                               const ChartOpen& target) const {
  const auto& f = as_metric(on_source);
  auto s = std::make_shared<MetricSection>();
  s->chart_id = target.chart_id;
  s->scale = [back = into_target.back, dom = into_target.back_domain, eval = f.scale,
              dflt = default_scale_](const StratumPoint& p) {
    if (!dom.contains(p.region_coords(), 1e-12)) return dflt;
    return eval(back(p));
  };
  return s;
}

SectionPtr MetricSheaf::patch(const ChartOpen& target, const std::vector<Candidate>& cands) const {
  PatchedFunction pf;
  for (const auto& c : cands) {
    PatchedFunction::Part part;
    part.eval = as_metric(c.section).scale;
    part.inner = c.inner;
    part.outer = c.outer;
    part.weight = c.weight;
    part.is_default = !c.weight && c.inner.empty() && c.outer.empty();
    pf.parts.push_back(std::move(part));
  }
  auto s = std::make_shared<MetricSection>();
  s->chart_id = target.chart_id;
  s->scale = pf;
  return s;
}

SectionPtr MetricSheaf::average(const FiniteGroup& g, const ChartOpen& open, SectionPtr sec) const {
  if (g.size() <= 1) return sec;
  const auto& f = as_metric(sec);
  auto s = std::make_shared<MetricSection>();
  s->chart_id = open.chart_id;
  s->scale = [elems = g.elements(), eval = f.scale](const StratumPoint& p) {
    double sum = 0.0;
    for (const auto& e : elems) sum += eval(e.apply(p));
    return sum / static_cast<double>(elems.size());
  };
  return s;
}

Vec MetricSheaf::probe(SectionPtr s, const StratumPoint& p) const {
  Vec v(1);
  v(0) = as_metric(s).scale(p);
  return v;
}

// ---- the induction ------------------------------------------------------------

namespace {

Region region_lerp(const Region& a, const Region& b, double t) {
  if (a.empty() || b.empty()) return t > 0.5 ? b : a;
  if (a.boxes.size() != b.boxes.size())
    throw err_schema("schedule interpolation needs matching box counts");
  Region out;
  for (std::size_t i = 0; i < a.boxes.size(); ++i) out.boxes.push_back(a.boxes[i].lerp_to(b.boxes[i], t));
  return out;
}

// Bounding-box image of a region under a point map (exact enough for the
// coordinate-monotone transition maps used here).
Region region_image(const KChart& src, const std::function<StratumPoint(const StratumPoint&)>& map,
                    const Region& reg) {
  Region out;
  for (const auto& bx : reg.boxes) {
    const int dim = bx.dim();
    Box target;
    bool first = true;
    std::size_t corners = std::size_t{1} << dim;
    for (std::size_t mask = 0; mask < corners; ++mask) {
      std::vector<double> x(dim);
      for (int a = 0; a < dim; ++a) x[a] = (mask & (std::size_t{1} << a)) ? bx.hi[a] : bx.lo[a];
      StratumPoint p;
      p.vertex = 0;
      ExplodedChart ch = src.chart(Level::Fs);
      if (ch.strata().empty()) continue;
      p.vertex_coords = ch.strata()[0].coords;
      p.u.assign(x.begin(), x.begin() + src.n);
      p.z.resize(src.m);
      for (int j = 0; j < src.m; ++j) p.z[j] = std::exp(x[src.n + j]);
      StratumPoint q = map(p);
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
    if (!first) out.boxes.push_back(std::move(target));
  }
  return out;
}

struct Morph {
  OpenMorphism m;
  int source_dim = 0;
  int source_id = 0;
};

}  // namespace

GlobalSectionResult global_section(const KuranishiCategory& k, const Sheaf& sheaf, GlobalSectionInput in,
                                   const GlobalSectionOptions& opt) {
  const int ncharts = static_cast<int>(k.charts.size());
  GlobalSectionResult result;
  // Schedule: per chart position (1-based) and step j.
  auto schedule = [&](int idx, int j) -> Region {
    const KChart& c = k.charts[idx];
    const NestedRegions& nr = in.regions.at(c.id);
    int pos = idx + 1;
    bool seeded = in.seed.count(c.id) > 0;
    if (j < pos) {
      if (!seeded) return Region{};
      return region_lerp(nr.k1, nr.k1s, 1.0 - static_cast<double>(j) / pos);
    }
    if (j == pos) return nr.k2s;
    return region_lerp(nr.k2, nr.k2s, std::pow(0.5, j - pos));
  };
  // Schedule conditions, verified by containment.
  for (int idx = 0; idx < ncharts; ++idx) {
    const KChart& c = k.charts[idx];
    const NestedRegions& nr = in.regions.at(c.id);
    int pos = idx + 1;
    for (int j = 0; j <= ncharts; ++j) {
      Region r = schedule(idx, j);
      if (j >= pos && !nr.k2.inside(r, 0.0))
        throw err_schema("shrink schedule violates condition (1) at chart " + std::to_string(c.id));
      if (j < pos && in.seed.count(c.id)) {
        if (!nr.k1.inside(r, 0.0) || !r.inside(nr.k1s, 0.0))
          throw err_schema("shrink schedule violates condition (2) at chart " + std::to_string(c.id));
      }
      if (j >= 1 && j != pos && !r.inside(schedule(idx, j - 1), 0.0))
        throw err_schema("shrink schedule violates condition (3) at chart " + std::to_string(c.id));
    }
  }

  std::map<int, SectionPtr> current;  // by chart id
  for (const auto& [id, sec] : in.seed) current[id] = sec;

  auto sample_points = [&](const KChart& c, const Region& reg, int per_dim) {
    KChart tmp = c;
    tmp.F = reg;
    return kcat::chart_grid(tmp, Level::F, per_dim, c.m > 0 ? 4 : 1);
  };

  for (int j = 1; j <= ncharts; ++j) {
    int target_idx = j - 1;
    const KChart& cj = k.charts[target_idx];
    Region target_region = schedule(target_idx, j);
    ChartOpen target{cj.id, target_region};

    std::vector<Morph> morphs;
    // Same-chart morphism first (identity).
    for (int src_idx = 0; src_idx < ncharts; ++src_idx) {
      const KChart& ci = k.charts[src_idx];
      if (!current.count(ci.id)) continue;
      if (ci.id == cj.id) {
        Morph mm;
        mm.m.source_chart = ci.id;
        mm.m.target_chart = cj.id;
        mm.m.fwd = [](const StratumPoint& p) { return p; };
        mm.m.back = [](const StratumPoint& p) { return p; };
        mm.m.back_domain = schedule(src_idx, j - 1);
        mm.source_dim = ci.dim_total();
        mm.source_id = ci.id;
        morphs.push_back(std::move(mm));
        continue;
      }
      for (const auto& fwd_route : k.routes(ci.id, cj.id))
        for (const auto& bwd_route : k.routes(cj.id, ci.id)) {
          Morph mm;
          mm.m.source_chart = ci.id;
          mm.m.target_chart = cj.id;
          mm.m.fwd = fwd_route.map;
          mm.m.back = bwd_route.map;
          mm.m.back = bwd_route.map;
          mm.m.back_domain = region_image(ci, fwd_route.map, schedule(src_idx, j - 1));
          mm.source_dim = ci.dim_total();
          mm.source_id = ci.id;
          morphs.push_back(std::move(mm));
          break;  // one declared branch per route pair
        }
    }
    std::stable_sort(morphs.begin(), morphs.end(), [](const Morph& a, const Morph& b) {
      if (a.source_dim != b.source_dim) return a.source_dim > b.source_dim;  // max dimension first
      return a.source_id < b.source_id;                                      // ties: lowest id
    });

    std::vector<Sheaf::Candidate> cands;
    for (const auto& mm : morphs) {
      Sheaf::Candidate c;
      int src_idx = k.chart_index(mm.source_id);
      if (mm.source_id == cj.id) {
        c.section = current.at(cj.id);
        bool seeded = in.seed.count(cj.id) > 0;
        c.inner = seeded ? in.regions.at(cj.id).k1 : schedule(src_idx, j);
        c.outer = schedule(src_idx, j - 1);
      } else {
        c.section = sheaf.extend(mm.m, current.at(mm.source_id), target);
        c.inner = region_image(k.charts[src_idx], mm.m.fwd, schedule(src_idx, j));
        c.outer = mm.m.back_domain;
      }
      cands.push_back(std::move(c));
    }
    // Free default far from every prior region.
    Sheaf::Candidate dflt;
    dflt.section = sheaf.make_default(target);
    cands.push_back(dflt);

    SectionPtr patched = sheaf.patch(target, cands);
    SectionPtr averaged = sheaf.average(cj.group, target, patched);

    // Claim "ic" verification on samples: the new section stays compatible
    // with the prior family on the plateaus, and with the seed on K1.
    for (const auto& cand : cands) {
      if (cand.inner.empty()) continue;
      for (const auto& p : sample_points(cj, cand.inner, opt.samples_per_dim)) {
        if (!target_region.contains(p.region_coords(), 1e-12)) continue;
        Vec a = sheaf.probe(averaged, p);
        Vec b = sheaf.probe(cand.section, p);
        if ((a - b).cwiseAbs().maxCoeff() > opt.compat_tol * (1.0 + b.cwiseAbs().maxCoeff()))
          throw err_axiom_violation("step " + std::to_string(j) + ", chart " + std::to_string(cj.id) +
                                    ": patched section leaves a candidate plateau");
      }
    }
    current[cj.id] = averaged;
  }

  // Final restriction to K2 and compatibility verification across overlaps.
  for (int idx = 0; idx < ncharts; ++idx) {
    const KChart& c = k.charts[idx];
    result.sections[c.id] = current.at(c.id);
    result.domains[c.id] = in.regions.at(c.id).k2;
  }
  result.steps = ncharts;
  for (const auto& t : k.transitions) {
    const KChart& ci = k.chart_by_id(t.i);
    for (const auto& route : k.routes(t.i, t.j)) {
      KChart probe_chart = ci;
      probe_chart.F = in.regions.at(t.i).k2;
      for (const auto& p : kcat::chart_grid(probe_chart, Level::F, opt.samples_per_dim, ci.m > 0 ? 4 : 1)) {
        if (!route.defined(p)) continue;
        StratumPoint q = route.map(p);
        if (!in.regions.at(t.j).k2.contains(q.region_coords(), 1e-12)) continue;
        Vec a = sheaf.probe(result.sections.at(t.i), p);
        Vec b = sheaf.probe(result.sections.at(t.j), q);
        if ((a - b).cwiseAbs().maxCoeff() > opt.compat_tol * (1.0 + b.cwiseAbs().maxCoeff()))
          throw err_axiom_violation("final family incompatible across transition (" + std::to_string(t.i) +
                                    "," + std::to_string(t.j) + ")");
      }
      break;  // one route suffices for the sampled check
    }
  }
  return result;
}

std::map<int, SectionPtr> extend_function(const KuranishiCategory& k, int chart_id,
                                          std::function<double(const StratumPoint&)> rho,
                                          const std::map<int, Region>& support_o,
                                          const GlobalSectionOptions& opt) {
  FunctionSheaf sheaf(k, 0.0);
  GlobalSectionInput in;
  for (const auto& c : k.charts) {
    NestedRegions nr;
    nr.k2 = c.F;
    nr.k2s = c.Fs;
    if (c.id == chart_id) {
      nr.k1 = c.F;
      nr.k1s = c.Fp;
    }
    in.regions[c.id] = nr;
  }
  auto seed = std::make_shared<FunctionSection>();
  seed->chart_id = chart_id;
  seed->eval = std::move(rho);
  in.seed[chart_id] = seed;
  auto result = global_section(k, sheaf, std::move(in), opt);

  // Support containment, sampled (SUPPORT_ESCAPE).
  for (const auto& c : k.charts) {
    auto it = support_o.find(c.id);
    KChart tmp = c;
    auto pts = kcat::chart_grid(tmp, Level::F, opt.samples_per_dim + 2, c.m > 0 ? 4 : 1);
    for (const auto& p : pts) {
      double v = sheaf.probe(result.sections.at(c.id), p)(0);
      bool inside = it != support_o.end() && it->second.contains(p.region_coords(), 1e-9);
      if (!inside && std::abs(v) > 1e-9)
        throw err_support_escape("extended function is nonzero outside O on chart " +
                                 std::to_string(c.id));
    }
  }
  return result.sections;
}

std::map<int, std::function<double(const StratumPoint&)>> vanishing_function(
    const KuranishiCategory& k, const std::map<int, Region>& closed_c) {
  std::map<int, std::function<double(const StratumPoint&)>> out;
  for (const auto& c : k.charts) {
    auto it = closed_c.find(c.id);
    if (it == closed_c.end()) {
      out[c.id] = [](const StratumPoint&) { return 1.0; };
      continue;
    }
    Region reg = it->second;
    out[c.id] = [reg](const StratumPoint& p) {
      double d = reg.distance(p.region_coords());
      return d * d;
    };
  }
  return out;
}

}  // namespace vfc::sheaves
