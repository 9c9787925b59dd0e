#include "vfc/kcat.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "vfc/errors.hpp"
#include "vfc/newton.hpp"
#include "vfc/parallel.hpp"

namespace vfc::kcat {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

std::vector<double> grid_axis(double lo, double hi, int count) {
  std::vector<double> xs;
  if (count <= 1) {
    xs.push_back(0.5 * (lo + hi));
    return xs;
  }
  for (int k = 0; k < count; ++k) xs.push_back(lo + (hi - lo) * (k + 0.5) / count);
  return xs;
}

}  // namespace

ExplodedChart KChart::chart(Level lvl) const {
  const Region* r = &F;
  if (lvl == Level::Fp) r = &Fp;
  if (lvl == Level::Fs) r = &Fs;
  if (lvl == Level::U) r = &U;
  tropical::Polytope p = polytope ? *polytope : tropical::Polytope::full_space(m);
  return ExplodedChart(n, m, std::move(p), *r, orientation);
}

CVec KChart::dbar_at(const StratumPoint& p) const {
  if (dbar_fn) return dbar_fn(p);
  auto it = dbar_exprs.find(p.vertex);
  if (it == dbar_exprs.end()) it = dbar_exprs.find(-1);
  if (it == dbar_exprs.end()) throw err_schema("chart " + std::to_string(id) + " has no dbar for vertex");
  ExprEnv env;
  for (int k = 0; k < n; ++k) env["u" + std::to_string(k + 1)] = Cx(p.u[k], 0);
  for (int k = 0; k < m; ++k) env["z" + std::to_string(k + 1)] = p.z[k];
  for (std::size_t k = 0; k < p.vertex_coords.size(); ++k)
    env["t" + std::to_string(k + 1)] = Cx(p.vertex_coords[k], 0);
  CVec v(d);
  for (int k = 0; k < d; ++k) v(k) = it->second[k].eval(env);
  return v;
}

Vec KChart::base_at(const StratumPoint& p) const {
  if (!base_u_coords.empty()) {
    Vec v(static_cast<int>(base_u_coords.size()));
    for (std::size_t k = 0; k < base_u_coords.size(); ++k) v(k) = p.u[base_u_coords[k]];
    return v;
  }
  if (base_fn) return base_fn(p);
  if (base_exprs.empty()) return Vec::Zero(0);
  ExprEnv env;
  for (int k = 0; k < n; ++k) env["u" + std::to_string(k + 1)] = Cx(p.u[k], 0);
  for (int k = 0; k < m; ++k) env["z" + std::to_string(k + 1)] = p.z[k];
  for (std::size_t k = 0; k < p.vertex_coords.size(); ++k)
    env["t" + std::to_string(k + 1)] = Cx(p.vertex_coords[k], 0);
  Vec v(static_cast<int>(base_exprs.size()));
  for (std::size_t k = 0; k < base_exprs.size(); ++k) v(k) = base_exprs[k].eval(env).real();
  return v;
}

Transition Transition::identity_overlap(int i, int j, Region shared) {
  Transition t;
  t.i = i;
  t.j = j;
  t.param_chart = i;
  t.domain = shared;
  auto id_map = [](const StratumPoint& p) { return p; };
  t.to_i = id_map;
  t.to_j = id_map;
  t.from_i = id_map;
  t.from_j = id_map;
  t.image_in_i = shared;
  t.image_in_j = shared;
  return t;
}

const KChart& KuranishiCategory::chart_by_id(int id) const {
  for (const auto& c : charts)
    if (c.id == id) return c;
  throw err_schema("unknown chart id " + std::to_string(id));
}

int KuranishiCategory::chart_index(int id) const {
  for (std::size_t i = 0; i < charts.size(); ++i)
    if (charts[i].id == id) return static_cast<int>(i);
  throw err_schema("unknown chart id " + std::to_string(id));
}

bool KuranishiCategory::has_inclusion(int small_id, int big_id) const {
  if (small_id == big_id) return true;
  return v_inclusions.count({small_id, big_id}) > 0;
}

CMat KuranishiCategory::inclusion(int small_id, int big_id) const {
  if (small_id == big_id) {
    int d = chart_by_id(small_id).d;
    return CMat::Identity(d, d);
  }
  auto it = v_inclusions.find({small_id, big_id});
  if (it == v_inclusions.end())
    throw err_schema("no V-inclusion " + std::to_string(small_id) + " -> " + std::to_string(big_id));
  return it->second;
}

std::vector<KuranishiCategory::Route> KuranishiCategory::routes(int from_id, int to_id) const {
  std::vector<Route> out;
  if (from_id == to_id) {
    Route r;
    r.from = from_id;
    r.to = to_id;
    r.map = [](const StratumPoint& p) { return p; };
    r.defined = [](const StratumPoint&) { return true; };
    out.push_back(std::move(r));
    return out;
  }
  std::vector<Route> legs;
  for (const auto& t : transitions) {
    Route fwd;  // chart i -> chart j through the overlap
    fwd.from = t.i;
    fwd.to = t.j;
    fwd.map = [fi = t.from_i, tj = t.to_j](const StratumPoint& p) { return tj(fi(p)); };
    fwd.defined = [dom = t.image_in_i](const StratumPoint& p) {
      return dom.contains(p.region_coords(), 1e-9);
    };
    legs.push_back(std::move(fwd));
    Route bwd;
    bwd.from = t.j;
    bwd.to = t.i;
    bwd.map = [fj = t.from_j, ti = t.to_i](const StratumPoint& p) { return ti(fj(p)); };
    bwd.defined = [dom = t.image_in_j](const StratumPoint& p) {
      return dom.contains(p.region_coords(), 1e-9);
    };
    legs.push_back(std::move(bwd));
  }
  for (const auto& r : legs)
    if (r.from == from_id && r.to == to_id) out.push_back(r);
  for (const auto& r1 : legs)
    for (const auto& r2 : legs) {
      if (r1.from != from_id || r1.to != r2.from || r2.to != to_id) continue;
      Route r;
      r.from = from_id;
      r.to = to_id;
      r.map = [m1 = r1.map, m2 = r2.map](const StratumPoint& p) { return m2(m1(p)); };
      r.defined = [m1 = r1.map, d1 = r1.defined, d2 = r2.defined](const StratumPoint& p) {
        return d1(p) && d2(m1(p));
      };
      out.push_back(std::move(r));
    }
  return out;
}

// ---- shared sampling helpers -------------------------------------------------

std::vector<StratumPoint> chart_grid(const KChart& kc, Level lvl, int per_dim, int phi_count) {
  std::vector<StratumPoint> pts;
  ExplodedChart ch = kc.chart(lvl);
  if (ch.strata().empty() || ch.region().empty()) return pts;
  const int n = kc.n, m = kc.m;
  for (const auto& st : ch.strata()) {
    for (const auto& box : ch.region().boxes) {
      std::vector<std::vector<double>> axes;
      for (int i = 0; i < n + m; ++i) axes.push_back(grid_axis(box.lo[i], box.hi[i], per_dim));
      for (int j = 0; j < m; ++j) axes.push_back(grid_axis(0.0, kTwoPi, std::max(1, phi_count)));
      std::vector<std::size_t> idx(axes.size(), 0);
      for (;;) {
        StratumPoint p;
        p.vertex = st.index;
        p.vertex_coords = st.coords;
        p.u.resize(n);
        p.z.resize(m);
        for (int i = 0; i < n; ++i) p.u[i] = axes[i][idx[i]];
        for (int j = 0; j < m; ++j) {
          double s = axes[n + j][idx[n + j]];
          double phi = axes[n + m + j][idx[n + m + j]];
          p.z[j] = std::exp(s) * Cx(std::cos(phi), std::sin(phi));
        }
        pts.push_back(std::move(p));
        std::size_t k = 0;
        while (k < axes.size() && ++idx[k] == axes[k].size()) idx[k++] = 0;
        if (k == axes.size()) break;
      }
    }
  }
  return pts;
}

Vec point_to_coords(const StratumPoint& p) {
  Vec x(p.n() + 2 * p.m());
  for (int i = 0; i < p.n(); ++i) x(i) = p.u[i];
  for (int j = 0; j < p.m(); ++j) {
    x(p.n() + 2 * j) = p.z[j].real();
    x(p.n() + 2 * j + 1) = p.z[j].imag();
  }
  return x;
}

StratumPoint coords_to_point(const StratumPoint& shape, const Vec& x) {
  StratumPoint p = shape;
  for (int i = 0; i < p.n(); ++i) p.u[i] = x(i);
  for (int j = 0; j < p.m(); ++j) p.z[j] = Cx(x(p.n() + 2 * j), x(p.n() + 2 * j + 1));
  return p;
}

// ---- validation ----------------------------------------------------------------

namespace {

std::vector<StratumPoint> sample_hol(const KChart& kc, int per_dim) {
  std::vector<StratumPoint> hol;
  ExplodedChart chF = kc.chart(Level::F);
  auto seeds = chart_grid(kc, Level::F, per_dim, kc.m > 0 ? 8 : 1);
  for (const auto& seed : seeds) {
    if (kc.dbar_at(seed).norm() > 2.0) continue;  // cheap prefilter
    auto fn = [&](const Vec& x) -> Vec { return complex_to_real(kc.dbar_at(coords_to_point(seed, x))); };
    NewtonResult res = gauss_newton(fn, point_to_coords(seed));
    if (!res.converged) continue;
    StratumPoint p = coords_to_point(seed, res.x);
    bool bad_z = false;
    for (const auto& w : p.z) bad_z = bad_z || std::abs(w) < 1e-8;
    if (bad_z || !chF.contains(p, 1e-9)) continue;
    bool dup = false;
    for (const auto& q : hol) {
      if (q.vertex != p.vertex) continue;
      double dist2 = 0;
      for (int i = 0; i < p.n(); ++i) dist2 += (p.u[i] - q.u[i]) * (p.u[i] - q.u[i]);
      for (int j = 0; j < p.m(); ++j) dist2 += std::norm(p.z[j] - q.z[j]);
      dup = dup || dist2 < 1e-12;
    }
    if (!dup) hol.push_back(std::move(p));
  }
  return hol;
}

double local_scale(const KChart& kc, const StratumPoint& p) {
  auto fn = [&](const Vec& x) -> Vec { return complex_to_real(kc.dbar_at(coords_to_point(p, x))); };
  Mat j = fd_jacobian(fn, point_to_coords(p));
  double s = j.cwiseAbs().maxCoeff();
  return s > 1e-6 ? s : 1.0;
}

// Orthonormal completion of inclusion columns: basis of V_j / V_i.
CMat inclusion_complement(const CMat& inc) {
  const int dj = static_cast<int>(inc.rows()), di = static_cast<int>(inc.cols());
  CMat full(dj, dj);
  full.leftCols(di) = inc;
  int col = di;
  for (int c = 0; c < dj && col < dj; ++c) {
    CVec cand = CMat::Identity(dj, dj).col(c);
    for (int kq = 0; kq < col; ++kq) cand -= (full.col(kq).adjoint() * cand)(0, 0) * full.col(kq);
    if (cand.norm() > 1e-6) full.col(col++) = cand / cand.norm();
  }
  return full.rightCols(dj - di);
}

}  // namespace

KuranishiCategory build_kuranishi(std::vector<KChart> charts, std::vector<Transition> transitions,
                                  std::map<std::pair<int, int>, CMat> v_inclusions, TargetSpace z,
                                  const BuildOptions& opt) {
  KuranishiCategory k;
  k.charts = std::move(charts);
  k.transitions = std::move(transitions);
  k.v_inclusions = std::move(v_inclusions);
  k.Z = std::move(z);

  std::set<int> ids;
  for (const auto& c : k.charts)
    if (!ids.insert(c.id).second) throw err_schema("duplicate chart id " + std::to_string(c.id));

  for (const auto& c : k.charts) {
    if (c.F.empty()) throw err_bad_nesting("chart " + std::to_string(c.id) + ": empty inner region F");
    if (!c.F.inside(c.Fp, 1e-9) || !c.Fp.inside(c.Fs, 1e-9))
      throw err_bad_nesting("chart " + std::to_string(c.id) + ": need F inside F' inside F# strictly");
    if (!c.F.inside(c.U, 0.0))
      throw err_bad_nesting("chart " + std::to_string(c.id) + ": F escapes the bundle domain U");
    if (c.d < 0) throw err_schema("negative bundle rank");
  }

  for (const auto& c : k.charts) {
    c.group.verify_closure();  // GROUP_NOT_CLOSED on failure
    ExplodedChart chS = c.chart(Level::Fs);
    auto pts = chart_grid(c, Level::Fs, 3, c.m > 0 ? 4 : 1);
    for (const auto& g : c.group.elements())
      for (const auto& p : pts)
        if (!chS.contains(g.apply(p), 1e-6))
          throw err_group_not_closed("chart " + std::to_string(c.id) +
                                     ": group action does not preserve F#");
  }

  double worst_coherence = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& t : k.transitions) {
    const KChart& ci = k.chart_by_id(t.i);
    const KChart& cj = k.chart_by_id(t.j);
    if (ci.dim_total() > cj.dim_total())
      throw err_schema("transition (" + std::to_string(t.i) + "," + std::to_string(t.j) +
                       ") must go from the lower-dimensional chart");
    if (!k.has_inclusion(ci.id, cj.id))
      throw err_schema("Kuranishi inclusion clause violated: neither V contains the other on overlap (" +
                       std::to_string(t.i) + "," + std::to_string(t.j) + ")");
    CMat inc = k.inclusion(ci.id, cj.id);
    if (inc.rows() != cj.d || inc.cols() != ci.d) throw err_schema("inclusion matrix has wrong shape");
    CMat gram = inc.adjoint() * inc;
    if ((gram - CMat::Identity(ci.d, ci.d)).cwiseAbs().maxCoeff() > 1e-9)
      throw err_schema("V-inclusion columns must be orthonormal");

    KChart overlap_chart = k.chart_by_id(t.param_chart);
    overlap_chart.F = t.domain;
    auto samples = chart_grid(overlap_chart, Level::F, 4, overlap_chart.m > 0 ? 4 : 1);
    for (const auto& x : samples) {
      StratumPoint yi = t.to_i(x);
      StratumPoint yj = t.to_j(x);
      CVec lhs = inc * ci.dbar_at(yi);
      CVec rhs = cj.dbar_at(yj);
      double err = (lhs - rhs).norm();
      worst_coherence = std::max(worst_coherence, err);
      if (err > opt.coherence_tol * (1.0 + rhs.norm()))
        throw err_schema("dbar fails coherence across transition (" + std::to_string(t.i) + "," +
                         std::to_string(t.j) + "): error " + std::to_string(err));
      // Declared local inverses: round trips return to a group translate of
      // the sample; the identity sheet must work on at least the identity.
      if (t.image_in_i.contains(yi.region_coords(), 1e-9)) {
        StratumPoint back = t.to_i(t.from_i(yi));
        Vec dx = point_to_coords(back) - point_to_coords(yi);
        if (dx.size() > 0 && dx.cwiseAbs().maxCoeff() > 1e-6)
          throw err_schema("transition from_i is not a local inverse on samples");
      }
      if (t.image_in_j.contains(yj.region_coords(), 1e-9)) {
        StratumPoint back = t.to_j(t.from_j(yj));
        Vec dx = point_to_coords(back) - point_to_coords(yj);
        if (dx.size() > 0 && dx.cwiseAbs().maxCoeff() > 1e-6)
          throw err_schema("transition from_j is not a local inverse on samples");
      }
    }

    if (opt.check_transversality && ci.d < cj.d) {
      CMat perp = inclusion_complement(inc);
      for (const auto& x : samples) {
        StratumPoint seed = t.to_j(x);
        auto locus_fn = [&](const Vec& v) -> Vec {
          CVec w = cj.dbar_at(coords_to_point(seed, v));
          return complex_to_real(CVec(perp.adjoint() * w));
        };
        NewtonResult res = gauss_newton(locus_fn, point_to_coords(seed));
        if (!res.converged) continue;
        StratumPoint at = coords_to_point(seed, res.x);
        if (!cj.chart(Level::Fs).contains(at, 1e-6)) continue;
        Mat jac = fd_jacobian(locus_fn, res.x);
        double margin = smallest_singular_value(jac);
        worst_margin = std::min(worst_margin, margin);
        if (margin < opt.tau_trans * local_scale(cj, at))
          throw err_not_transverse("dbar_" + std::to_string(t.j) + " is not transverse to V_" +
                                   std::to_string(t.i) + " (margin " + std::to_string(margin) + ")");
      }
    }
  }

  for (const auto& c : k.charts) {
    int fanout = 0;
    for (const auto& t : k.transitions) fanout += (t.i == c.id || t.j == c.id) ? 1 : 0;
    if (fanout > 64)
      throw err_not_locally_finite("chart " + std::to_string(c.id) + " has excessive overlap fan-out");
  }

  k.hol_samples.resize(k.charts.size());
  par::for_each(k.charts.size(), [&](std::size_t i) {
    k.hol_samples[i] = sample_hol(k.charts[i], opt.grid_per_dim);
  });

  k.report.max_dbar_coherence_error = worst_coherence;
  k.report.min_transversality_margin = std::isfinite(worst_margin) ? worst_margin : 0.0;
  auto prop = properness(k);
  k.report.proper = prop.proper;
  k.report.complete = prop.complete;
  return k;
}

PropernessReport properness(const KuranishiCategory& k, double margin_fraction) {
  PropernessReport rep;
  rep.proper = true;
  rep.complete = true;
  for (std::size_t i = 0; i < k.charts.size(); ++i) {
    const KChart& c = k.charts[i];
    ExplodedChart chF = c.chart(Level::F);
    if (!chF.region().empty()) {
      Box bb = chF.region().bounding_box();
      double margin = margin_fraction * std::max(1e-6, bb.diameter());
      // Properness is relative to Z: no margin requirement along coordinates
      // the base map projects onto.
      std::vector<bool> is_base(c.n + c.m, false);
      for (int bc : c.base_u_coords)
        if (bc < c.n) is_base[bc] = true;
      for (const auto& p : k.hol_samples[i]) {
        std::vector<double> x = p.region_coords();
        bool interior = false;
        for (const auto& bx : chF.region().boxes) {
          bool in = true;
          for (int a = 0; a < bx.dim(); ++a) {
            double pad = is_base[a] ? 0.0 : -margin;
            if (x[a] < bx.lo[a] - pad || x[a] > bx.hi[a] + pad) in = false;
          }
          interior = interior || in;
        }
        if (!interior) {
          rep.proper = false;
          rep.diagnostics.push_back("chart " + std::to_string(c.id) +
                                    ": sampled holomorphic point sits in the boundary margin");
        }
      }
    }
    tropical::Polytope P = c.polytope ? *c.polytope : tropical::Polytope::full_space(c.m);
    if (!P.is_complete()) {
      rep.complete = false;
      rep.diagnostics.push_back("chart " + std::to_string(c.id) + ": tropical part is not complete");
    }
  }
  rep.complete = rep.complete && rep.proper;
  return rep;
}

// ---- cutoffs ----------------------------------------------------------------

double CutoffFamily::rho(const KuranishiCategory& k, int i, int chart_id, const StratumPoint& p) const {
  const Cutoff& c = cutoffs[i];
  double best = -1.0;
  for (const auto& route : k.routes(chart_id, c.chart_id)) {
    if (!route.defined(p)) continue;
    StratumPoint q = route.map(p);
    double t = c.core.distance(q.region_coords()) / c.margin;
    best = std::max(best, 1.0 - 2.0 * smooth01(t));
  }
  return best;
}

double CutoffFamily::max_rho(const KuranishiCategory& k, int chart_id, const StratumPoint& p) const {
  double best = -1.0;
  for (std::size_t i = 0; i < cutoffs.size(); ++i)
    best = std::max(best, rho(k, static_cast<int>(i), chart_id, p));
  return best;
}

bool CutoffFamily::in_kc(const KuranishiCategory& k, int chart_id, const StratumPoint& p, double tol) const {
  bool some_half = false;
  const KChart& here = k.chart_by_id(chart_id);
  CVec val = here.dbar_at(p);
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    double r = rho(k, static_cast<int>(i), chart_id, p);
    if (r >= 0.5) some_half = true;
    if (r > 0.0) {
      int small = cutoffs[i].chart_id;
      if (small == chart_id || k.has_inclusion(chart_id, small)) continue;
      if (!k.has_inclusion(small, chart_id)) return false;
      CMat inc = k.inclusion(small, chart_id);
      CVec proj = inc * (inc.adjoint() * val);
      if ((val - proj).norm() > tol * (1.0 + val.norm())) return false;
    }
  }
  return some_half;
}

double CutoffFamily::kc_vanishing(const KuranishiCategory& k, int chart_id, const StratumPoint& p) const {
  auto cube = [](double t) { return t * t * t; };
  double total = cube(std::max(0.0, 0.5 - max_rho(k, chart_id, p)));
  const KChart& here = k.chart_by_id(chart_id);
  CVec val = here.dbar_at(p);
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    double ri = rho(k, static_cast<int>(i), chart_id, p);
    if (ri <= 0.0) continue;
    int small = cutoffs[i].chart_id;
    if (small == chart_id || k.has_inclusion(chart_id, small)) continue;
    if (!k.has_inclusion(small, chart_id)) {
      total += cube(ri);
      continue;
    }
    CMat inc = k.inclusion(small, chart_id);
    CVec proj = inc * (inc.adjoint() * val);
    total += cube(ri) * (val - proj).squaredNorm();
  }
  return total;
}

CutoffFamily choose_cutoffs(const KuranishiCategory& k, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw err_schema("epsilon must lie in (0, 1/2)");
  CutoffFamily fam;
  fam.epsilon = epsilon;
  for (std::size_t i = 0; i < k.charts.size(); ++i) {
    const KChart& c = k.charts[i];
    std::optional<Box> core;
    if (c.core_hint) {
      core = c.core_hint->bounding_box();
    } else if (!k.hol_samples[i].empty()) {
      Box b;
      b.lo.assign(c.n + c.m, std::numeric_limits<double>::infinity());
      b.hi.assign(c.n + c.m, -std::numeric_limits<double>::infinity());
      for (const auto& p : k.hol_samples[i]) {
        auto x = p.region_coords();
        for (int a = 0; a < c.n + c.m; ++a) {
          b.lo[a] = std::min(b.lo[a], x[a]);
          b.hi[a] = std::max(b.hi[a], x[a]);
        }
      }
      double pad = 0.05 * std::max(1.0, c.F.diameter());
      core = b.inflate(pad);
    }
    if (!core) continue;
    Box ubb = c.U.bounding_box();
    double room = std::numeric_limits<double>::infinity();
    for (int a = 0; a < c.n + c.m; ++a) {
      room = std::min(room, core->lo[a] - ubb.lo[a]);
      room = std::min(room, ubb.hi[a] - core->hi[a]);
    }
    if (!(room > 0)) throw err_cannot_cover("chart " + std::to_string(c.id) + ": core exceeds U");
    Cutoff cut;
    cut.index = static_cast<int>(fam.cutoffs.size());
    cut.chart_id = c.id;
    cut.core = *core;
    cut.margin = 0.9 * room;
    fam.cutoffs.push_back(cut);
  }
  for (std::size_t i = 0; i < k.charts.size(); ++i)
    for (const auto& p : k.hol_samples[i])
      if (fam.max_rho(k, k.charts[i].id, p) <= 0.5)
        throw err_cannot_cover("sampled holomorphic point escapes all cutoff supports (chart " +
                               std::to_string(k.charts[i].id) + ")");
  return fam;
}

// ---- metric ----------------------------------------------------------------

Metric choose_metric(const KuranishiCategory& k, const CutoffFamily& cutoffs, int grid_per_dim) {
  Metric metric;
  std::vector<double> lam(k.charts.size(), 1.0);
  for (std::size_t i = 0; i < k.charts.size(); ++i) {
    const KChart& c = k.charts[i];
    double cmin = std::numeric_limits<double>::infinity();
    for (const auto& p : chart_grid(c, Level::F, grid_per_dim, c.m > 0 ? 8 : 1)) {
      if (cutoffs.max_rho(k, c.id, p) > 0.5) continue;
      double v = c.dbar_at(p).norm();
      if (v < 1e-9)
        throw err_cannot_scale("chart " + std::to_string(c.id) +
                               ": dbar vanishes where no cutoff exceeds 1/2");
      cmin = std::min(cmin, v);
    }
    if (std::isfinite(cmin)) lam[i] = 2.0 / cmin;
  }
  std::vector<int> comp(k.charts.size());
  for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };
  for (const auto& t : k.transitions) comp[find(k.chart_index(t.i))] = find(k.chart_index(t.j));
  std::map<int, double> comp_max;
  for (std::size_t i = 0; i < comp.size(); ++i) {
    int r = find(static_cast<int>(i));
    double cur = comp_max.count(r) ? comp_max[r] : 0.0;
    comp_max[r] = std::max(cur, lam[i]);
  }
  for (std::size_t i = 0; i < comp.size(); ++i)
    metric.scale[k.charts[i].id] = comp_max[find(static_cast<int>(i))];
  return metric;
}

double Metric::norm(int chart_id, const CVec& w) const {
  auto it = scale.find(chart_id);
  if (it == scale.end()) throw err_schema("metric has no scale for chart " + std::to_string(chart_id));
  return it->second * w.norm();
}

Metric product_metric(const KuranishiCategory& product, const std::vector<Metric>& factor_metrics) {
  Metric metric;
  for (const auto& c : product.charts) {
    if (c.factors.empty()) throw err_schema("product_metric needs weak-product charts");
    double inv2 = 0.0;
    for (const auto& f : c.factors) {
      double lv = factor_metrics[f.factor].scale.at(f.chart_id);
      inv2 += 1.0 / (lv * lv);
    }
    metric.scale[c.id] = 1.0 / std::sqrt(inv2);
  }
  return metric;
}

// ---- pullback ----------------------------------------------------------------

namespace {

Region widen_region(const Region& reg, int old_n, const std::vector<std::pair<double, double>>& fiber) {
  Region w;
  for (const auto& bx : reg.boxes) {
    Box nb;
    for (int a = 0; a < old_n; ++a) {
      nb.lo.push_back(bx.lo[a]);
      nb.hi.push_back(bx.hi[a]);
    }
    for (const auto& [lo, hi] : fiber) {
      nb.lo.push_back(lo);
      nb.hi.push_back(hi);
    }
    for (int a = old_n; a < bx.dim(); ++a) {
      nb.lo.push_back(bx.lo[a]);
      nb.hi.push_back(bx.hi[a]);
    }
    w.boxes.push_back(std::move(nb));
  }
  return w;
}

Region slice_region(const Region& reg, int coord, double value) {
  Region s;
  for (const auto& bx : reg.boxes) {
    if (value < bx.lo[coord] - 1e-12 || value > bx.hi[coord] + 1e-12) continue;
    Box nb;
    for (int a = 0; a < bx.dim(); ++a) {
      if (a == coord) continue;
      nb.lo.push_back(bx.lo[a]);
      nb.hi.push_back(bx.hi[a]);
    }
    s.boxes.push_back(std::move(nb));
  }
  return s;
}

}  // namespace

KuranishiCategory pullback_kuranishi(const KuranishiCategory& k, const TargetSpace& z_new, const Affine& f,
                                     const BuildOptions& opt) {
  const int dz = k.Z.dim, dz_new = z_new.dim;
  if (f.a.rows() != dz || f.a.cols() != dz_new) throw err_schema("pullback map has wrong shape");
  if (dz == 0 && dz_new == 0) return k;

  // Coordinate-affine maps only: each row of A has at most one unit entry.
  std::vector<int> row_src(dz, -1);
  for (int r = 0; r < dz; ++r)
    for (int c = 0; c < dz_new; ++c) {
      if (std::abs(f.a(r, c)) < 1e-12) continue;
      if (std::abs(f.a(r, c) - 1.0) > 1e-12 || row_src[r] != -1)
        throw err_schema("pullback supports coordinate-affine maps (projection o slice) only");
      row_src[r] = c;
    }
  std::vector<int> free_cols;
  for (int c = 0; c < dz_new; ++c) {
    bool used = false;
    for (int r = 0; r < dz; ++r) used = used || row_src[r] == c;
    if (!used) free_cols.push_back(c);
  }
  std::vector<std::pair<int, double>> pinned;
  for (int r = 0; r < dz; ++r)
    if (row_src[r] == -1) pinned.push_back({r, f.b(r)});

  // Mixed maps: slice first, then widen (the two stages compose).
  if (!pinned.empty() && !free_cols.empty()) {
    TargetSpace mid;
    mid.dim = dz - static_cast<int>(pinned.size());
    Box mb;
    for (int r = 0; r < dz; ++r)
      if (row_src[r] != -1) {
        mb.lo.push_back(k.Z.bounds.lo[r]);
        mb.hi.push_back(k.Z.bounds.hi[r]);
      }
    mid.bounds = mb;
    Affine slice_map;
    slice_map.a = Mat::Zero(dz, mid.dim);
    slice_map.b = Vec::Zero(dz);
    int col = 0;
    for (int r = 0; r < dz; ++r) {
      if (row_src[r] != -1)
        slice_map.a(r, col++) = 1.0;
      else
        slice_map.b(r) = f.b(r);
    }
    KuranishiCategory sliced = pullback_kuranishi(k, mid, slice_map, opt);
    Affine widen_map;
    widen_map.a = Mat::Zero(mid.dim, dz_new);
    widen_map.b = Vec::Zero(mid.dim);
    col = 0;
    for (int r = 0; r < dz; ++r)
      if (row_src[r] != -1) widen_map.a(col++, row_src[r]) = 1.0;
    return pullback_kuranishi(sliced, z_new, widen_map, opt);
  }

  std::vector<KChart> charts;
  for (const auto& c : k.charts) {
    if (static_cast<int>(c.base_u_coords.size()) != dz)
      throw err_not_submersion("pullback needs charts with declared coordinate base maps to Z");
    KChart nc = c;

    if (!pinned.empty()) {
      if (pinned.size() > 1) throw err_schema("multi-coordinate slices are composed one at a time");
      if (c.group.size() > 1)
        throw err_schema("pullback slicing of charts with nontrivial groups is unsupported");
      auto [zc, value] = pinned[0];
      int ucoord = c.base_u_coords[zc];
      nc.F = slice_region(c.F, ucoord, value);
      nc.Fp = slice_region(c.Fp, ucoord, value);
      nc.Fs = slice_region(c.Fs, ucoord, value);
      nc.U = slice_region(c.U, ucoord, value);
      if (nc.F.empty()) continue;  // "we discard the indices"
      nc.n = c.n - 1;
      auto lift = [ucoord, value, cn = c.n](const StratumPoint& p) {
        StratumPoint q = p;
        q.u.clear();
        q.u.reserve(cn);
        int src = 0;
        for (int a = 0; a < cn; ++a) q.u.push_back(a == ucoord ? value : p.u[src++]);
        return q;
      };
      KChart inner = c;
      nc.dbar_exprs.clear();
      nc.dbar_fn = [inner, lift](const StratumPoint& p) { return inner.dbar_at(lift(p)); };
      nc.base_u_coords.clear();
      for (int r = 0; r < dz; ++r)
        if (r != zc) {
          int uc = c.base_u_coords[r];
          nc.base_u_coords.push_back(uc - (uc > ucoord ? 1 : 0));
        }
      nc.group = FiniteGroup::trivial(nc.n, nc.m);
      nc.core_hint.reset();
      nc.factors.clear();
    }

    if (!free_cols.empty()) {
      int extra = static_cast<int>(free_cols.size());
      int old_n = nc.n;
      auto fiber_at = [&](double pad_frac) {
        std::vector<std::pair<double, double>> fiber;
        for (int e = 0; e < extra; ++e) {
          double lo = z_new.bounds.lo[free_cols[e]], hi = z_new.bounds.hi[free_cols[e]];
          double pad = pad_frac * (hi - lo);
          fiber.push_back({lo - pad, hi + pad});
        }
        return fiber;
      };
      // The chart extends over the whole fiber; the nested extensions grow a
      // little in the fiber direction to keep the nesting strict.
      nc.F = widen_region(nc.F, old_n, fiber_at(0.0));
      nc.Fp = widen_region(nc.Fp, old_n, fiber_at(0.2));
      nc.Fs = widen_region(nc.Fs, old_n, fiber_at(0.5));
      nc.U = widen_region(nc.U, old_n, fiber_at(0.35));
      KChart inner = nc;
      inner.n = old_n;  // evaluation keeps the original chart coords
      auto shrink_pt = [old_n](const StratumPoint& p) {
        StratumPoint q = p;
        q.u.assign(p.u.begin(), p.u.begin() + old_n);
        return q;
      };
      nc.n = old_n + extra;
      nc.dbar_exprs.clear();
      nc.dbar_fn = [inner, shrink_pt](const StratumPoint& p) { return inner.dbar_at(shrink_pt(p)); };
      std::vector<int> bc;
      for (int c2 = 0; c2 < dz_new; ++c2) {
        bool found = false;
        for (int r = 0; r < dz; ++r)
          if (row_src[r] == c2) {
            bc.push_back(nc.base_u_coords[r]);
            found = true;
          }
        if (!found) {
          auto it = std::find(free_cols.begin(), free_cols.end(), c2);
          bc.push_back(old_n + static_cast<int>(it - free_cols.begin()));
        }
      }
      nc.base_u_coords = bc;
      if (nc.group.size() > 1) {
        std::vector<GroupElement> gens;
        for (const auto& e : nc.group.elements()) {
          GroupElement g = GroupElement::identity(nc.n, nc.m);
          g.a.topLeftCorner(old_n, old_n) = e.a;
          g.b.head(old_n) = e.b;
          g.perm = e.perm;
          g.phase = e.phase;
          g.conj_z = e.conj_z;
          gens.push_back(g);
        }
        nc.group = FiniteGroup::generated(nc.n, nc.m, gens, static_cast<int>(nc.group.size()) + 1);
      } else {
        nc.group = FiniteGroup::trivial(nc.n, nc.m);
      }
      nc.core_hint.reset();
      nc.factors.clear();
    }

    charts.push_back(std::move(nc));
  }
  if (charts.empty()) throw err_schema("pullback discarded every chart");
  // Transitions and inclusions: fixtures pull back single-chart or
  // transition-free categories; inclusions survive unchanged.
  return build_kuranishi(std::move(charts), {}, k.v_inclusions, z_new, opt);
}

// ---- weak product ----------------------------------------------------------------

KuranishiCategory weak_product(const std::vector<KuranishiCategory>& factors,
                               const std::vector<WeakProductChart>& product_charts,
                               const BuildOptions& opt) {
  if (factors.empty()) throw err_schema("weak product of zero factors");
  std::vector<KChart> charts;
  int next_id = 0;
  for (const auto& wpc : product_charts) {
    if (wpc.factor_chart_ids.size() != factors.size())
      throw err_schema("product chart must pick one chart per factor");
    KChart nc;
    nc.id = next_id++;
    std::vector<const KChart*> parts;
    for (std::size_t v = 0; v < factors.size(); ++v)
      parts.push_back(&factors[v].chart_by_id(wpc.factor_chart_ids[v]));

    int u_off = 0, z_off = 0, d_off = 0;
    for (std::size_t v = 0; v < parts.size(); ++v) {
      KChart::FactorSlice fs;
      fs.factor = static_cast<int>(v);
      fs.chart_id = parts[v]->id;
      fs.u_off = u_off;
      fs.z_off = z_off;
      fs.d_off = d_off;
      fs.n = parts[v]->n;
      fs.m = parts[v]->m;
      fs.d = parts[v]->d;
      nc.factors.push_back(fs);
      u_off += parts[v]->n;
      z_off += parts[v]->m;
      d_off += parts[v]->d;
    }
    nc.n = u_off;
    nc.m = z_off;
    nc.d = d_off;
    nc.orientation = 1;
    for (const auto* p : parts) nc.orientation *= p->orientation;

    // Product polytope: block-diagonal constraints.
    std::vector<tropical::Constraint> cons;
    int m_off = 0;
    for (const auto* p : parts) {
      tropical::Polytope pol = p->polytope ? *p->polytope : tropical::Polytope::full_space(p->m);
      for (const auto& c : pol.constraints()) {
        tropical::Constraint nc2;
        nc2.normal.assign(nc.m, Int(0));
        for (int a = 0; a < p->m; ++a) nc2.normal[m_off + a] = c.normal[a];
        nc2.offset = c.offset;
        nc2.strict = c.strict;
        cons.push_back(std::move(nc2));
      }
      m_off += p->m;
    }
    nc.polytope = tropical::Polytope::from_constraints(nc.m, cons);

    // Product regions: cross products of boxes with (u.., s..) reordering.
    auto product_region = [&](Level lvl) {
      Region out;
      std::vector<const Region*> regs;
      std::vector<Region> tmp;
      for (const auto* p : parts) {
        switch (lvl) {
          case Level::F: tmp.push_back(p->F); break;
          case Level::Fp: tmp.push_back(p->Fp); break;
          case Level::Fs: tmp.push_back(p->Fs); break;
          case Level::U: tmp.push_back(p->U); break;
        }
      }
      for (const auto& r : tmp) regs.push_back(&r);
      std::vector<std::size_t> pick(parts.size(), 0);
      for (;;) {
        Box nb;
        nb.lo.assign(nc.n + nc.m, 0.0);
        nb.hi.assign(nc.n + nc.m, 0.0);
        int uo = 0, so = 0;
        for (std::size_t v = 0; v < parts.size(); ++v) {
          const Box& bx = regs[v]->boxes[pick[v]];
          for (int a = 0; a < parts[v]->n; ++a) {
            nb.lo[uo + a] = bx.lo[a];
            nb.hi[uo + a] = bx.hi[a];
          }
          for (int a = 0; a < parts[v]->m; ++a) {
            nb.lo[nc.n + so + a] = bx.lo[parts[v]->n + a];
            nb.hi[nc.n + so + a] = bx.hi[parts[v]->n + a];
          }
          uo += parts[v]->n;
          so += parts[v]->m;
        }
        out.boxes.push_back(std::move(nb));
        std::size_t k2 = 0;
        while (k2 < parts.size() && ++pick[k2] == regs[k2]->boxes.size()) pick[k2++] = 0;
        if (k2 == parts.size()) break;
      }
      return out;
    };
    nc.F = product_region(Level::F);
    nc.Fp = product_region(Level::Fp);
    nc.Fs = product_region(Level::Fs);
    nc.U = product_region(Level::U);
    if (wpc.shrink) {
      // User shrinking: replace F by the intersection with the shrink boxes
      // (the shrink region must sit inside the product F).
      if (!wpc.shrink->inside(nc.F, 0.0))
        throw err_schema("shrink region escapes the product chart");
      nc.F = *wpc.shrink;
    }

    // Product group (block action).
    {
      std::vector<GroupElement> gens;
      for (std::size_t v = 0; v < parts.size(); ++v) {
        const auto& fs = nc.factors[v];
        for (const auto& e : parts[v]->group.elements()) {
          GroupElement g = GroupElement::identity(nc.n, nc.m);
          g.a.block(fs.u_off, fs.u_off, fs.n, fs.n) = e.a;
          g.b.segment(fs.u_off, fs.n) = e.b;
          for (int a = 0; a < fs.m; ++a) {
            g.perm[fs.z_off + a] = fs.z_off + e.perm[a];
            g.phase[fs.z_off + a] = e.phase[a];
            g.conj_z[fs.z_off + a] = e.conj_z[a];
          }
          gens.push_back(g);
        }
      }
      std::size_t order = 1;
      for (const auto* p : parts) order *= p->group.size();
      nc.group = FiniteGroup::generated(nc.n, nc.m, gens, static_cast<int>(order) + 1);
      if (nc.group.size() != order) throw err_group_not_closed("product group has unexpected order");
    }

    // dbar = product of the factors' sections.
    {
      auto slices = nc.factors;
      std::vector<KChart> inner;
      for (const auto* p : parts) inner.push_back(*p);
      nc.dbar_fn = [slices, inner](const StratumPoint& p) {
        CVec out(0);
        int total = 0;
        for (const auto& fs : slices) total += fs.d;
        out.resize(total);
        for (std::size_t v = 0; v < slices.size(); ++v) {
          const auto& fs = slices[v];
          StratumPoint q;
          q.vertex = 0;  // factor vertex resolved below
          q.u.assign(p.u.begin() + fs.u_off, p.u.begin() + fs.u_off + fs.n);
          q.z.assign(p.z.begin() + fs.z_off, p.z.begin() + fs.z_off + fs.m);
          // Factor vertex coords: slice of the product vertex coords.
          q.vertex_coords.assign(p.vertex_coords.begin() + fs.z_off,
                                 p.vertex_coords.begin() + fs.z_off + fs.m);
          // Resolve the factor's vertex index by matching coords.
          ExplodedChart fc = inner[v].chart(Level::Fs);
          int vi = 0;
          double best = std::numeric_limits<double>::infinity();
          for (const auto& st : fc.strata()) {
            double dist = 0;
            for (int a = 0; a < fs.m; ++a)
              dist += std::abs(st.coords[a] - q.vertex_coords[a]);
            if (dist < best) {
              best = dist;
              vi = st.index;
            }
          }
          q.vertex = vi;
          out.segment(fs.d_off, fs.d) = inner[v].dbar_at(q);
        }
        return out;
      };
    }

    // Base map: concatenation of factor base coordinates.
    {
      nc.base_u_coords.clear();
      for (std::size_t v = 0; v < parts.size(); ++v)
        for (int bcoord : parts[v]->base_u_coords)
          nc.base_u_coords.push_back(nc.factors[v].u_off + bcoord);
    }
    charts.push_back(std::move(nc));
  }

  // Bundle inclusions between product charts: blockwise when every factor
  // nests the same way. Overlapping product charts without such inclusions
  // must have been shrunk apart; the compatibility checker rejects otherwise.
  std::map<std::pair<int, int>, CMat> incs;
  std::vector<Transition> transitions;  // products of identity overlaps only
  for (std::size_t aIdx = 0; aIdx < charts.size(); ++aIdx)
    for (std::size_t bIdx = 0; bIdx < charts.size(); ++bIdx) {
      if (aIdx == bIdx) continue;
      const KChart& A = charts[aIdx];
      const KChart& B = charts[bIdx];
      bool a_into_b = true;
      for (std::size_t v = 0; v < factors.size(); ++v)
        a_into_b = a_into_b && factors[v].has_inclusion(A.factors[v].chart_id, B.factors[v].chart_id);
      if (!a_into_b) continue;
      CMat inc = CMat::Zero(B.d, A.d);
      for (std::size_t v = 0; v < factors.size(); ++v) {
        CMat fi = factors[v].inclusion(A.factors[v].chart_id, B.factors[v].chart_id);
        inc.block(B.factors[v].d_off, A.factors[v].d_off, fi.rows(), fi.cols()) = fi;
      }
      incs[{A.id, B.id}] = inc;
    }

  TargetSpace z;
  z.dim = 0;
  for (const auto& f : factors) z.dim += f.Z.dim;
  Box zb;
  for (const auto& f : factors) {
    for (std::size_t a = 0; a < f.Z.bounds.lo.size(); ++a) {
      zb.lo.push_back(f.Z.bounds.lo[a]);
      zb.hi.push_back(f.Z.bounds.hi[a]);
    }
  }
  z.bounds = zb;

  KuranishiCategory out = build_kuranishi(std::move(charts), std::move(transitions), std::move(incs), z, opt);

  // NOT_COVERING: every tuple of factor hol samples must land in some chart.
  std::vector<std::vector<StratumPoint>> tuples;
  std::function<void(std::size_t, std::vector<StratumPoint>&)> rec = [&](std::size_t v,
                                                                         std::vector<StratumPoint>& acc) {
    if (v == factors.size()) {
      tuples.push_back(acc);
      return;
    }
    for (std::size_t ci = 0; ci < factors[v].charts.size(); ++ci)
      for (const auto& p : factors[v].hol_samples[ci]) {
        acc.push_back(p);
        acc.back().vertex = factors[v].charts[ci].id;  // stash the chart id
        rec(v + 1, acc);
        acc.pop_back();
      }
  };
  std::vector<StratumPoint> acc;
  rec(0, acc);
  for (const auto& tup : tuples) {
    bool covered = false;
    for (const auto& c : out.charts) {
      bool onchart = true;
      std::vector<double> coords(c.n + c.m);
      for (std::size_t v = 0; v < tup.size() && onchart; ++v) {
        if (c.factors[v].chart_id != tup[v].vertex) {
          onchart = false;
          break;
        }
        auto rc = tup[v].region_coords();
        for (int a = 0; a < c.factors[v].n; ++a) coords[c.factors[v].u_off + a] = rc[a];
        for (int a = 0; a < c.factors[v].m; ++a)
          coords[c.n + c.factors[v].z_off + a] = rc[c.factors[v].n + a];
      }
      covered = covered || (onchart && c.F.contains(coords, 1e-9));
    }
    if (!covered)
      throw err_not_covering("a product holomorphic sample escapes every shrunk product chart");
  }
  return out;
}

}  // namespace vfc::kcat
