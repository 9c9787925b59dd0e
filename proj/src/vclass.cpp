#include "vfc/vclass.hpp"

#include <algorithm>
#include <cmath>

#include "vfc/errors.hpp"
#include "vfc/newton.hpp"
#include "vfc/parallel.hpp"

namespace vfc::vclass {

using kcat::chart_grid;
using kcat::coords_to_point;
using kcat::KChart;
using kcat::Level;
using kcat::point_to_coords;
using kcat::ExplodedChart;

namespace {

const PerturbationSection& as_pert(const sheaves::SectionPtr& s) {
  auto p = dynamic_cast<const PerturbationSection*>(s.get());
  if (!p) throw err_schema("section is not a perturbation section");
  return *p;
}

// Real Jacobian of nu in the (u, Re z, Im z) coordinates.
Mat real_jacobian(const std::function<CVec(const StratumPoint&)>& nu, const StratumPoint& p,
                  double h = 1e-6) {
  Vec x0 = point_to_coords(p);
  auto fn = [&](const Vec& x) { return complex_to_real(nu(coords_to_point(p, x))); };
  return fd_jacobian(fn, x0, h);
}

double lipschitz_scale(const std::function<CVec(const StratumPoint&)>& nu,
                       const std::vector<StratumPoint>& pts) {
  double s = 1e-9;
  for (const auto& p : pts) s = std::max(s, real_jacobian(nu, p).cwiseAbs().maxCoeff());
  return std::max(s, 1e-6);
}

}  // namespace

SdefReport validate_sdef(const KuranishiCategory& k, int chart_id, const Region& open,
                         const PerturbationSection& nu, const CutoffFamily& cutoffs, const Metric& metric,
                         const PerturbOptions& opt) {
  SdefReport rep;
  const KChart& c = k.chart_by_id(chart_id);
  KChart tmp = c;
  tmp.F = open;
  auto pts = chart_grid(tmp, Level::F, opt.grid_per_dim, c.m > 0 ? 6 : 1);

  for (const auto& p : pts) {
    CVec defect = nu.delta(p);
    // (1) near {rho_i >= 0} the defect lies in V_i.
    for (std::size_t i = 0; i < cutoffs.cutoffs.size(); ++i) {
      if (cutoffs.rho(k, static_cast<int>(i), chart_id, p) < 0.0) continue;
      int small = cutoffs.cutoffs[i].chart_id;
      if (small == chart_id || k.has_inclusion(chart_id, small)) continue;
      if (!k.has_inclusion(small, chart_id)) {
        rep.ok = false;
        rep.note = "no inclusion for an active cutoff";
        continue;
      }
      CMat inc = k.inclusion(small, chart_id);
      CVec proj = inc * (inc.adjoint() * defect);
      rep.worst_defect = std::max(rep.worst_defect, (defect - proj).norm());
      if ((defect - proj).norm() > 1e-7 * (1.0 + defect.norm())) {
        rep.ok = false;
        rep.note = "defect leaves the admissible bundle near an active cutoff";
      }
    }
    // (2) |nu - dbar|_g < 1.
    double mnorm = metric.norm(chart_id, defect);
    rep.worst_metric = std::max(rep.worst_metric, mnorm);
    if (!(mnorm < 1.0)) {
      rep.ok = false;
      rep.note = "metric bound violated";
    }
  }

  // (3) transversality margins on the sampled zero locus.
  ZeroSetOptions zopt;
  zopt.grid_per_dim = opt.grid_per_dim;
  zopt.tau_factor = opt.tau_factor;
  ZeroSet zs;
  try {
    zs = zero_set(k, chart_id, open, nu.eval, zopt);
  } catch (const Error& e) {
    rep.ok = false;
    rep.note = std::string("zero extraction failed: ") + e.what();
    return rep;
  }
  // Charts that declare a tropical holomorphic locus (invisible to vertex
  // sampling) require the perturbed zero set to land in the vertex stratum,
  // where it becomes complete.
  if (c.core_hint && zs.points.empty() && zs.curves.empty()) {
    rep.ok = false;
    rep.note = "declared tropical holomorphic locus but no vertex-stratum zeros";
  }
  double tau = opt.tau_factor * lipschitz_scale(nu.eval, pts);
  auto check_margin = [&](const StratumPoint& x) {
    Mat j = real_jacobian(nu.eval, x);
    double margin = smallest_singular_value(j);
    rep.min_margin = std::min(rep.min_margin, margin);
    if (margin < tau) {
      rep.ok = false;
      rep.note = "transversality margin below threshold";
    }
    // Sdef(2) consequence: wherever nu = 0, some rho > 1/2.
    if (cutoffs.max_rho(k, chart_id, x) <= 0.5) {
      rep.ok = false;
      rep.note = "zero escapes the rho > 1/2 zone";
    }
  };
  for (const auto& zp : zs.points) check_margin(zp.x);
  for (const auto& zc : zs.curves)
    for (std::size_t s = 0; s < zc.samples.size(); s += std::max<std::size_t>(1, zc.samples.size() / 16))
      check_margin(zc.samples[s]);
  for (const auto& cond : opt.extra_conditions) {
    for (const auto& zp : zs.points)
      if (!cond(k, chart_id, zp.x)) {
        rep.ok = false;
        rep.note = "extra transversality condition failed";
      }
  }
  return rep;
}

PerturbationSection perturb(const KuranishiCategory& k, int chart_id, const Region& open,
                            const CutoffFamily& cutoffs, const Metric& metric, std::uint64_t seed,
                            const PerturbOptions& opt) {
  const KChart& c = k.chart_by_id(chart_id);
  Prng rng(seed ^ (0x9e3779b97f4a7c15ULL * (chart_id + 1)));

  // Bump cells decompose the open with overlapping plateaus (edge-to-edge
  // tiles would all vanish on the shared faces and leave degenerate zeros
  // unperturbed). Bumps vary over the u-axes only: along the log|z|
  // directions the defect stays constant, so it survives toward the
  // tropical limit and keeps the winding count honest.
  struct Term {
    Box cell;
    CVec dir;
  };
  std::vector<Term> terms;
  for (const auto& bx : open.boxes) {
    int splits = opt.bump_splits;
    std::vector<Box> cells{bx};
    for (int axis = 0; axis < c.n; ++axis) {
      std::vector<Box> next;
      for (const auto& cell : cells)
        for (int piece = 0; piece < splits; ++piece) {
          Box nb = cell;
          double w = (cell.hi[axis] - cell.lo[axis]) / splits;
          nb.lo[axis] = cell.lo[axis] + piece * w - 0.6 * w;
          nb.hi[axis] = cell.lo[axis] + (piece + 1) * w + 0.6 * w;
          next.push_back(nb);
        }
      cells = std::move(next);
    }
    for (const auto& cell : cells) {
      // Minimal admissible V over the cell: intersect over cutoffs whose
      // support touches the cell; bump cells touching smaller bundles only
      // perturb inside them.
      CMat basis = CMat::Identity(c.d, c.d);
      KChart probe = c;
      probe.F.boxes = {cell};
      auto cell_pts = chart_grid(probe, Level::F, 2, c.m > 0 ? 2 : 1);
      for (std::size_t i = 0; i < cutoffs.cutoffs.size(); ++i) {
        int small = cutoffs.cutoffs[i].chart_id;
        if (small == chart_id || !k.has_inclusion(small, chart_id)) continue;
        bool active = false;
        for (const auto& p : cell_pts) active = active || cutoffs.rho(k, static_cast<int>(i), chart_id, p) >= -0.05;
        if (active) {
          CMat inc = k.inclusion(small, chart_id);
          if (inc.cols() < basis.cols()) basis = inc;
        }
      }
      for (int col = 0; col < basis.cols(); ++col) {
        Term t;
        t.cell = cell;
        t.dir = basis.col(col);
        terms.push_back(std::move(t));
      }
    }
  }

  double mag = 0.45 / std::max(1e-12, metric.scale.count(chart_id) ? metric.scale.at(chart_id) : 1.0);
  for (int attempt = 0; attempt < opt.max_retries; ++attempt) {
    std::vector<Cx> coef(terms.size());
    for (auto& w : coef) w = Cx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    auto chart_copy = c;
    auto terms_copy = terms;
    auto delta = [terms_copy, coef, mag, nu_axes = c.n](const StratumPoint& p) {
      CVec out = CVec::Zero(terms_copy.empty() ? 0 : terms_copy[0].dir.size());
      std::vector<double> x = p.region_coords();
      for (std::size_t a = 0; a < terms_copy.size(); ++a) {
        // profile over the u-axes only
        double b = 1.0;
        const Box& cell = terms_copy[a].cell;
        for (int i = 0; i < nu_axes && b > 0; ++i) {
          double half = 0.5 * (cell.hi[i] - cell.lo[i]);
          double t = std::abs(x[i] - 0.5 * (cell.lo[i] + cell.hi[i])) / half;
          if (t >= 1.0)
            b = 0.0;
          else if (t > 0.35)
            b *= 1.0 - smooth01((t - 0.35) / 0.65);
        }
        if (b > 0) out += mag * b * coef[a] * terms_copy[a].dir;
      }
      return out;
    };
    PerturbationSection nu;
    nu.chart_id = chart_id;
    nu.delta = delta;
    nu.eval = [chart_copy, delta](const StratumPoint& p) {
      return CVec(chart_copy.dbar_at(p) + delta(p));
    };
    // dbar itself may already be transverse: try the bare section first.
    if (attempt == 0) {
      PerturbationSection bare;
      bare.chart_id = chart_id;
      bare.delta = [d = c.d](const StratumPoint&) { return CVec(CVec::Zero(d)); };
      bare.eval = [chart_copy](const StratumPoint& p) { return chart_copy.dbar_at(p); };
      if (validate_sdef(k, chart_id, open, bare, cutoffs, metric, opt).ok) return bare;
    }
    if (validate_sdef(k, chart_id, open, nu, cutoffs, metric, opt).ok) return nu;
    mag *= 0.5;  // halve from the metric bound and retry
  }
  throw err_no_transverse_found("no transverse perturbation found on chart " + std::to_string(chart_id) +
                                " after " + std::to_string(opt.max_retries) + " retries");
}

// ---- PerturbationSheaf ------------------------------------------------------------

sheaves::SectionPtr PerturbationSheaf::make_default(const sheaves::ChartOpen& open) const {
  auto s = std::make_shared<PerturbationSection>(
      perturb(*k_, open.chart_id, open.region, *cutoffs_, *metric_, seed_, opt_));
  return s;
}

sheaves::SectionPtr PerturbationSheaf::restrict(const sheaves::OpenMorphism& m,
                                                sheaves::SectionPtr on_target) const {
  const auto& nu = as_pert(on_target);
  const KChart& src = k_->chart_by_id(m.source_chart);
  auto out = std::make_shared<PerturbationSection>();
  out->chart_id = m.source_chart;
  CMat inc_adj = k_->inclusion(m.source_chart, m.target_chart).adjoint();
  auto src_copy = src;
  out->delta = [fwd = m.fwd, inc_adj, delta = nu.delta](const StratumPoint& p) {
    return CVec(inc_adj * delta(fwd(p)));
  };
  auto dl = out->delta;
  out->eval = [src_copy, dl](const StratumPoint& p) { return CVec(src_copy.dbar_at(p) + dl(p)); };
  return out;
}

sheaves::SectionPtr PerturbationSheaf::extend(const sheaves::OpenMorphism& into_target,
                                              sheaves::SectionPtr on_source,
                                              const sheaves::ChartOpen& target) const {
  // Extension lemma construction: extend the defect nu - dbar as a section
  // of the small bundle along the declared retraction.
  const auto& nu = as_pert(on_source);
  const KChart& tgt = k_->chart_by_id(target.chart_id);
  CMat inc = k_->inclusion(nu.chart_id, target.chart_id);
  auto out = std::make_shared<PerturbationSection>();
  out->chart_id = target.chart_id;
  out->delta = [back = into_target.back, dom = into_target.back_domain, inc,
                delta = nu.delta, d = tgt.d](const StratumPoint& p) {
    if (!dom.contains(p.region_coords(), 1e-12)) return CVec(CVec::Zero(d));
    return CVec(inc * delta(back(p)));
  };
  auto tgt_copy = tgt;
  auto dl = out->delta;
  out->eval = [tgt_copy, dl](const StratumPoint& p) { return CVec(tgt_copy.dbar_at(p) + dl(p)); };
  return out;
}

sheaves::SectionPtr PerturbationSheaf::patch(const sheaves::ChartOpen& target,
                                             const std::vector<Candidate>& cands) const {
  // Lemma "S patching": blend the defects with the partition weights; the
  // blend keeps conditions (1)-(2) (convex combination), transversality is
  // re-validated by the caller and repaired by retrying with a fresh seed.
  const KChart& tgt = k_->chart_by_id(target.chart_id);
  struct Part {
    std::function<CVec(const StratumPoint&)> delta;
    Region inner, outer;
    std::function<double(const std::vector<double>&)> weight;
    bool is_default;
  };
  std::vector<Part> parts;
  for (const auto& cnd : cands) {
    Part part;
    part.delta = as_pert(cnd.section).delta;
    part.inner = cnd.inner;
    part.outer = cnd.outer;
    part.weight = cnd.weight;
    part.is_default = !cnd.weight && cnd.inner.empty() && cnd.outer.empty();
    parts.push_back(std::move(part));
  }
  auto tgt_copy = tgt;
  auto delta = [parts, d = tgt.d](const StratumPoint& p) {
    std::vector<double> x = p.region_coords();
    double wmax = 0.0;
    std::vector<double> ws(parts.size(), 0.0);
    int nonzero = -1, count = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i].is_default) continue;
      double w = parts[i].weight ? parts[i].weight(x)
                                 : sheaves::plateau_weight(parts[i].inner, parts[i].outer, x);
      ws[i] = w;
      wmax = std::max(wmax, w);
      if (w > 0) {
        nonzero = static_cast<int>(i);
        ++count;
      }
    }
    for (std::size_t i = 0; i < parts.size(); ++i)
      if (parts[i].is_default) {
        ws[i] = std::max(0.0, 1.0 - wmax);
        if (ws[i] > 0) {
          nonzero = static_cast<int>(i);
          ++count;
        }
      }
    if (count == 1) return parts[nonzero].delta(p);
    CVec num = CVec::Zero(d);
    double den = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (ws[i] <= 0) continue;
      num += ws[i] * parts[i].delta(p);
      den += ws[i];
    }
    if (den <= 0) return CVec(CVec::Zero(d));
    return CVec(num / den);
  };
  auto out = std::make_shared<PerturbationSection>();
  out->chart_id = target.chart_id;
  out->delta = delta;
  out->eval = [tgt_copy, delta](const StratumPoint& p) { return CVec(tgt_copy.dbar_at(p) + delta(p)); };
  return out;
}

sheaves::SectionPtr PerturbationSheaf::average(const kcat::FiniteGroup&, const sheaves::ChartOpen&,
                                               sheaves::SectionPtr) const {
  throw err_axiom_violation("the perturbation sheaf S has no Averaging axiom; average through S^I");
}

Vec PerturbationSheaf::probe(sheaves::SectionPtr s, const StratumPoint& p) const {
  return complex_to_real(CVec(as_pert(s).eval(p)));
}

// ---- zero sets ------------------------------------------------------------------

namespace {

bool near_existing_point(const std::vector<ZeroPoint>& pts, const StratumPoint& x, double radius) {
  Vec xv = point_to_coords(x);
  for (const auto& zp : pts) {
    if (zp.x.vertex != x.vertex) continue;
    if ((point_to_coords(zp.x) - xv).norm() < radius) return true;
  }
  return false;
}

bool near_curve(const std::vector<ZeroCurve>& curves, const StratumPoint& x, int vertex, double radius) {
  Vec xv = point_to_coords(x);
  for (const auto& c : curves) {
    for (const auto& s : c.samples) {
      if (s.vertex != vertex) continue;
      if ((point_to_coords(s) - xv).norm() < radius) return true;
    }
  }
  return false;
}

int orientation_sign_point(const KChart& c, const Mat& jac) {
  double det = jac.determinant();
  return (det >= 0 ? 1 : -1) * c.orientation;
}

// Frame rule for curves: tangent first, then least-squares preimages of the
// complex basis of V; the sign of that frame against the chart orientation
// orients the tangent.
Vec oriented_tangent(const KChart& c, const Mat& jac) {
  Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullV);
  Vec tau = svd.matrixV().col(svd.matrixV().cols() - 1);
  const int dim = static_cast<int>(jac.cols());
  Mat frame(dim, dim);
  frame.col(0) = tau;
  Eigen::JacobiSVD<Mat> solver(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
  solver.setThreshold(1e-10);
  for (int l = 0; l < dim - 1; ++l) {
    Vec e = Vec::Zero(dim - 1);
    e(l) = 1.0;
    frame.col(l + 1) = solver.solve(e);
  }
  double det = frame.determinant();
  if (det * c.orientation < 0) tau = -tau;
  return tau;
}

}  // namespace

ZeroSet zero_set(const KuranishiCategory& k, int chart_id, const Region& open,
                 const std::function<CVec(const StratumPoint&)>& nu, const ZeroSetOptions& opt) {
  const KChart& c = k.chart_by_id(chart_id);
  const int dim = c.dim_total();
  const int codim = 2 * c.d;
  const int kdim = dim - codim;
  ZeroSet zs;
  zs.kdim = std::max(kdim, 0);
  if (kdim < 0) return zs;  // generic empty intersection
  if (kdim >= 2)
    throw err_dim_unsupported("zero sets of dimension >= 2 need a supplied parametrization");

  KChart probe = c;
  probe.F = open;
  auto seeds = chart_grid(probe, Level::F, opt.grid_per_dim, c.m > 0 ? 8 : 1);
  KChart open_chart = c;
  open_chart.F = open;
  ExplodedChart chart_open = open_chart.chart(Level::F);

  auto residual = [&](const StratumPoint& base) {
    return [&nu, base](const Vec& x) { return complex_to_real(nu(coords_to_point(base, x))); };
  };

  if (kdim == 0) {
    for (const auto& seed : seeds) {
      if (complex_to_real(nu(seed)).norm() > 1.5) continue;
      auto fn = residual(seed);
      NewtonResult res = gauss_newton(fn, point_to_coords(seed));
      if (!res.converged) continue;
      StratumPoint x = coords_to_point(seed, res.x);
      bool bad_z = false;
      for (const auto& w : x.z) bad_z = bad_z || std::abs(w) < 1e-9;
      if (bad_z || !chart_open.contains(x, 1e-9)) continue;
      if (near_existing_point(zs.points, x, opt.dedup_radius)) continue;
      Mat jac = real_jacobian(nu, x);
      ZeroPoint zp;
      zp.x = x;
      zp.sign = orientation_sign_point(c, jac);
      zs.points.push_back(std::move(zp));
    }
    return zs;
  }

  // kdim == 1: grid seeding, Newton projection, oriented predictor-corrector
  // tracing.
  for (const auto& seed : seeds) {
    if (complex_to_real(nu(seed)).norm() > 1.0) continue;
    auto fn = residual(seed);
    NewtonResult res = gauss_newton(fn, point_to_coords(seed));
    if (!res.converged) continue;
    StratumPoint start = coords_to_point(seed, res.x);
    if (!chart_open.contains(start, 1e-9)) continue;
    if (near_curve(zs.curves, start, start.vertex, 2.0 * opt.trace_step)) continue;

    ZeroCurve curve;
    StratumPoint cur = start;
    Vec start_coords = point_to_coords(start);
    for (int step = 0; step < opt.max_trace_steps; ++step) {
      curve.samples.push_back(cur);
      Mat jac = real_jacobian(nu, cur);
      Vec tau = oriented_tangent(c, jac);
      if (step > 0) {
        Vec prev = point_to_coords(curve.samples[curve.samples.size() - 1]) -
                   point_to_coords(curve.samples[curve.samples.size() - 2]);
        if (prev.dot(tau) < 0)
          throw err_refinement_failed("oriented tangent reversed along the traced curve");
      }
      Vec predicted = point_to_coords(cur) + opt.trace_step * tau;
      auto fn2 = residual(cur);
      NewtonResult corrected = gauss_newton(fn2, predicted);
      if (!corrected.converged) throw err_refinement_failed("corrector failed during curve tracing");
      StratumPoint next = coords_to_point(cur, corrected.x);
      if (step > 3 && (corrected.x - start_coords).norm() < 0.75 * opt.trace_step) {
        curve.closed = true;
        break;
      }
      if (!chart_open.contains(next, 1e-9)) break;  // exits the open
      cur = next;
    }
    if (!curve.closed && curve.samples.size() < 3) continue;
    if (!curve.closed) {
      // Trace the other direction from the start to capture the whole arc.
      std::vector<StratumPoint> head;
      StratumPoint back = start;
      for (int step = 0; step < opt.max_trace_steps; ++step) {
        Mat jac = real_jacobian(nu, back);
        Vec tau = oriented_tangent(c, jac);
        Vec predicted = point_to_coords(back) - opt.trace_step * tau;
        auto fn2 = residual(back);
        NewtonResult corrected = gauss_newton(fn2, predicted);
        if (!corrected.converged) break;
        StratumPoint next = coords_to_point(back, corrected.x);
        if (!chart_open.contains(next, 1e-9)) break;
        head.push_back(next);
        back = next;
      }
      std::reverse(head.begin(), head.end());
      head.insert(head.end(), curve.samples.begin(), curve.samples.end());
      curve.samples = std::move(head);
    }
    if (curve.samples.size() >= 3) zs.curves.push_back(std::move(curve));
  }
  return zs;
}

int signed_count(const ZeroSet& zs) {
  int n = 0;
  for (const auto& zp : zs.points) n += zp.sign;
  return n;
}

// ---- virtual class --------------------------------------------------------------

const VirtualClass::ChartPiece& VirtualClass::piece_for_chart(int chart_id) const {
  for (const auto& p : pieces)
    if (p.chart_id == chart_id) return p;
  throw err_schema("no virtual-class piece for chart " + std::to_string(chart_id));
}

VirtualClass build_virtual_class(const KuranishiCategory& k, const CutoffFamily& cutoffs,
                                 const Metric& metric, const WBCover& cover, std::uint64_t seed,
                                 const BuildClassOptions& opt) {
  PerturbationSheaf s_sheaf(k, cutoffs, metric, seed, opt.perturb);
  branched::BranchedSheaf si(k, s_sheaf, cover);

  sheaves::GlobalSectionInput in;
  for (const auto& c : k.charts) {
    sheaves::NestedRegions nr;
    // S lives over K_eps: the induction's outer regions stay within the
    // first extension so the cutoff/metric certificates cover every open.
    nr.k2 = c.F;
    nr.k2s = c.Fp;
    in.regions[c.id] = nr;
  }
  auto family = sheaves::global_section(k, si, std::move(in), opt.global);

  VirtualClass vc;
  vc.seed = seed;
  vc.epsilon = cutoffs.epsilon;
  for (const auto& c : k.charts) {
    VirtualClass::ChartPiece piece;
    piece.chart_id = c.id;
    // Zeros are extracted over the section's whole domain: the K_C zone can
    // reach slightly past F, and pieces there still carry weight.
    piece.open = c.Fp;
    piece.section = family.sections.at(c.id);
    const auto& bs = dynamic_cast<const branched::BranchedSection&>(*piece.section);
    piece.space = bs.space;
    for (std::size_t b = 0; b < bs.space.size(); ++b) {
      const auto& nu = as_pert(bs.per_branch[b]);
      ZeroSet zs = zero_set(k, c.id, piece.open, nu.eval, opt.zeros);
      if (opt.verify_e_membership) {
        for (const auto& zp : zs.points)
          if (!cutoffs.in_kc(k, c.id, zp.x))
            throw err_axiom_violation("zero-set point escapes K_C on chart " + std::to_string(c.id));
        for (const auto& zc : zs.curves)
          for (std::size_t t = 0; t < zc.samples.size();
               t += std::max<std::size_t>(1, zc.samples.size() / 12))
            if (!cutoffs.in_kc(k, c.id, zc.samples[t]))
              throw err_axiom_violation("zero-set curve escapes K_C on chart " + std::to_string(c.id));
      }
      piece.per_branch.push_back(std::move(zs));
    }
    // Wherever two branches are not separated their sections agree, so each
    // zero of one branch must appear in the other (sampled piece equality).
    branched::OpenRef piece_open{piece.chart_id, piece.open};
    for (std::size_t a = 0; a < piece.space.size(); ++a)
      for (std::size_t b2 = a + 1; b2 < piece.space.size(); ++b2) {
        const auto& za = piece.per_branch[a];
        const auto& zb = piece.per_branch[b2];
        for (const auto& zp : za.points) {
          if (cover.separated_at(piece_open, zp.x, static_cast<int>(a), static_cast<int>(b2))) continue;
          bool found = false;
          for (const auto& q : zb.points)
            found = found || (q.x.vertex == zp.x.vertex &&
                              (point_to_coords(q.x) - point_to_coords(zp.x)).norm() < 1e-6);
          if (!found)
            throw err_axiom_violation(
                "branches glued at a zero disagree on their zero sets (chart " + std::to_string(c.id) +
                ")");
        }
      }
    vc.pieces.push_back(std::move(piece));
  }
  return vc;
}

}  // namespace vfc::vclass
