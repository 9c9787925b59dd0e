#include "vfc/vint.hpp"

#include <algorithm>
#include <cmath>

#include "vfc/errors.hpp"
#include "vfc/parallel.hpp"
#include "vfc/quadrature.hpp"

namespace vfc::vint {

using charts::Tangent;
using kcat::chart_grid;
using kcat::KChart;
using kcat::Level;
using kcat::point_to_coords;

namespace {

// Plateau profile of a box pair (1 on core, 0 outside support).
double pair_bump(const Box& core, const Box& support, const std::vector<double>& x) {
  Region inner;
  inner.boxes.push_back(core);
  Region outer;
  outer.boxes.push_back(support);
  return sheaves::plateau_weight(inner, outer, x);
}

}  // namespace

double PartitionOfUnity::numerator(const KuranishiCategory& k, int piece, int chart_id,
                                   const StratumPoint& p) const {
  const Piece& pc = pieces[piece];
  const KChart& home = k.chart_by_id(pc.chart_id);
  double best = 0.0;
  for (const auto& route : k.routes(chart_id, pc.chart_id)) {
    if (!route.defined(p)) continue;
    StratumPoint q = route.map(p);
    // G_k-invariant numerator: average the plateau over the group orbit.
    double sum = 0.0;
    for (const auto& g : home.group.elements()) sum += pair_bump(pc.core, pc.support, g.apply(q).region_coords());
    best = std::max(best, sum / static_cast<double>(home.group.size()));
  }
  if (pinned_neighborhood && pc.pinned >= 0.0) {
    // Inside the pinned zone the numerator freezes.
    const auto& [pin_chart, pin_region] = *pinned_neighborhood;
    for (const auto& route : k.routes(chart_id, pin_chart)) {
      if (!route.defined(p)) continue;
      if (pin_region.contains(route.map(p).region_coords(), 1e-12)) return pc.pinned;
    }
  }
  return best;
}

double PartitionOfUnity::denominator(const KuranishiCategory& k, const CutoffFamily& cutoffs,
                                     int chart_id, const StratumPoint& p) const {
  double sum = cutoffs.kc_vanishing(k, chart_id, p);
  for (std::size_t j = 0; j < pieces.size(); ++j) sum += numerator(k, static_cast<int>(j), chart_id, p);
  return sum;
}

double PartitionOfUnity::r(const KuranishiCategory& k, const CutoffFamily& cutoffs, int piece,
                           int chart_id, const StratumPoint& p) const {
  const Piece& pc = pieces[piece];
  double num = numerator(k, piece, chart_id, p);
  if (num == 0.0) return 0.0;
  double den = denominator(k, cutoffs, chart_id, p);
  double order = static_cast<double>(k.chart_by_id(pc.chart_id).group.size());
  return num / (order * den);
}

double PartitionOfUnity::fiber_sum(const KuranishiCategory& k, const CutoffFamily& cutoffs, int chart_id,
                                   const StratumPoint& p) const {
  // Fiber of the stack point over each O_k: group orbit of every routed
  // presentation on the piece's chart.
  double total = 0.0;
  for (std::size_t piece = 0; piece < pieces.size(); ++piece) {
    const Piece& pc = pieces[piece];
    const KChart& home = k.chart_by_id(pc.chart_id);
    bool routed = false;
    StratumPoint q;
    for (const auto& route : k.routes(chart_id, pc.chart_id)) {
      if (!route.defined(p)) continue;
      q = route.map(p);
      routed = true;
      break;
    }
    if (!routed) continue;
    for (const auto& g : home.group.elements())
      total += r(k, cutoffs, static_cast<int>(piece), pc.chart_id, g.apply(q));
  }
  return total;
}

PartitionOfUnity build_partition(const KuranishiCategory& k, const CutoffFamily& cutoffs, double inflate,
                                 std::optional<std::pair<int, Region>> pinned) {
  PartitionOfUnity part;
  part.pinned_neighborhood = pinned;
  for (const auto& cut : cutoffs.cutoffs) {
    PartitionOfUnity::Piece piece;
    piece.chart_id = cut.chart_id;
    piece.core = cut.core.inflate(inflate * 0.55 * cut.margin);
    piece.support = cut.core.inflate(inflate * 1.6 * cut.margin);
    if (pinned && pinned->first == cut.chart_id) piece.pinned = 1.0;
    if (pinned && pinned->first != cut.chart_id) piece.pinned = 0.0;
    part.pieces.push_back(piece);
  }
  if (part.pieces.empty()) return part;  // empty holomorphic locus: nothing to cover
  // COVER_FAIL when sampled K_C points escape every support.
  for (std::size_t ci = 0; ci < k.charts.size(); ++ci) {
    const KChart& c = k.charts[ci];
    for (const auto& p : chart_grid(c, Level::F, 7, c.m > 0 ? 6 : 1)) {
      if (!cutoffs.in_kc(k, c.id, p)) continue;
      double num = 0.0;
      for (std::size_t piece = 0; piece < part.pieces.size(); ++piece)
        num += part.numerator(k, static_cast<int>(piece), c.id, p);
      if (num <= 0.0)
        throw err_cover_fail("sampled K_C point escapes every partition support (chart " +
                             std::to_string(c.id) + ")");
    }
  }
  return part;
}

// ---- integration -----------------------------------------------------------------

namespace {

StratumPoint midpoint(const StratumPoint& a, const StratumPoint& b) {
  StratumPoint m = a;
  for (int i = 0; i < a.n(); ++i) m.u[i] = 0.5 * (a.u[i] + b.u[i]);
  for (int j = 0; j < a.m(); ++j) m.z[j] = 0.5 * (a.z[j] + b.z[j]);
  return m;
}

Tangent segment_vector(const StratumPoint& a, const StratumPoint& b) {
  Tangent t(a.n() + 2 * a.m());
  for (int i = 0; i < a.n(); ++i) t[i] = b.u[i] - a.u[i];
  for (int j = 0; j < a.m(); ++j) {
    Cx dz = b.z[j] - a.z[j];
    t[a.n() + 2 * j] = dz.real();
    t[a.n() + 2 * j + 1] = dz.imag();
  }
  return t;
}

// Weighted integral of a (piece-dim)-form over a zero set.
double integrate_zero_set(const vclass::ZeroSet& zs, const Form& theta,
                          const std::function<double(const StratumPoint&)>& weight) {
  double total = 0.0;
  if (zs.kdim == 0) {
    for (const auto& zp : zs.points) total += zp.sign * weight(zp.x) * theta(zp.x, {});
    return total;
  }
  for (const auto& curve : zs.curves) {
    const auto& pts = curve.samples;
    const std::size_t n = pts.size();
    if (n < 2) continue;
    const std::size_t segs = curve.closed ? n : n - 1;
    for (std::size_t s = 0; s < segs; ++s) {
      const StratumPoint& a = pts[s];
      const StratumPoint& b = pts[(s + 1) % n];
      StratumPoint mid = midpoint(a, b);
      total += weight(mid) * theta(mid, {segment_vector(a, b)});
    }
  }
  return total;
}

int virtual_dimension(const KuranishiCategory& k) {
  int vdim = k.charts.empty() ? 0 : k.charts[0].dim_total() - 2 * k.charts[0].d;
  for (const auto& c : k.charts)
    if (c.dim_total() - 2 * c.d != vdim) throw err_schema("charts disagree on the virtual dimension");
  return vdim;
}

}  // namespace

double integrate_vclass(const KuranishiCategory& k, const CutoffFamily& cutoffs, const VirtualClass& vc,
                        const Form& theta, const PartitionOfUnity& part, const IntegrateOptions&) {
  int vdim = virtual_dimension(k);
  if (theta.degree() != vdim)
    throw err_degree_mismatch("integrand degree " + std::to_string(theta.degree()) +
                              " != virtual dimension " + std::to_string(vdim));
  double total = 0.0;
  for (std::size_t piece = 0; piece < part.pieces.size(); ++piece) {
    int cid = part.pieces[piece].chart_id;
    const auto& cp = vc.piece_for_chart(cid);
    for (std::size_t b = 0; b < cp.space.size(); ++b) {
      double mu = rat_to_double(cp.space.mu[b]);
      auto weight = [&](const StratumPoint& x) {
        return part.r(k, cutoffs, static_cast<int>(piece), cid, x);
      };
      total += mu * integrate_zero_set(cp.per_branch[b], theta, weight);
    }
  }
  return total;
}

// ---- pushforward -----------------------------------------------------------------

PushforwardConfig PushforwardConfig::standard(int dim_a, double radius) {
  PushforwardConfig cfg;
  cfg.L = Mat::Zero(dim_a, 2 * dim_a);
  for (int i = 0; i < dim_a; ++i) cfg.L(i, i) = 1.0;
  cfg.bump_radius = radius;
  return cfg;
}

namespace {

double bump1(double t) {
  double q = 1 - t * t;
  return q > 0 ? q * q * q : 0.0;
}

struct ThomData {
  Mat L, Lp, N;  // pseudo-inverse and null basis
  double radius = 1.0;
  double norm = 1.0;  // normalizer: fiber integral of e equals 1

  double profile(const Vec& w) const {
    double v = 1.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) v *= bump1(w(i) / radius);
    return v;
  }
};

ThomData make_thom(const PushforwardConfig& cfg, int dim_a) {
  ThomData td;
  td.L = cfg.L;
  td.radius = cfg.bump_radius;
  if (td.L.rows() != dim_a || td.L.cols() != 2 * dim_a) throw err_schema("pushforward L has wrong shape");
  Eigen::JacobiSVD<Mat> svd(td.L, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (dim_a > 0 && svd.singularValues()(dim_a - 1) < 1e-9)
    throw err_not_submersion("pushforward map x is not fiberwise submersive");
  td.Lp = svd.solve(Mat::Identity(dim_a, dim_a));
  td.N = svd.matrixV().rightCols(dim_a);
  // Normalize so the fiber integral of e is exactly 1 at working precision.
  if (dim_a > 0) {
    double mass = 1.0;
    // product profile: mass = (INT bump1)^(2 dim_a) * radius^(2 dim_a)
    double one_d = integrate_gl8_1d(-1.0, 1.0, [](double t) { return bump1(t); });
    mass = std::pow(one_d * td.radius, 2 * dim_a);
    td.norm = 1.0 / mass;
  }
  return td;
}

}  // namespace

double PushedForm::operator()(const Vec& a, const Mat& vectors) const {
  if (dim_ == 0) return coeff_.empty() ? 0.0 : coeff_[0][0];
  // Multilinear interpolation of each multi-index coefficient, then pairing
  // with the argument vectors (determinant expansion over index subsets).
  std::vector<double> t(dim_);
  std::vector<int> base(dim_);
  for (int i = 0; i < dim_; ++i) {
    double step = (bounds_.hi[i] - bounds_.lo[i]) / (shape_[i] - 1);
    double s = (a(i) - bounds_.lo[i]) / step;
    int b = std::clamp(static_cast<int>(std::floor(s)), 0, shape_[i] - 2);
    base[i] = b;
    t[i] = std::clamp(s - b, 0.0, 1.0);
  }
  auto node_value = [&](const std::vector<double>& values) {
    double out = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << dim_); ++corner) {
      double w = 1.0;
      std::size_t idx = 0, stride = 1;
      for (int i = 0; i < dim_; ++i) {
        int off = (corner >> i) & 1;
        w *= off ? t[i] : 1.0 - t[i];
        idx += static_cast<std::size_t>(base[i] + off) * stride;
        stride *= shape_[i];
      }
      out += w * values[idx];
    }
    return out;
  };
  double total = 0.0;
  for (std::size_t mi = 0; mi < multi_indices_.size(); ++mi) {
    const auto& J = multi_indices_[mi];
    // minor of `vectors` with rows J
    Mat minor(degree_, degree_);
    for (int r = 0; r < degree_; ++r)
      for (int c = 0; c < degree_; ++c) minor(r, c) = vectors(J[r], c);
    double det = degree_ == 0 ? 1.0 : minor.determinant();
    if (det != 0.0) total += node_value(coeff_[mi]) * det;
  }
  return total;
}

double PushedForm::integral_against(const std::function<double(const Vec&)>& coeff) const {
  // INT_A f(a) * omega over the grid window, omega of top degree. The cached
  // form is multilinear per grid cell, so cell-aligned tensor GL8 is exact in
  // omega; adaptivity would only fight the interpolation kinks.
  if (dim_ == 0) return coeff_.empty() ? 0.0 : coeff_[0][0] * coeff(Vec::Zero(0));
  if (degree_ != dim_) throw err_degree_mismatch("integral_against needs a top-degree form");
  Mat id = Mat::Identity(dim_, dim_);
  std::vector<int> cells(dim_);
  std::size_t ncells = 1;
  for (int i = 0; i < dim_; ++i) {
    cells[i] = shape_[i] - 1;
    ncells *= cells[i];
  }
  return par::map_sum(ncells, [&](std::size_t ci) {
    std::size_t rem = ci;
    Box cell;
    for (int i = 0; i < dim_; ++i) {
      int idx = rem % cells[i];
      rem /= cells[i];
      double step = (bounds_.hi[i] - bounds_.lo[i]) / cells[i];
      cell.lo.push_back(bounds_.lo[i] + idx * step);
      cell.hi.push_back(bounds_.lo[i] + (idx + 1) * step);
    }
    return integrate_box_gl8(cell, [&](const std::vector<double>& x) {
      Vec a(dim_);
      for (int i = 0; i < dim_; ++i) a(i) = x[i];
      return coeff(a) * (*this)(a, id);
    });
  });
}

PushedForm pushforward(const KuranishiCategory& k, const CutoffFamily& cutoffs, const VirtualClass& vc,
                       const TargetA& a, const Form& theta, const PushforwardConfig& cfg,
                       const PartitionOfUnity& part, const IntegrateOptions&) {
  const int da = a.dim;
  const int kdim = virtual_dimension(k);
  const int out_degree = theta.degree() + da - kdim;
  if (out_degree < 0 || out_degree > da)
    throw err_degree_mismatch("pushforward output degree out of range");
  if (theta.degree() > 1) throw err_dim_unsupported("pushforward implemented for theta of degree <= 1");

  // A = point: reduce to the integral.
  PushedForm out;
  out.degree_ = out_degree;
  out.dim_ = da;
  out.bounds_ = a.bounds;
  if (da == 0) {
    out.shape_ = {};
    out.multi_indices_ = {{}};
    out.coeff_ = {{integrate_vclass(k, cutoffs, vc, theta, part)}};
    return out;
  }
  ThomData td = make_thom(cfg, da);

  // Multi-indices of degree out_degree over {0..da-1}.
  std::vector<std::vector<int>> mis;
  std::vector<int> comb(out_degree);
  for (int i = 0; i < out_degree; ++i) comb[i] = i;
  if (out_degree == 0)
    mis.push_back({});
  else
    for (;;) {
      mis.push_back(comb);
      int i = out_degree - 1;
      while (i >= 0 && comb[i] == da - out_degree + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int j = i + 1; j < out_degree; ++j) comb[j] = comb[j - 1] + 1;
    }
  out.multi_indices_ = mis;
  out.shape_.assign(da, cfg.grid_per_axis);
  std::size_t nodes = 1;
  for (int i = 0; i < da; ++i) nodes *= out.shape_[i];
  out.coeff_.assign(mis.size(), std::vector<double>(nodes, 0.0));

  // Per piece/branch contributions, accumulated per node in parallel.
  struct Contribution {
    const vclass::ZeroSet* zs;
    double mu;
    int chart_id;
    int piece;
  };
  std::vector<Contribution> contribs;
  for (std::size_t piece = 0; piece < part.pieces.size(); ++piece) {
    int cid = part.pieces[piece].chart_id;
    const auto& cp = vc.piece_for_chart(cid);
    for (std::size_t b = 0; b < cp.space.size(); ++b)
      contribs.push_back({&cp.per_branch[b], rat_to_double(cp.space.mu[b]), cid, static_cast<int>(piece)});
  }

  par::for_each(nodes, [&](std::size_t node) {
    // node -> grid point of A
    Vec av(da);
    std::size_t rem = node;
    for (int i = 0; i < da; ++i) {
      int idx = rem % out.shape_[i];
      rem /= out.shape_[i];
      av(i) = a.bounds.lo[i] + (a.bounds.hi[i] - a.bounds.lo[i]) * idx / (out.shape_[i] - 1);
    }
    for (std::size_t mi = 0; mi < mis.size(); ++mi) {
      const auto& J = mis[mi];
      double value = 0.0;
      for (const auto& con : contribs) {
        const auto& pi_fn = a.pi.at(con.chart_id);
        auto weight = [&](const StratumPoint& x) {
          return part.r(k, cutoffs, con.piece, con.chart_id, x);
        };
        // assemble the lifted frame value at a zero point / curve sample
        auto frame_value = [&](const StratumPoint& x, const Tangent* tangent) -> double {
          Vec diff = av - pi_fn(x);
          // Fiber coordinate integral over phi (the null directions). The
          // profile is polynomial on its axis-aligned support, so when every
          // null column is a coordinate direction the integral truncates to
          // the exact support box and GL8 is exact; otherwise fall back to a
          // generous adaptive box.
          Vec base_w = td.Lp * diff;
          Box phi_box;
          bool axis_aligned = true;
          std::vector<int> touched(2 * da, -1);
          for (int l = 0; l < da && axis_aligned; ++l) {
            int row = -1;
            for (int rr = 0; rr < 2 * da; ++rr) {
              if (std::abs(td.N(rr, l)) < 1e-12) continue;
              if (row != -1) {
                axis_aligned = false;
                break;
              }
              row = rr;
            }
            if (row == -1) axis_aligned = false;
            if (axis_aligned) touched[row] = l;
          }
          if (axis_aligned) {
            // untouched rows must already sit inside the profile support
            for (int rr = 0; rr < 2 * da; ++rr)
              if (touched[rr] == -1 && std::abs(base_w(rr)) >= td.radius) return 0.0;
            phi_box.lo.assign(da, 0.0);
            phi_box.hi.assign(da, 0.0);
            for (int rr = 0; rr < 2 * da; ++rr) {
              if (touched[rr] == -1) continue;
              int l = touched[rr];
              double coef = td.N(rr, l);
              double lo = (-td.radius - base_w(rr)) / coef;
              double hi = (td.radius - base_w(rr)) / coef;
              phi_box.lo[l] = std::min(lo, hi);
              phi_box.hi[l] = std::max(lo, hi);
            }
          } else {
            for (int i = 0; i < da; ++i) {
              phi_box.lo.push_back(-2.5 * td.radius);
              phi_box.hi.push_back(2.5 * td.radius);
            }
          }
          auto integrand = [&](const std::vector<double>& phi) -> double {
            Vec w = td.Lp * diff;
            for (int i = 0; i < da; ++i) w += phi[i] * td.N.col(i);
            double rho = td.profile(w);
            if (rho == 0.0) return 0.0;
            // Vector list: E(v_j) for j in J, then T (if curve), then Phi_l.
            const int total_vecs = out_degree + (tangent ? 1 : 0) + da;
            if (total_vecs != 2 * da + (theta.degree() == 1 ? 1 : 0))
              throw err_degree_mismatch("internal frame bookkeeping");
            Mat wparts(2 * da, total_vecs);
            int colv = 0;
            for (int j : J) {
              Vec e = Vec::Zero(da);
              e(j) = 1.0;
              wparts.col(colv++) = td.Lp * e;
            }
            double theta_val = 1.0;
            int theta_col = -1;
            if (tangent) {
              // T: pc part tau, w part -Lp * Dpi tau. Dpi tau via finite
              // differences of pi along the segment direction.
              double h = 1e-6;
              StratumPoint xp = charts::displace(x, *tangent, h);
              StratumPoint xm = charts::displace(x, *tangent, -h);
              Vec dpi = (pi_fn(xp) - pi_fn(xm)) / (2 * h);
              wparts.col(colv) = -td.Lp * dpi;
              theta_col = colv;
              ++colv;
            }
            for (int l = 0; l < da; ++l) wparts.col(colv++) = td.N.col(l);
            if (theta.degree() == 0) {
              theta_val = theta(x, {});
              // e eats every w part: need square 2da x 2da
              return td.norm * rho * theta_val * wparts.determinant();
            }
            // theta degree 1: theta eats the pc part of T (position theta_col)
            theta_val = theta(x, {*tangent});
            Mat rest(2 * da, 2 * da);
            int cc = 0;
            for (int cidx = 0; cidx < total_vecs; ++cidx) {
              if (cidx == theta_col) continue;
              rest.col(cc++) = wparts.col(cidx);
            }
            double sign = (theta_col % 2 == 0) ? 1.0 : -1.0;
            return sign * td.norm * rho * theta_val * rest.determinant();
          };
          if (axis_aligned) return integrate_box_gl8(phi_box, integrand);
          return integrate_adaptive(phi_box, integrand, QuadOptions{1e-9, 10, 100000});
        };
        const auto& zs = *con.zs;
        if (zs.kdim == 0) {
          for (const auto& zp : zs.points)
            value += con.mu * zp.sign * weight(zp.x) * frame_value(zp.x, nullptr);
        } else {
          for (const auto& curve : zs.curves) {
            const auto& pts = curve.samples;
            const std::size_t np = pts.size();
            if (np < 2) continue;
            const std::size_t segs = curve.closed ? np : np - 1;
            for (std::size_t s = 0; s < segs; ++s) {
              StratumPoint mid = midpoint(pts[s], pts[(s + 1) % np]);
              Tangent seg = segment_vector(pts[s], pts[(s + 1) % np]);
              value += con.mu * weight(mid) * frame_value(mid, &seg);
            }
          }
        }
      }
      out.coeff_[mi][node] = value;
    }
  });
  return out;
}

double integrate_on_a(const TargetA& a, const PushedForm& omega,
                      const std::function<double(const Vec&)>& theta_coeff, int theta_degree) {
  // INT_A theta wedge omega where theta = theta_coeff * da^{J0} for the
  // complementary index set; implemented for the two arrangements the
  // identities need: theta of degree 0 against top omega, and theta of top
  // degree against omega of degree 0.
  const int da = a.dim;
  if (da == 0) return omega({}, Mat()) * theta_coeff(Vec::Zero(0));
  if (theta_degree == 0) return omega.integral_against(theta_coeff);
  if (theta_degree == da && omega.degree() == 0) {
    Box dom = a.bounds;
    return integrate_adaptive(dom, [&](const std::vector<double>& x) {
      Vec av(da);
      for (int i = 0; i < da; ++i) av(i) = x[i];
      return theta_coeff(av) * omega(av, Mat::Zero(da, 0));
    });
  }
  throw err_degree_mismatch("integrate_on_a supports (0, top) and (top, 0) degree pairings");
}

// ---- Chern-Weil ------------------------------------------------------------------

Form chern_c1(const Form& alpha) {
  if (alpha.degree() != 1) throw err_not_unitary("connection form must be a real 1-form");
  Form curv = charts::d(alpha);
  Form c1 = charts::scale(curv, 1.0 / (2.0 * M_PI));
  c1.flags().generated_by_functions = true;
  c1.flags().in_omega = true;
  return c1;
}

// ---- tropical completion -----------------------------------------------------------

CompletedClass complete_vclass(const KuranishiCategory& k, const CutoffFamily& cutoffs,
                               const VirtualClass& vc, const PartitionOfUnity& part,
                               const std::vector<Rat>& p) {
  if (k.charts.size() != 1)
    throw err_schema("tropical completion of the class handles single-chart presentations");
  const KChart& c = k.charts[0];
  tropical::Polytope pol = c.polytope ? *c.polytope : tropical::Polytope::full_space(c.m);

  CompletedClass out;
  out.tropical_point = p;
  // Completed chart: same regions, tangent-cone polytope, dbar re-keyed to
  // the completed vertex indices.
  KChart cc = c;
  cc.polytope = pol.tropical_completion(p);
  // vertex index translation old -> new by exact coordinates
  auto old_vs = pol.vertices();
  auto new_vs = cc.polytope->vertices();
  std::map<int, int> old_to_new;
  for (std::size_t i = 0; i < old_vs.size(); ++i)
    for (std::size_t j = 0; j < new_vs.size(); ++j)
      if (old_vs[i] == new_vs[j]) old_to_new[static_cast<int>(i)] = static_cast<int>(j);
  std::map<int, std::vector<Expr>> new_dbar;
  for (const auto& [vidx, exprs] : c.dbar_exprs) {
    if (vidx == -1)
      new_dbar[-1] = exprs;
    else if (old_to_new.count(vidx))
      new_dbar[old_to_new.at(vidx)] = exprs;
  }
  cc.dbar_exprs = std::move(new_dbar);
  out.category = kcat::build_kuranishi({cc}, {}, k.v_inclusions, k.Z);
  out.cutoffs = cutoffs;  // region-based data completes to itself
  out.partition = part;

  // Transport the class: keep pieces whose vertex completes to a vertex of
  // the cone, re-keyed.
  out.vc = vc;
  for (auto& piece : out.vc.pieces) {
    for (auto& zs : piece.per_branch) {
      std::vector<vclass::ZeroPoint> pts;
      for (auto& zp : zs.points) {
        auto it = old_to_new.find(zp.x.vertex);
        if (it == old_to_new.end()) continue;
        vclass::ZeroPoint moved = zp;
        moved.x.vertex = it->second;
        pts.push_back(std::move(moved));
      }
      zs.points = std::move(pts);
      std::vector<vclass::ZeroCurve> cvs;
      for (auto& curve : zs.curves) {
        if (curve.samples.empty()) continue;
        auto it = old_to_new.find(curve.samples[0].vertex);
        if (it == old_to_new.end()) continue;
        vclass::ZeroCurve moved = curve;
        for (auto& s : moved.samples) s.vertex = it->second;
        cvs.push_back(std::move(moved));
      }
      zs.curves = std::move(cvs);
    }
  }
  return out;
}

DecompositionReport check_decomposition(const KuranishiCategory& k, const CutoffFamily& cutoffs,
                                        const VirtualClass& vc, const PartitionOfUnity& part,
                                        const Form& theta, const IntegrateOptions& opt) {
  if (!theta.flags().generated_by_functions)
    throw err_rejected("tropical decomposition requires a form generated by functions");
  DecompositionReport rep;
  rep.total = integrate_vclass(k, cutoffs, vc, theta, part, opt);
  if (k.charts.size() != 1) throw err_schema("decomposition handles single-chart presentations");
  const KChart& c = k.charts[0];
  tropical::Polytope pol = c.polytope ? *c.polytope : tropical::Polytope::full_space(c.m);
  for (const auto& v : pol.vertices()) {
    CompletedClass done = complete_vclass(k, cutoffs, vc, part, v);
    Form completed_theta = charts::complete_form(theta);
    double val =
        integrate_vclass(done.category, done.cutoffs, done.vc, completed_theta, done.partition, opt);
    rep.contributions.push_back({v, val});
  }
  return rep;
}

}  // namespace vfc::vint
