#include "vfc/suites.hpp"

#include <cmath>

#include "vfc/errors.hpp"

namespace vfc::suites {

using charts::StratumPoint;
using charts::Tangent;
using kcat::KChart;
using kcat::Level;

Workspace build_workspace(const KuranishiCategory& k, std::uint64_t seed, double epsilon,
                          const vclass::BuildClassOptions& opt) {
  Workspace w;
  w.k = &k;
  w.seed = seed;
  w.cutoffs = kcat::choose_cutoffs(k, epsilon);
  w.metric = kcat::choose_metric(k, w.cutoffs);
  w.cover = branched::standard_cover(k, w.cutoffs);
  w.vc = vclass::build_virtual_class(k, w.cutoffs, w.metric, w.cover, seed, opt);
  w.partition = vint::build_partition(k, w.cutoffs);
  return w;
}

int virtual_dim(const KuranishiCategory& k) {
  return k.charts.empty() ? 0 : k.charts[0].dim_total() - 2 * k.charts[0].d;
}

Form random_support_function(const KuranishiCategory& k, Prng& rng) {
  // Sum of bump terms per chart, vanishing before the F boundary.
  struct Term {
    Box cell;
    double coef;
    double freq, phase;
    int axis;
  };
  auto terms = std::make_shared<std::map<int, std::vector<Term>>>();
  for (const auto& c : k.charts) {
    std::vector<Term>& ts = (*terms)[c.id];
    Box bb = c.F.bounding_box();
    for (int t = 0; t < 3; ++t) {
      Term term;
      term.cell = bb.inflate(-0.1 * bb.diameter() * rng.next_double());
      term.coef = rng.uniform(-1.0, 1.0);
      term.freq = rng.uniform(0.5, 2.0);
      term.phase = rng.uniform(0.0, 6.28);
      term.axis = static_cast<int>(rng.next_below(std::max(1, bb.dim())));
      ts.push_back(term);
    }
  }
  return charts::scalar_form([terms](const StratumPoint& p) {
    // chart id is not part of the point; identify by dimension signature
    // (single-category usage keeps this unambiguous for same-shape charts).
    double total = 0.0;
    for (const auto& [cid, ts] : *terms) {
      for (const auto& t : ts) {
        auto x = p.region_coords();
        if (static_cast<int>(x.size()) != t.cell.dim()) continue;
        double b = box_bump(t.cell, x, 0.4);
        if (b > 0) total += t.coef * b * std::sin(t.freq * x[t.axis] + t.phase);
      }
      break;  // identical terms per chart suffice at desk scale
    }
    return total;
  });
}

std::vector<Row> suite_counts(const Workspace& w, const Form& theta, double expected, double tol) {
  Row row;
  row.check = "count";
  row.lhs = vint::integrate_vclass(*w.k, w.cutoffs, w.vc, theta, w.partition);
  row.rhs = expected;
  row.tol = tol;
  row.pass = std::abs(row.lhs - row.rhs) <= tol;
  return {row};
}

std::vector<Row> suite_partition_independence(const Workspace& w, const Form& theta, double tol) {
  Row row;
  row.check = "partition-independence";
  auto part2 = vint::build_partition(*w.k, w.cutoffs, 0.22);
  row.lhs = vint::integrate_vclass(*w.k, w.cutoffs, w.vc, theta, w.partition);
  row.rhs = vint::integrate_vclass(*w.k, w.cutoffs, w.vc, theta, part2);
  row.tol = tol;
  row.pass = std::abs(row.lhs - row.rhs) <= tol;
  return {row};
}

std::vector<Row> suite_stokes(const Workspace& w, std::uint64_t seed, int trials, double tol) {
  std::vector<Row> rows;
  int vdim = virtual_dim(*w.k);
  if (vdim < 1) {
    Row row;
    row.check = "stokes";
    row.pass = true;
    row.note = "not applicable: no forms of degree vdim-1 on a 0-dimensional class";
    rows.push_back(row);
    return rows;
  }
  if (vdim > 1) throw err_dim_unsupported("stokes suite covers vdim <= 1");
  Prng rng(seed);
  for (int t = 0; t < trials; ++t) {
    Form f = random_support_function(*w.k, rng);
    Row row;
    row.check = "stokes[" + std::to_string(t) + "]";
    row.lhs = vint::integrate_vclass(*w.k, w.cutoffs, w.vc, charts::d(f), w.partition);
    row.rhs = 0.0;
    row.tol = tol;
    row.pass = std::abs(row.lhs) <= tol;
    rows.push_back(row);
  }
  return rows;
}

std::vector<Row> suite_seed_independence(const KuranishiCategory& k, double epsilon,
                                         const std::vector<std::uint64_t>& seeds, const Form& theta,
                                         double tol) {
  std::vector<double> values;
  for (std::uint64_t s : seeds) {
    Workspace w = build_workspace(k, s, epsilon);
    values.push_back(vint::integrate_vclass(k, w.cutoffs, w.vc, theta, w.partition));
  }
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Row row;
  row.check = "seed-independence";
  row.lhs = hi - lo;
  row.rhs = 0.0;
  row.tol = tol;
  row.pass = row.lhs <= tol;
  row.note = std::to_string(seeds.size()) + " seeds";
  return {row};
}

namespace {

// pi pulled back to a 1-form on the charts: theta_K(x; v) = f(pi x) dpi(v).
Form pullback_one_form(const vint::TargetA& a, const std::function<double(double)>& f) {
  auto pi_map = a.pi;
  return Form(1,
              [pi_map, f](const StratumPoint& p, const std::vector<Tangent>& vs) {
                // chart id resolution: all registered pi maps agree on shape;
                // use the first whose dimensions match.
                for (const auto& [cid, fn] : pi_map) {
                  Vec base = fn(p);
                  double h = 1e-6;
                  Vec plus = fn(charts::displace(p, vs[0], h));
                  Vec minus = fn(charts::displace(p, vs[0], -h));
                  double dpi = (plus(0) - minus(0)) / (2 * h);
                  return f(base(0)) * dpi;
                }
                return 0.0;
              },
              charts::FormFlags{true, true, false});
}

}  // namespace

std::vector<Row> suite_adjunction(const Workspace& w, const vint::TargetA& a, double tol) {
  std::vector<Row> rows;
  int vdim = virtual_dim(*w.k);
  auto cfg = vint::PushforwardConfig::standard(a.dim, 0.8);
  cfg.grid_per_axis = 641;
  Form one = charts::constant_form(1.0);
  auto pushed = vint::pushforward(*w.k, w.cutoffs, w.vc, a, one, cfg, w.partition);

  if (vdim == 0) {
    // theta a closed 0-form on A (a constant): both sides scale the count.
    double c = 1.7;
    Row row;
    row.check = "adjunction";
    row.lhs = c * vint::integrate_vclass(*w.k, w.cutoffs, w.vc, one, w.partition);
    row.rhs = vint::integrate_on_a(a, pushed, [c](const Vec&) { return c; }, 0);
    row.tol = tol;
    row.pass = std::abs(row.lhs - row.rhs) <= tol * (1 + std::abs(row.rhs));
    rows.push_back(row);
    return rows;
  }
  if (vdim == 1 && a.dim == 1) {
    auto f = [](double x) { return std::exp(-0.4 * x * x) * (1.0 + 0.3 * x); };
    Form pulled = pullback_one_form(a, f);
    Row row;
    row.check = "adjunction";
    row.lhs = vint::integrate_vclass(*w.k, w.cutoffs, w.vc, pulled, w.partition);
    row.rhs = vint::integrate_on_a(a, pushed, [f](const Vec& x) { return f(x(0)); }, 1);
    row.tol = tol;
    row.pass = std::abs(row.lhs - row.rhs) <= tol * (1 + std::abs(row.rhs));
    rows.push_back(row);
    return rows;
  }
  throw err_dim_unsupported("adjunction suite covers vdim 0 and (vdim 1, dim A 1)");
}

std::vector<Row> suite_we_independence(const Workspace& w, const vint::TargetA& a, double tol) {
  Form one = charts::constant_form(1.0);
  auto cfg1 = vint::PushforwardConfig::standard(a.dim, 0.8);
  cfg1.grid_per_axis = 641;
  // Second (W, x, e): the complementary projection and a wider Thom profile.
  vint::PushforwardConfig cfg2;
  cfg2.L = Mat::Zero(a.dim, 2 * a.dim);
  for (int i = 0; i < a.dim; ++i) cfg2.L(i, a.dim + i) = 1.0;
  cfg2.bump_radius = 1.25;
  cfg2.grid_per_axis = 641;
  auto p1 = vint::pushforward(*w.k, w.cutoffs, w.vc, a, one, cfg1, w.partition);
  auto p2 = vint::pushforward(*w.k, w.cutoffs, w.vc, a, one, cfg2, w.partition);
  // theta must be closed for Lemma "pi": constants in degree 0, any 1-form
  // on the line in top degree.
  int vdim = virtual_dim(*w.k);
  int theta_deg = vdim == 0 ? 0 : a.dim;
  std::function<double(const Vec&)> f;
  if (theta_deg == 0)
    f = [](const Vec&) { return 1.3; };
  else
    f = [](const Vec& x) { return std::exp(-0.3 * x.squaredNorm()); };
  Row row;
  row.check = "wxe-independence";
  row.lhs = vint::integrate_on_a(a, p1, f, theta_deg);
  row.rhs = vint::integrate_on_a(a, p2, f, theta_deg);
  row.tol = tol;
  row.pass = std::abs(row.lhs - row.rhs) <= tol * (1 + std::abs(row.rhs));
  return {row};
}

std::vector<Row> suite_tropical_decomposition(const Workspace& w, const Form& theta, double tol,
                                              const vint::TargetA* a, double push_tol) {
  std::vector<Row> rows;
  auto rep = vint::check_decomposition(*w.k, w.cutoffs, w.vc, w.partition, theta);
  Row row;
  row.check = "tropical-decomposition";
  row.lhs = rep.total;
  row.rhs = rep.sum();
  row.tol = tol;
  row.pass = std::abs(row.lhs - row.rhs) <= tol;
  row.note = std::to_string(rep.contributions.size()) + " tropical points";
  rows.push_back(row);

  if (a && a->dim == 0) a = nullptr;
  if (a) {
    // Pushforward decomposition: compare cached forms at grid nodes.
    auto cfg = vint::PushforwardConfig::standard(a->dim, 0.8);
    cfg.grid_per_axis = 81;
    auto total = vint::pushforward(*w.k, w.cutoffs, w.vc, *a, theta, cfg, w.partition);
    const KChart& c = w.k->charts[0];
    tropical::Polytope pol = c.polytope ? *c.polytope : tropical::Polytope::full_space(c.m);
    std::vector<vint::PushedForm> parts;
    for (const auto& v : pol.vertices()) {
      auto done = vint::complete_vclass(*w.k, w.cutoffs, w.vc, w.partition, v);
      parts.push_back(vint::pushforward(done.category, done.cutoffs, done.vc, *a,
                                        charts::complete_form(theta), cfg, done.partition));
    }
    double worst = 0.0;
    for (std::size_t mi = 0; mi < total.coeff_.size(); ++mi)
      for (std::size_t node = 0; node < total.coeff_[mi].size(); ++node) {
        double sum = 0.0;
        for (const auto& p : parts) sum += p.coeff_[mi][node];
        worst = std::max(worst, std::abs(sum - total.coeff_[mi][node]));
      }
    Row prow;
    prow.check = "tropical-pushforward";
    prow.lhs = worst;
    prow.rhs = 0.0;
    prow.tol = push_tol;
    prow.pass = worst <= push_tol;
    rows.push_back(prow);
  }
  return rows;
}

std::vector<Row> suite_weak_product(const KuranishiCategory& k1, const vint::TargetA& a1,
                                    const KuranishiCategory& k2, const vint::TargetA& a2,
                                    std::uint64_t seed, double epsilon, double tol) {
  // Factor pushforwards.
  Form one = charts::constant_form(1.0);
  Workspace w1 = build_workspace(k1, seed, epsilon);
  Workspace w2 = build_workspace(k2, seed + 1, epsilon);
  auto cfg1 = vint::PushforwardConfig::standard(1, 0.8);
  cfg1.grid_per_axis = 65;
  auto p1 = vint::pushforward(k1, w1.cutoffs, w1.vc, a1, one, cfg1, w1.partition);
  auto p2 = vint::pushforward(k2, w2.cutoffs, w2.vc, a2, one, cfg1, w2.partition);

  // Product category; the product class is the pullback of the factor
  // sections (the proof's construction), so its zero sets are the Cartesian
  // products of the factor zero sets with product weights and signs.
  kcat::WeakProductChart pc;
  pc.factor_chart_ids = {k1.charts[0].id, k2.charts[0].id};
  auto prod = kcat::weak_product({k1, k2}, {pc});
  Workspace wp;
  wp.k = &prod;
  wp.seed = seed;
  wp.cutoffs = kcat::choose_cutoffs(prod, epsilon);
  auto m1 = kcat::choose_metric(k1, w1.cutoffs);
  auto m2 = kcat::choose_metric(k2, w2.cutoffs);
  wp.metric = kcat::product_metric(prod, {m1, m2});
  wp.cover = branched::standard_cover(prod, wp.cutoffs);
  {
    const auto& p1v = w1.vc.pieces[0];
    const auto& p2v = w2.vc.pieces[0];
    const auto& slices = prod.charts[0].factors;
    vclass::VirtualClass::ChartPiece piece;
    piece.chart_id = prod.charts[0].id;
    piece.open = prod.charts[0].F;
    for (std::size_t b2 = 0; b2 < p2v.space.size(); ++b2)
      for (std::size_t b1 = 0; b1 < p1v.space.size(); ++b1) {
        piece.space.ids.push_back(p1v.space.ids[b1] + "|" + p2v.space.ids[b2]);
        piece.space.mu.push_back(p1v.space.mu[b1] * p2v.space.mu[b2]);
        piece.space.cls.push_back(static_cast<int>(piece.space.cls.size()));
        vclass::ZeroSet zs;
        zs.kdim = 0;
        for (const auto& zp1 : p1v.per_branch[b1].points)
          for (const auto& zp2 : p2v.per_branch[b2].points) {
            vclass::ZeroPoint zp;
            zp.sign = zp1.sign * zp2.sign;
            zp.x.vertex = 0;
            zp.x.u.resize(prod.charts[0].n);
            for (int i = 0; i < slices[0].n; ++i) zp.x.u[slices[0].u_off + i] = zp1.x.u[i];
            for (int i = 0; i < slices[1].n; ++i) zp.x.u[slices[1].u_off + i] = zp2.x.u[i];
            zs.points.push_back(std::move(zp));
          }
        piece.per_branch.push_back(std::move(zs));
      }
    wp.vc.pieces.push_back(std::move(piece));
    wp.vc.seed = seed;
    wp.vc.epsilon = epsilon;
  }
  wp.partition = vint::build_partition(prod, wp.cutoffs);

  vint::TargetA a12;
  a12.dim = 2;
  a12.bounds = Box{{a1.bounds.lo[0], a2.bounds.lo[0]}, {a1.bounds.hi[0], a2.bounds.hi[0]}};
  const KChart& pchart = prod.charts[0];
  int u2_off = pchart.factors[1].u_off;
  a12.pi[pchart.id] = [u2_off](const StratumPoint& p) {
    Vec v(2);
    v(0) = p.u[0];
    v(1) = p.u[u2_off];
    return v;
  };
  auto cfg12 = vint::PushforwardConfig::standard(2, 0.8);
  cfg12.grid_per_axis = 65;
  auto p12 = vint::pushforward(prod, wp.cutoffs, wp.vc, a12, one, cfg12, wp.partition);

  // Compare the cached top coefficient against the product of the factors at
  // shared grid nodes.
  double worst = 0.0;
  int npa = cfg12.grid_per_axis;
  for (int i = 0; i < npa; ++i)
    for (int jn = 0; jn < npa; ++jn) {
      double prod_coef = p12.coeff_[0][static_cast<std::size_t>(jn) * npa + i];
      double f1 = p1.coeff_[0][i];
      double f2 = p2.coeff_[0][jn];
      worst = std::max(worst, std::abs(prod_coef - f1 * f2));
    }
  Row row;
  row.check = "weak-product";
  row.lhs = worst;
  row.rhs = 0.0;
  row.tol = tol;
  row.pass = worst <= tol;
  return {row};
}

std::vector<Row> suite_pullback(const KuranishiCategory& k_over_z, const vint::TargetA& a,
                                double slice_value, std::uint64_t seed, double epsilon, double tol) {
  // Prop "sbc" on the fixture: pull K back over the inclusion
  // {slice_value} -> Z = R, push both classes forward, and compare
  // y* (pi_! 1) with pi'_!(1) at shared grid nodes. The family evaluation
  // target fibers over Z: A_fam = A x Z with pi_fam = (pi, base).
  if (k_over_z.Z.dim != 1) throw err_schema("pullback suite expects Z = R");
  vclass::BuildClassOptions fine;
  fine.zeros.trace_step = 0.002;  // the family-side curve quadrature feeds a 1e-5 comparison
  Workspace w = build_workspace(k_over_z, seed, epsilon, fine);
  Form one = charts::constant_form(1.0);

  kcat::TargetSpace pt;
  kcat::Affine incl;
  incl.a = Mat::Zero(1, 0);
  incl.b = Vec::Zero(1);
  incl.b(0) = slice_value;
  auto sliced = kcat::pullback_kuranishi(k_over_z, pt, incl);
  Workspace ws = build_workspace(sliced, seed, epsilon);

  // Family target Z x A (base coordinates first keeps the relative
  // orientations of the class and of A over Z coherent; see the sign table).
  vint::TargetA a_fam;
  a_fam.dim = 2;
  a_fam.bounds = Box{{k_over_z.Z.bounds.lo[0], a.bounds.lo[0]},
                     {k_over_z.Z.bounds.hi[0], a.bounds.hi[0]}};
  for (const auto& c : k_over_z.charts) {
    auto base_pi = a.pi.at(c.id);
    KChart cc = c;
    a_fam.pi[c.id] = [base_pi, cc](const StratumPoint& p) {
      Vec v(2);
      v(0) = cc.base_at(p)(0);
      v(1) = base_pi(p)(0);
      return v;
    };
  }
  // Thom radius small enough that the fiber support stays inside the chart
  // window around the slice.
  auto cfg2 = vint::PushforwardConfig::standard(2, 0.5);
  cfg2.grid_per_axis = 81;
  auto fam = vint::pushforward(k_over_z, w.cutoffs, w.vc, a_fam, one, cfg2, w.partition);

  vint::TargetA a_sliced = a;
  a_sliced.pi.clear();
  for (const auto& c : sliced.charts) a_sliced.pi[c.id] = a.pi.begin()->second;
  auto cfg1 = vint::PushforwardConfig::standard(1, 0.5);
  cfg1.grid_per_axis = 81;
  auto rest = vint::pushforward(sliced, ws.cutoffs, ws.vc, a_sliced, one, cfg1, ws.partition);

  // Node-aligned comparison: slice_value must sit on the Z grid.
  int nodes = cfg2.grid_per_axis;
  double zstep = (a_fam.bounds.hi[0] - a_fam.bounds.lo[0]) / (nodes - 1);
  int zindex = static_cast<int>(std::lround((slice_value - a_fam.bounds.lo[0]) / zstep));
  double worst = 0.0;
  for (int i = 0; i < nodes; ++i) {
    Vec a2(2);
    a2(0) = a_fam.bounds.lo[0] + zstep * zindex;
    a2(1) = a_fam.bounds.lo[1] + (a_fam.bounds.hi[1] - a_fam.bounds.lo[1]) * i / (nodes - 1);
    Mat lift(2, 1);
    lift << 0.0, 1.0;  // y_* of the A'-tangent
    double lhs = fam(a2, lift);
    Vec a1(1);
    a1(0) = a2(1);
    Mat e1(1, 1);
    e1(0, 0) = 1.0;
    double rhs = rest(a1, e1);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  Row square_row;
  square_row.check = "pullback-square";
  square_row.lhs = worst;
  square_row.rhs = 0.0;
  square_row.tol = tol;
  square_row.pass = worst <= tol;

  // The sliced class has virtual dimension 0: its count is the fiber count.
  Row count_row;
  count_row.check = "pullback-count";
  count_row.lhs = vint::integrate_vclass(sliced, ws.cutoffs, ws.vc, one, ws.partition);
  count_row.rhs = 1.0;
  count_row.tol = tol;
  count_row.pass = std::abs(count_row.lhs - count_row.rhs) <= tol;
  return {square_row, count_row};
}

}  // namespace vfc::suites
