#include "vfc/charts.hpp"

#include <algorithm>
#include <cmath>

#include "vfc/errors.hpp"
#include "vfc/linalg.hpp"
#include "vfc/parallel.hpp"

namespace vfc::charts {

std::vector<double> StratumPoint::region_coords() const {
  std::vector<double> x;
  x.reserve(u.size() + z.size());
  for (double v : u) x.push_back(v);
  for (const Cx& w : z) x.push_back(std::log(std::abs(w)));
  return x;
}

ExplodedChart::ExplodedChart(int n, int m, tropical::Polytope polytope, Region region, int orientation)
    : n_(n), m_(m), polytope_(std::move(polytope)), region_(std::move(region)), orientation_(orientation) {
  if (n < 0 || m < 0) throw err_bad_dim("negative chart dimension");
  if (polytope_->ambient_dim() != m) throw err_bad_dim("polytope dimension != tropical dimension");
  if (!region_.empty() && region_.dim() != n + m)
    throw err_bad_dim("region lives over (u, log|z|) and must have dimension n+m");
  auto verts = polytope_->vertices();
  for (int i = 0; i < static_cast<int>(verts.size()); ++i) {
    VertexStratum s;
    s.index = i;
    s.coords_exact = verts[i];
    for (const Rat& q : verts[i]) s.coords.push_back(rat_to_double(q));
    strata_.push_back(std::move(s));
  }
}

bool ExplodedChart::contains(const StratumPoint& p, double pad) const {
  if (p.vertex < 0 || p.vertex >= static_cast<int>(strata_.size())) return false;
  return region_.contains(p.region_coords(), pad);
}

StratumPoint ExplodedChart::make_point(int vertex, std::vector<double> u, std::vector<Cx> z) const {
  if (vertex < 0 || vertex >= static_cast<int>(strata_.size()))
    throw err_not_member("vertex index out of range");
  StratumPoint p;
  p.vertex = vertex;
  p.vertex_coords = strata_[vertex].coords;
  p.u = std::move(u);
  p.z = std::move(z);
  return p;
}

ExplodedChart ExplodedChart::tropical_completion(const std::vector<Rat>& p) const {
  // Region keeps the same box bounds per the chart-completion rule.
  return ExplodedChart(n_, m_, polytope_->tropical_completion(p), region_, orientation_);
}

Form constant_form(double c, FormFlags flags) {
  return Form(0, [c](const StratumPoint&, const std::vector<Tangent>&) { return c; }, flags);
}

Form scalar_form(std::function<double(const StratumPoint&)> f, FormFlags flags) {
  return Form(0, [f = std::move(f)](const StratumPoint& p, const std::vector<Tangent>&) { return f(p); },
              flags);
}

double covector_value(CovectorKind kind, int index, const StratumPoint& p, const Tangent& t) {
  const int n = p.n();
  switch (kind) {
    case CovectorKind::du:
      return t[index];
    case CovectorKind::dx:
      return t[n + 2 * index];
    case CovectorKind::dy:
      return t[n + 2 * index + 1];
    case CovectorKind::dlogr: {
      double x = p.z[index].real(), y = p.z[index].imag();
      double r2 = x * x + y * y;
      return (x * t[n + 2 * index] + y * t[n + 2 * index + 1]) / r2;
    }
    case CovectorKind::dphi: {
      double x = p.z[index].real(), y = p.z[index].imag();
      double r2 = x * x + y * y;
      return (-y * t[n + 2 * index] + x * t[n + 2 * index + 1]) / r2;
    }
  }
  return 0.0;
}

Form monomial_form(std::function<double(const StratumPoint&)> coeff,
                   std::vector<std::pair<CovectorKind, int>> basis, FormFlags flags) {
  int k = static_cast<int>(basis.size());
  auto eval = [coeff = std::move(coeff), basis = std::move(basis), k](
                  const StratumPoint& p, const std::vector<Tangent>& vs) -> double {
    double c = coeff(p);
    if (c == 0.0) return 0.0;
    if (k == 0) return c;
    Mat a(k, k);
    for (int r = 0; r < k; ++r)
      for (int col = 0; col < k; ++col) a(r, col) = covector_value(basis[r].first, basis[r].second, p, vs[col]);
    return c * a.determinant();
  };
  return Form(k, std::move(eval), flags);
}

Form add(const Form& a, const Form& b) {
  if (a.degree() != b.degree()) throw err_degree_mismatch("adding forms of different degree");
  FormFlags f{a.flags().in_omega && b.flags().in_omega,
              a.flags().generated_by_functions && b.flags().generated_by_functions,
              a.flags().refined || b.flags().refined};
  return Form(a.degree(),
              [a, b](const StratumPoint& p, const std::vector<Tangent>& vs) { return a(p, vs) + b(p, vs); },
              f);
}

Form scale(const Form& a, double c) {
  return Form(a.degree(),
              [a, c](const StratumPoint& p, const std::vector<Tangent>& vs) { return c * a(p, vs); },
              a.flags());
}

Form scale_by(const Form& a, std::function<double(const StratumPoint&)> f) {
  FormFlags fl = a.flags();
  return Form(a.degree(),
              [a, f = std::move(f)](const StratumPoint& p, const std::vector<Tangent>& vs) {
                return f(p) * a(p, vs);
              },
              fl);
}

namespace {

// Enumerates (p,q)-shuffles; sign included. Small degrees only.
void shuffles(int p, int q, const std::function<void(const std::vector<int>&, const std::vector<int>&, int)>& fn) {
  const int n = p + q;
  std::vector<int> comb(p);
  for (int i = 0; i < p; ++i) comb[i] = i;
  auto emit = [&]() {
    std::vector<int> left = comb, right;
    std::vector<bool> used(n, false);
    for (int i : comb) used[i] = true;
    for (int i = 0; i < n; ++i)
      if (!used[i]) right.push_back(i);
    // sign of the permutation (left, right)
    std::vector<int> perm = left;
    perm.insert(perm.end(), right.begin(), right.end());
    int sign = 1;
    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t j = i + 1; j < perm.size(); ++j)
        if (perm[i] > perm[j]) sign = -sign;
    fn(left, right, sign);
  };
  if (p == 0 || q == 0) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    if (p == 0)
      fn({}, all, 1);
    else
      fn(all, {}, 1);
    return;
  }
  for (;;) {
    emit();
    int i = p - 1;
    while (i >= 0 && comb[i] == n - p + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < p; ++j) comb[j] = comb[j - 1] + 1;
  }
}

}  // namespace

Form wedge(const Form& a, const Form& b) {
  const int p = a.degree(), q = b.degree();
  FormFlags f{a.flags().in_omega && b.flags().in_omega,
              a.flags().generated_by_functions && b.flags().generated_by_functions,
              a.flags().refined || b.flags().refined};
  auto eval = [a, b, p, q](const StratumPoint& pt, const std::vector<Tangent>& vs) -> double {
    if (p + q == 0) return a(pt, {}) * b(pt, {});
    double sum = 0.0;
    shuffles(p, q, [&](const std::vector<int>& left, const std::vector<int>& right, int sign) {
      std::vector<Tangent> va, vb;
      va.reserve(left.size());
      vb.reserve(right.size());
      for (int i : left) va.push_back(vs[i]);
      for (int i : right) vb.push_back(vs[i]);
      sum += sign * a(pt, va) * b(pt, vb);
    });
    return sum;
  };
  return Form(p + q, std::move(eval), f);
}

StratumPoint displace(const StratumPoint& p, const Tangent& t, double h) {
  StratumPoint q = p;
  const int n = p.n();
  for (int i = 0; i < n; ++i) q.u[i] += h * t[i];
  for (int j = 0; j < p.m(); ++j) q.z[j] += Cx(h * t[n + 2 * j], h * t[n + 2 * j + 1]);
  return q;
}

Form d(const Form& a, const DerivOptions& opt) {
  if (a.exact_d()) {
    Form out(a.degree() + 1, *a.exact_d(), a.flags());
    return out;
  }
  const int k = a.degree();
  const double h = opt.step;
  auto eval = [a, k, h](const StratumPoint& p, const std::vector<Tangent>& vs) -> double {
    // d(alpha)(v_0..v_k) for constant-coefficient fields: the bracket terms
    // vanish, leaving the alternating sum of directional derivatives.
    double sum = 0.0;
    for (int i = 0; i <= k; ++i) {
      std::vector<Tangent> rest;
      rest.reserve(k);
      for (int j = 0; j <= k; ++j)
        if (j != i) rest.push_back(vs[j]);
      double scale = 1.0;
      for (double c : vs[i]) scale = std::max(scale, std::abs(c));
      double step = h * scale;
      double plus = a(displace(p, vs[i], step / scale), rest);
      double minus = a(displace(p, vs[i], -step / scale), rest);
      double deriv = (plus - minus) / (2.0 * step / scale);
      sum += (i % 2 == 0 ? 1.0 : -1.0) * deriv;
    }
    return sum;
  };
  FormFlags f = a.flags();
  return Form(k + 1, std::move(eval), f);
}

Tangent ChartMap::push_tangent(const StratumPoint& p, const Tangent& t) const {
  StratumPoint plus = displace(p, t, fd_step);
  StratumPoint minus = displace(p, t, -fd_step);
  StratumPoint fp = apply(plus), fm = apply(minus);
  const int tn = fp.n(), tm = fp.m();
  Tangent out(tn + 2 * tm);
  for (int i = 0; i < tn; ++i) out[i] = (fp.u[i] - fm.u[i]) / (2 * fd_step);
  for (int j = 0; j < tm; ++j) {
    Cx dz = (fp.z[j] - fm.z[j]) / (2 * fd_step);
    out[tn + 2 * j] = dz.real();
    out[tn + 2 * j + 1] = dz.imag();
  }
  return out;
}

Form pullback(const Form& a, const ChartMap& phi) {
  auto eval = [a, phi](const StratumPoint& p, const std::vector<Tangent>& vs) -> double {
    StratumPoint q = phi.apply(p);
    std::vector<Tangent> ws;
    ws.reserve(vs.size());
    for (const auto& t : vs) ws.push_back(phi.push_tangent(p, t));
    return a(q, ws);
  };
  return Form(a.degree(), std::move(eval), a.flags());
}

FormCheckReport validate_form(const ExplodedChart& chart, const Form& form, Prng& rng, int samples,
                              double tol) {
  FormCheckReport rep;
  const int k = form.degree();
  const int dim = chart.real_dim();
  if (chart.strata().empty()) return rep;
  if (k > dim) throw err_degree_overflow("form degree exceeds stratum dimension");
  Box bb = chart.region().empty() ? Box{} : chart.region().bounding_box();
  auto random_point = [&]() {
    int v = static_cast<int>(rng.next_below(chart.strata().size()));
    std::vector<double> u(chart.n());
    std::vector<Cx> z(chart.m());
    for (int i = 0; i < chart.n(); ++i) u[i] = rng.uniform(bb.lo[i], bb.hi[i]);
    for (int j = 0; j < chart.m(); ++j) {
      double s = rng.uniform(bb.lo[chart.n() + j], bb.hi[chart.n() + j]);
      double phi = rng.uniform(0.0, 6.283185307179586);
      z[j] = std::exp(Cx(s, 0.0)) * Cx(std::cos(phi), std::sin(phi));
    }
    return chart.make_point(v, std::move(u), std::move(z));
  };
  auto random_tangent = [&]() {
    Tangent t(dim);
    for (double& c : t) c = rng.uniform(-1.0, 1.0);
    return t;
  };
  for (int s = 0; s < samples; ++s) {
    StratumPoint p = random_point();
    std::vector<Tangent> vs;
    for (int i = 0; i < k; ++i) vs.push_back(random_tangent());
    if (k >= 1) {
      // multilinearity in slot 0
      double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
      Tangent w = random_tangent();
      std::vector<Tangent> combo = vs;
      for (int c = 0; c < dim; ++c) combo[0][c] = a * vs[0][c] + b * w[c];
      std::vector<Tangent> vw = vs;
      vw[0] = w;
      double lhs = form(p, combo);
      double rhs = a * form(p, vs) + b * form(p, vw);
      double err = std::abs(lhs - rhs);
      rep.worst = std::max(rep.worst, err);
      if (err > tol * (1.0 + std::abs(rhs))) rep.multilinear_ok = false;
    }
    if (k >= 2) {
      std::vector<Tangent> sw = vs;
      std::swap(sw[0], sw[1]);
      double err = std::abs(form(p, vs) + form(p, sw));
      rep.worst = std::max(rep.worst, err);
      if (err > tol * (1.0 + std::abs(form(p, vs)))) rep.alternating_ok = false;
    }
    if (form.flags().generated_by_functions && k >= 1 && chart.m() > 0) {
      // R-nil probe: angular direction of each z_j in slot 0.
      for (int j = 0; j < chart.m(); ++j) {
        Tangent ang(dim, 0.0);
        ang[chart.n() + 2 * j] = -p.z[j].imag();
        ang[chart.n() + 2 * j + 1] = p.z[j].real();
        std::vector<Tangent> probe = vs;
        probe[0] = ang;
        double err = std::abs(form(p, probe));
        rep.worst = std::max(rep.worst, err);
        if (err > tol) rep.rnil_ok = false;
      }
    }
  }
  return rep;
}

double integrate_chart(const ExplodedChart& chart, const Form& form, const QuadOptions& opt) {
  const int n = chart.n(), m = chart.m();
  if (form.degree() != chart.real_dim())
    throw err_degree_mismatch("integrand degree must equal n + 2m");
  if (m > 0 && !(form.flags().in_omega || form.flags().refined || form.flags().generated_by_functions))
    throw err_rejected("form on an m>0 chart must lie in an integrable class (Omega, refined, or "
                       "generated-by-functions)");
  const auto& strata = chart.strata();
  if (strata.empty()) return 0.0;  // no 0-dimensional tropical strata
  constexpr double kTwoPi = 6.283185307179586476925287;

  struct Task {
    int vertex;
    Box domain;  // (u, s, phi) box
  };
  std::vector<Task> tasks;
  for (const auto& st : strata)
    for (const auto& b : chart.region().boxes) {
      Box dom;
      for (int i = 0; i < n; ++i) {
        dom.lo.push_back(b.lo[i]);
        dom.hi.push_back(b.hi[i]);
      }
      for (int j = 0; j < m; ++j) {
        dom.lo.push_back(b.lo[n + j]);
        dom.hi.push_back(b.hi[n + j]);
        dom.lo.push_back(0.0);
        dom.hi.push_back(kTwoPi);
      }
      tasks.push_back({st.index, dom});
    }

  double total = par::map_sum(tasks.size(), [&](std::size_t ti) {
    const Task& task = tasks[ti];
    auto integrand = [&](const std::vector<double>& x) -> double {
      StratumPoint p;
      p.vertex = task.vertex;
      p.vertex_coords = strata[task.vertex].coords;
      p.u.assign(x.begin(), x.begin() + n);
      p.z.resize(m);
      for (int j = 0; j < m; ++j) {
        double s = x[n + 2 * j], phi = x[n + 2 * j + 1];
        p.z[j] = std::exp(s) * Cx(std::cos(phi), std::sin(phi));
      }
      // Coordinate frame (du.., d/ds_j, d/dphi_j ..) pushed to the
      // (du, dRe, dIm) basis.
      std::vector<Tangent> frame;
      frame.reserve(n + 2 * m);
      for (int i = 0; i < n; ++i) {
        Tangent t(n + 2 * m, 0.0);
        t[i] = 1.0;
        frame.push_back(std::move(t));
      }
      for (int j = 0; j < m; ++j) {
        Tangent ts(n + 2 * m, 0.0), tphi(n + 2 * m, 0.0);
        ts[n + 2 * j] = p.z[j].real();
        ts[n + 2 * j + 1] = p.z[j].imag();
        tphi[n + 2 * j] = -p.z[j].imag();
        tphi[n + 2 * j + 1] = p.z[j].real();
        frame.push_back(std::move(ts));
        frame.push_back(std::move(tphi));
      }
      return form(p, frame);
    };
    return integrate_adaptive(task.domain, integrand, opt);
  });
  return chart.orientation() * total;
}

Form complete_form(const Form& form) {
  Form out = form;
  if (out.flags().in_omega && !out.flags().generated_by_functions) {
    // Completion can leave Omega; the result is still refined.
    out.flags().in_omega = false;
    out.flags().refined = true;
  }
  return out;
}

}  // namespace vfc::charts
