#ifndef VFC_CHARTS_HPP
#define VFC_CHARTS_HPP

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "vfc/geometry.hpp"
#include "vfc/prng.hpp"
#include "vfc/quadrature.hpp"
#include "vfc/tropical.hpp"

namespace vfc::charts {

using Cx = std::complex<double>;

// A point of the chart sitting over a 0-dimensional tropical stratum:
// tropical part = vertex, smooth part = (u, z) in R^n x (C*)^m.
struct StratumPoint {
  int vertex = 0;                      // index into ExplodedChart::strata()
  std::vector<double> vertex_coords;   // tropical coordinates of the vertex
  std::vector<double> u;
  std::vector<Cx> z;

  int n() const { return static_cast<int>(u.size()); }
  int m() const { return static_cast<int>(z.size()); }

  // Smooth coordinates (u, log|z|): region membership plane.
  std::vector<double> region_coords() const;
};

// Tangent vector in the basis (du_1..du_n, dRe z_1, dIm z_1, ...).
using Tangent = std::vector<double>;

struct VertexStratum {
  int index;
  std::vector<Rat> coords_exact;
  std::vector<double> coords;
};

// Coordinate region of R^n x T^m_P at desk scale. Only 0-dimensional
// tropical strata carry points; the smooth-part region is a box union over
// (u, log|z|).
class ExplodedChart {
 public:
  ExplodedChart() = default;
  ExplodedChart(int n, int m, tropical::Polytope polytope, Region region, int orientation = 1);

  int n() const { return n_; }
  int m() const { return m_; }
  int real_dim() const { return n_ + 2 * m_; }
  const tropical::Polytope& polytope() const { return *polytope_; }
  const Region& region() const { return region_; }
  int orientation() const { return orientation_; }

  const std::vector<VertexStratum>& strata() const { return strata_; }

  bool contains(const StratumPoint& p, double pad = 0.0) const;

  StratumPoint make_point(int vertex, std::vector<double> u, std::vector<Cx> z) const;

  // Chart over the tangent cone at p; same smooth-part data.
  ExplodedChart tropical_completion(const std::vector<Rat>& p) const;

 private:
  int n_ = 0, m_ = 0;
  std::optional<tropical::Polytope> polytope_;
  Region region_;
  int orientation_ = 1;
  std::vector<VertexStratum> strata_;
};

struct FormFlags {
  bool in_omega = false;
  bool generated_by_functions = false;
  bool refined = false;
};

// Differential form as a per-stratum evaluator. Immutable; all the algebra
// returns new forms.
class Form {
 public:
  using Eval = std::function<double(const StratumPoint&, const std::vector<Tangent>&)>;

  Form() = default;
  Form(int degree, Eval eval, FormFlags flags = {}) : degree_(degree), eval_(std::move(eval)), flags_(flags) {}

  int degree() const { return degree_; }
  const FormFlags& flags() const { return flags_; }
  FormFlags& flags() { return flags_; }

  double operator()(const StratumPoint& p, const std::vector<Tangent>& vs) const { return eval_(p, vs); }

  void set_exact_d(Eval d) { dexact_ = std::move(d); }
  const std::optional<Eval>& exact_d() const { return dexact_; }

 private:
  int degree_ = 0;
  Eval eval_;
  std::optional<Eval> dexact_;
  FormFlags flags_;
};

// Constructors.
Form constant_form(double c, FormFlags flags = {true, true, false});
Form scalar_form(std::function<double(const StratumPoint&)> f, FormFlags flags = {true, true, false});

enum class CovectorKind { du, dx, dy, dlogr, dphi };
double covector_value(CovectorKind kind, int index, const StratumPoint& p, const Tangent& t);

// coeff(p) * wedge of listed covectors.
Form monomial_form(std::function<double(const StratumPoint&)> coeff,
                   std::vector<std::pair<CovectorKind, int>> basis, FormFlags flags);

Form add(const Form& a, const Form& b);
Form scale(const Form& a, double c);
Form scale_by(const Form& a, std::function<double(const StratumPoint&)> f);
Form wedge(const Form& a, const Form& b);

struct DerivOptions {
  double step = 1e-5;  // finite-difference step x coordinate scale
};
Form d(const Form& a, const DerivOptions& opt = {});

// Map of charts used for pullback and transition restriction. apply() must
// send vertex strata to vertex strata.
struct ChartMap {
  std::function<StratumPoint(const StratumPoint&)> apply;
  double fd_step = 1e-6;

  Tangent push_tangent(const StratumPoint& p, const Tangent& t) const;
};

Form pullback(const Form& a, const ChartMap& phi);

// Moves p along t (constant coefficients in the (u, Re z, Im z) basis).
StratumPoint displace(const StratumPoint& p, const Tangent& t, double h);

// Numeric sanity checks: multilinearity/alternation spot checks for every
// form; flagged generated_by_functions forms additionally vanish on angular
// probe vectors over m>0 strata.
struct FormCheckReport {
  bool multilinear_ok = true;
  bool alternating_ok = true;
  bool rnil_ok = true;
  double worst = 0.0;
};
FormCheckReport validate_form(const ExplodedChart& chart, const Form& form, Prng& rng,
                              int samples = 16, double tol = 1e-6);

// Stratum-sum integral of a top-degree form. Throws DEGREE_MISMATCH,
// REJECTED (m>0 form outside every integrable class), NONCONVERGED.
double integrate_chart(const ExplodedChart& chart, const Form& form, const QuadOptions& opt = {});

// Restriction/extension of a form to the completed chart; flags per the
// completion rules (in_omega may degrade to refined).
Form complete_form(const Form& form);

}  // namespace vfc::charts

#endif
