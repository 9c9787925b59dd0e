#ifndef VFC_KCAT_HPP
#define VFC_KCAT_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vfc/expr.hpp"
#include "vfc/group.hpp"
#include "vfc/prng.hpp"

namespace vfc::kcat {

using charts::ExplodedChart;
using charts::Form;
using charts::StratumPoint;
using charts::Tangent;

// Nested chart regions F inside F' inside F# (Remark on finite presentations);
// U is the bundle domain.
enum class Level { F, Fp, Fs, U };

struct KChart {
  int id = 0;
  int n = 0, m = 0;
  std::optional<tropical::Polytope> polytope;  // defaults to full_space(m)
  Region F, Fp, Fs, U;
  FiniteGroup group;
  int d = 0;  // complex rank of V_i
  int orientation = 1;

  // dbar as expressions keyed by vertex index (-1 = default for all strata),
  // or directly as an evaluator (weak products compose evaluators).
  std::map<int, std::vector<Expr>> dbar_exprs;
  std::function<CVec(const StratumPoint&)> dbar_fn;

  // Base map to Z: u-coordinate indices (base = (u[k_1], .., u[k_dimZ])).
  // Coordinate base maps keep pullbacks box-shaped; they are also submersions
  // by construction.
  std::vector<int> base_u_coords;
  std::vector<Expr> base_exprs;  // general evaluator fallback
  std::function<Vec(const StratumPoint&)> base_fn;

  // Cutoff-core hint: where the holomorphic locus hides in tropical strata
  // invisible to vertex sampling (the T^1_[0,inf) situation), fixtures pin
  // the core region explicitly.
  std::optional<Region> core_hint;

  // Weak-product provenance: slices of the factor charts inside this one.
  struct FactorSlice {
    int factor = 0;
    int chart_id = 0;
    int u_off = 0, z_off = 0, d_off = 0;
    int n = 0, m = 0, d = 0;
  };
  std::vector<FactorSlice> factors;

  int dim_total() const { return n + 2 * m; }
  ExplodedChart chart(Level lvl) const;
  CVec dbar_at(const StratumPoint& p) const;
  Vec base_at(const StratumPoint& p) const;
};

// The overlap space F_ij with its two structure maps. It is parametrized by
// its own coordinates (which coincide with one of the charts' coordinate
// systems); to_i is a |G_j|-fold cover of an open subset of F_i and to_j a
// |G_i|-fold cover of a cut subfamily of F_j. from_i / from_j are the
// declared local inverses (one branch; the other sheets are group
// translates).
struct Transition {
  int i = 0, j = 0;        // dim_i <= dim_j
  int param_chart = -1;    // chart whose coordinate type the domain uses
  Region domain;           // overlap region in its parametrizing coordinates
  std::function<StratumPoint(const StratumPoint&)> to_i, to_j;
  std::function<StratumPoint(const StratumPoint&)> from_i, from_j;
  Region image_in_i, image_in_j;  // validity regions of the declared inverses

  static Transition identity_overlap(int i, int j, Region shared);
};

struct TargetSpace {
  int dim = 0;  // smooth manifold R^dim; dim == 0 is a point
  Box bounds;   // working window for grids
};

struct ValidationReport {
  bool proper = false;
  bool complete = false;
  double min_transversality_margin = 0.0;
  double max_dbar_coherence_error = 0.0;
  std::vector<std::string> notes;
};

struct BuildOptions {
  int grid_per_dim = 9;          // deterministic validation grids
  double tau_trans = 1e-4;       // transversality threshold x local scale
  double coherence_tol = 1e-9;
  bool check_transversality = true;
};

class KuranishiCategory {
 public:
  std::vector<KChart> charts;
  std::vector<Transition> transitions;
  // (small id, big id) -> d_big x d_small complex inclusion, orthonormal
  // columns.
  std::map<std::pair<int, int>, CMat> v_inclusions;
  TargetSpace Z;
  ValidationReport report;
  std::vector<std::vector<StratumPoint>> hol_samples;  // per chart

  const KChart& chart_by_id(int id) const;
  int chart_index(int id) const;

  // V_small included into V_big; identity when ids agree.
  CMat inclusion(int small_id, int big_id) const;
  bool has_inclusion(int small_id, int big_id) const;

  // Transition routes (composable chains up to length 2) between charts.
  struct Route {
    int from = 0, to = 0;
    std::function<StratumPoint(const StratumPoint&)> map;
    std::function<bool(const StratumPoint&)> defined;  // domain test
  };
  std::vector<Route> routes(int from_id, int to_id) const;
};

// Builds and validates; throws NOT_TRANSVERSE / BAD_NESTING /
// GROUP_NOT_CLOSED / SCHEMA naming the violated clause.
KuranishiCategory build_kuranishi(std::vector<KChart> charts, std::vector<Transition> transitions,
                                  std::map<std::pair<int, int>, CMat> v_inclusions, TargetSpace z,
                                  const BuildOptions& opt = {});

struct PropernessReport {
  bool proper = false;
  bool complete = false;
  std::vector<std::string> diagnostics;
};
PropernessReport properness(const KuranishiCategory& k, double margin_fraction = 0.02);

// ---- cutoffs ------------------------------------------------------------

struct Cutoff {
  int index = 0;
  int chart_id = 0;
  Box core;        // rho = 1 on the core
  double margin = 1.0;  // distance over which rho falls 1 -> -1
};

class CutoffFamily {
 public:
  std::vector<Cutoff> cutoffs;
  double epsilon = 0.05;  // the K_eps parameter, reported by the CLI

  // rho_i evaluated at a point of chart `chart_id` (routes through
  // transitions; -1 where unreachable).
  double rho(const KuranishiCategory& k, int i, int chart_id, const StratumPoint& p) const;
  double max_rho(const KuranishiCategory& k, int chart_id, const StratumPoint& p) const;

  // K_C membership: some rho_i >= 1/2 and dbar in V_j wherever rho_j > 0.
  bool in_kc(const KuranishiCategory& k, int chart_id, const StratumPoint& p, double tol = 1e-7) const;
  // Smooth nonnegative proxy vanishing exactly on K_C.
  double kc_vanishing(const KuranishiCategory& k, int chart_id, const StratumPoint& p) const;
};

CutoffFamily choose_cutoffs(const KuranishiCategory& k, double epsilon = 0.05);

// ---- metric --------------------------------------------------------------

// Conformal metrics: |w|_g = lambda(x) |w|_2 with per-chart constant lambda
// from choose_metric; sheaf sections generalize to fields.
struct Metric {
  std::map<int, double> scale;
  double norm(int chart_id, const CVec& w) const;
};

Metric choose_metric(const KuranishiCategory& k, const CutoffFamily& cutoffs, int grid_per_dim = 9);

// ---- pullback and weak product -------------------------------------------

// Affine map Z' -> Z given by x -> A x + b; must be a submersion.
struct Affine           // between TargetSpaces
{
  Mat a;
  Vec b;
  Vec apply(const Vec& x) const { return a * x + b; }
};

KuranishiCategory pullback_kuranishi(const KuranishiCategory& k, const TargetSpace& z_new,
                                     const Affine& f, const BuildOptions& opt = {});

struct WeakProductChart {
  std::vector<int> factor_chart_ids;   // one per factor category
  std::optional<Region> shrink;        // region over the concatenated (u, s)
};

KuranishiCategory weak_product(const std::vector<KuranishiCategory>& factors,
                               const std::vector<WeakProductChart>& charts, const BuildOptions& opt = {});

// Conformal scale for product charts combining per-factor metrics so that
// factorwise-small sections stay small (single-scalar form of the "1/n times
// the product metric" choice).
Metric product_metric(const KuranishiCategory& product, const std::vector<Metric>& factor_metrics);

// ---- shared sampling helpers ----------------------------------------------

// Deterministic tensor grid over a chart region level; phi_count angular
// samples per z coordinate.
std::vector<StratumPoint> chart_grid(const KChart& kc, Level lvl, int per_dim, int phi_count);

Vec point_to_coords(const StratumPoint& p);
StratumPoint coords_to_point(const StratumPoint& shape, const Vec& x);

}  // namespace vfc::kcat

#endif
