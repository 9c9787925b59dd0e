#ifndef VFC_VINT_HPP
#define VFC_VINT_HPP

#include "vfc/charts.hpp"
#include "vfc/vclass.hpp"

// Orientation and sign table
// --------------------------
// Chart orientation: the coordinate frame (u_1..u_n, Re z_1, Im z_1, ..) is
// positive iff the chart's orientation field is +1; the equivalent ordered
// frame for integration is (u_1.., s_1, phi_1, ..) with s = log|z|.
// Zero sets: 0-dimensional pieces carry sign = chart orientation x
// sgn det(D nu) with V in its complex basis (Re w_1, Im w_1, ..). For
// 1-dimensional pieces the tangent tau is fixed by requiring the frame
// (tau, p_1, .., p_{2d}) positive, where D nu(p_l) runs through that complex
// basis.
// Pushforward: W = A x R^{2 dim A}, or(W fiber) = dw_1..dw_{2 dim A},
// or(total space over a piece) = or(piece) x or(fiber). The cached
// coefficients store values of (r theta wedge e) on the frame
// (E_{j in J}, T, Phi_1..), i.e. base-index vectors first; with the product
// trivialization (a, t, phi) this makes the defining adjunction
// INT_X pi*alpha wedge beta = INT_A alpha wedge pi_! beta hold with
// or(X) = or(A) wedge or(fiber).
// Targets fibered over Z order the Z coordinates FIRST (A_fam = Z x A'), so
// that slices and families assign coherent signs in the pullback squares.

namespace vfc::vint {

using charts::Form;
using kcat::CutoffFamily;
using kcat::KuranishiCategory;
using kcat::StratumPoint;
using vclass::VirtualClass;

// Partition of unity on K_C: disjoint chart-opens O_k carrying
// r = r_k / (|G_k| (R + sum_j r_j)) with exact fiberwise sums 1 on K_C.
class PartitionOfUnity {
 public:
  struct Piece {
    int chart_id = 0;
    Box core;           // r_k = 1 plateau
    Box support;        // O_k
    double pinned = -1; // >= 0: fixed numerator value on the pinned zone
  };
  std::vector<Piece> pieces;
  std::optional<std::pair<int, Region>> pinned_neighborhood;

  double numerator(const KuranishiCategory& k, int piece, int chart_id, const StratumPoint& p) const;
  double denominator(const KuranishiCategory& k, const CutoffFamily& cutoffs, int chart_id,
                     const StratumPoint& p) const;
  // r of piece `piece` evaluated at a point presented on chart `chart_id`.
  double r(const KuranishiCategory& k, const CutoffFamily& cutoffs, int piece, int chart_id,
           const StratumPoint& p) const;
  // Sum of r over the fiber of the point through the chart presentation
  // (group orbits and transition routes); equals 1 on K_C.
  double fiber_sum(const KuranishiCategory& k, const CutoffFamily& cutoffs, int chart_id,
                   const StratumPoint& p) const;
};

// Lemma "partition": cores around the cutoff cores, R vanishing exactly on
// K_C, r by the quoted formula. The optional pinned neighborhood freezes
// r = 1/|G_1| on O_1 and 0 on the other pieces there. COVER_FAIL if sampled
// K_C points escape every support.
PartitionOfUnity build_partition(const KuranishiCategory& k, const CutoffFamily& cutoffs,
                                 double inflate = 0.35,
                                 std::optional<std::pair<int, Region>> pinned = std::nullopt);

struct IntegrateOptions {
  double curve_tol = 1e-9;
  int min_curve_samples = 64;
};

// Def "intdef": sum over pieces and branches of mu(i) * INT_{[K](i)} r theta.
// Throws DEGREE_MISMATCH when deg theta != virtual dimension.
double integrate_vclass(const KuranishiCategory& k, const CutoffFamily& cutoffs, const VirtualClass& vc,
                        const Form& theta, const PartitionOfUnity& part, const IntegrateOptions& opt = {});

// ---- pushforward -----------------------------------------------------------

struct TargetA {
  int dim = 0;  // smooth manifold R^dim (0 = point)
  Box bounds;
  // pi per chart id, reading dim real coordinates
  std::map<int, std::function<Vec(const StratumPoint&)>> pi;
};

// W = A x R^{2 dim A}, x(a,w) = a + L w, e = normalized bump Thom form.
struct PushforwardConfig {
  Mat L;                    // dim x 2*dim, full row rank
  double bump_radius = 1.0;
  int grid_per_axis = 41;   // output form cache over A.bounds
  static PushforwardConfig standard(int dim_a, double radius = 1.0);
};

// Cached pushforward form on A with multilinear interpolation between grid
// nodes. Degree = deg theta + dim A - piece dimension.
class PushedForm {
 public:
  int degree() const { return degree_; }
  // Evaluate at a in A on `degree` tangent vectors (columns).
  double operator()(const Vec& a, const Mat& vectors) const;
  double integral_against(const std::function<double(const Vec&)>& coeff) const;  // INT_A f .=. top pairing

  int dim_a() const { return dim_; }
  const Box& bounds() const { return bounds_; }

  // internal
  int degree_ = 0, dim_ = 0;
  Box bounds_;
  std::vector<int> shape_;                   // nodes per axis
  std::vector<std::vector<double>> coeff_;   // per multi-index J (lex), node-major values
  std::vector<std::vector<int>> multi_indices_;
};

// Def "pushforward" steps 1-6 for the desk-scale W. Throws NOT_SUBMERSION,
// DEGREE_MISMATCH.
PushedForm pushforward(const KuranishiCategory& k, const CutoffFamily& cutoffs, const VirtualClass& vc,
                       const TargetA& a, const Form& theta, const PushforwardConfig& cfg,
                       const PartitionOfUnity& part, const IntegrateOptions& opt = {});

// INT_A theta_a wedge omega for a form on A given by coefficient evaluators;
// used by the adjunction checks.
double integrate_on_a(const TargetA& a, const PushedForm& omega,
                      const std::function<double(const Vec&)>& theta_coeff, int theta_degree);

// ---- Chern-Weil ---------------------------------------------------------------

// c_1 of a line bundle with unitary connection d + i alpha: c1 = d(alpha)/(2 pi),
// generated by functions, d c1 = 0 sampled. NOT_UNITARY if alpha is not real.
Form chern_c1(const Form& alpha_real_one_form);

// ---- tropical completion of the class -------------------------------------------

struct CompletedClass {
  std::vector<Rat> tropical_point;
  KuranishiCategory category;   // K // p
  CutoffFamily cutoffs;
  VirtualClass vc;              // transported class
  PartitionOfUnity partition;
};

// Completes the category, cutoffs, class and partition at p (single-chart
// categories at desk scale).
CompletedClass complete_vclass(const KuranishiCategory& k, const CutoffFamily& cutoffs,
                               const VirtualClass& vc, const PartitionOfUnity& part,
                               const std::vector<Rat>& p);

struct DecompositionReport {
  double total = 0.0;
  std::vector<std::pair<std::vector<Rat>, double>> contributions;
  double sum() const {
    double s = 0;
    for (const auto& [p, v] : contributions) s += v;
    return s;
  }
};

// Lemma "tropical completion lemma": INT_[K] theta = sum_p INT_[K//p] theta//p.
// Requires theta generated by functions (REJECTED otherwise).
DecompositionReport check_decomposition(const KuranishiCategory& k, const CutoffFamily& cutoffs,
                                        const VirtualClass& vc, const PartitionOfUnity& part,
                                        const Form& theta, const IntegrateOptions& opt = {});

}  // namespace vfc::vint

#endif
