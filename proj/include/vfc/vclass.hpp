#ifndef VFC_VCLASS_HPP
#define VFC_VCLASS_HPP

#include "vfc/branched.hpp"
#include "vfc/sheaf.hpp"

namespace vfc::vclass {

using branched::BranchSpace;
using branched::WBCover;
using kcat::CutoffFamily;
using kcat::KuranishiCategory;
using kcat::Metric;
using kcat::StratumPoint;

// A perturbation nu of dbar on a chart: evaluator plus the defect nu - dbar
// (the part that must live in the admissible subbundle).
struct PerturbationSection : sheaves::SectionBase {
  int chart_id = 0;
  std::function<CVec(const StratumPoint&)> eval;
  std::function<CVec(const StratumPoint&)> delta;  // nu - dbar
};

struct PerturbOptions {
  int max_retries = 64;
  int grid_per_dim = 7;
  double tau_factor = 1e-4;            // transversality threshold x Lipschitz scale
  int bump_splits = 2;                 // bump decomposition of the open per axis
  std::vector<std::function<bool(const KuranishiCategory&, int, const StratumPoint&)>> extra_conditions;
};

// Transverse perturbation of dbar on a chart-open (proof construction of the
// patching/extension lemmas: dbar + sum of bump * constant-section terms,
// coefficients drawn from the seeded generator, rescaled to the metric bound,
// retried until the three defining conditions verify).
PerturbationSection perturb(const KuranishiCategory& k, int chart_id, const Region& open,
                            const CutoffFamily& cutoffs, const Metric& metric, std::uint64_t seed,
                            const PerturbOptions& opt = {});

struct SdefReport {
  bool ok = true;
  double worst_defect = 0.0;       // condition (1): defect outside the admissible bundle
  double worst_metric = 0.0;       // condition (2): |nu - dbar|_g
  double min_margin = 1e300;       // condition (3): transversality at zeros
  std::string note;
};
SdefReport validate_sdef(const KuranishiCategory& k, int chart_id, const Region& open,
                         const PerturbationSection& nu, const CutoffFamily& cutoffs, const Metric& metric,
                         const PerturbOptions& opt = {});

// The sheaf S of Definition "Sdef": Patching and Extension, no Averaging.
class PerturbationSheaf : public sheaves::Sheaf {
 public:
  PerturbationSheaf(const KuranishiCategory& k, const CutoffFamily& cutoffs, const Metric& metric,
                    std::uint64_t seed, PerturbOptions opt = {})
      : k_(&k), cutoffs_(&cutoffs), metric_(&metric), seed_(seed), opt_(std::move(opt)) {}

  sheaves::SectionPtr make_default(const sheaves::ChartOpen& open) const override;
  sheaves::SectionPtr restrict(const sheaves::OpenMorphism& m, sheaves::SectionPtr on_target) const override;
  sheaves::SectionPtr extend(const sheaves::OpenMorphism& into_target, sheaves::SectionPtr on_source,
                             const sheaves::ChartOpen& target) const override;
  sheaves::SectionPtr patch(const sheaves::ChartOpen& target,
                            const std::vector<Candidate>& cands) const override;
  sheaves::SectionPtr average(const kcat::FiniteGroup& g, const sheaves::ChartOpen& open,
                              sheaves::SectionPtr s) const override;  // throws: S has no Averaging
  Vec probe(sheaves::SectionPtr s, const StratumPoint& p) const override;

 private:
  const KuranishiCategory* k_;
  const CutoffFamily* cutoffs_;
  const Metric* metric_;
  std::uint64_t seed_;
  PerturbOptions opt_;
};

// ---- zero sets ----------------------------------------------------------------

struct ZeroPoint {
  StratumPoint x;
  int sign = +1;
};

struct ZeroCurve {
  std::vector<StratumPoint> samples;  // ordered, orientation = increasing index
  bool closed = false;
};

struct ZeroSet {
  int kdim = 0;  // expected dimension of the pieces
  std::vector<ZeroPoint> points;
  std::vector<ZeroCurve> curves;
};

struct ZeroSetOptions {
  int grid_per_dim = 9;
  double dedup_radius = 1e-6;
  double trace_step = 0.008;
  int max_trace_steps = 12000;
  double tau_factor = 1e-4;
};

// Zero extraction: k=0 Newton refinement from grid seeds; k=1 grid seeding
// with Newton projection and oriented segment tracing; k>=2 requires a
// supplied parametrization (DIM_UNSUPPORTED).
ZeroSet zero_set(const KuranishiCategory& k, int chart_id, const Region& open,
                 const std::function<CVec(const StratumPoint&)>& nu, const ZeroSetOptions& opt = {});

// Signed point count (k=0 pieces).
int signed_count(const ZeroSet& zs);

// ---- the virtual class ----------------------------------------------------------

struct VirtualClass {
  struct ChartPiece {
    int chart_id = 0;
    Region open;                       // the admissible chart-open
    BranchSpace space;
    std::vector<ZeroSet> per_branch;   // [K](i) per branch label
    sheaves::SectionPtr section;       // underlying branched perturbation
  };
  std::vector<ChartPiece> pieces;
  double epsilon = 0.05;
  std::uint64_t seed = 0;

  const ChartPiece& piece_for_chart(int chart_id) const;
};

struct BuildClassOptions {
  PerturbOptions perturb;
  ZeroSetOptions zeros;
  sheaves::GlobalSectionOptions global;
  bool verify_e_membership = true;
};

VirtualClass build_virtual_class(const KuranishiCategory& k, const CutoffFamily& cutoffs,
                                 const Metric& metric, const WBCover& cover, std::uint64_t seed,
                                 const BuildClassOptions& opt = {});

}  // namespace vfc::vclass

#endif
