#ifndef VFC_SHEAF_HPP
#define VFC_SHEAF_HPP

#include <map>
#include <memory>

#include "vfc/kcat.hpp"

namespace vfc::sheaves {

using kcat::FiniteGroup;
using kcat::KuranishiCategory;
using kcat::StratumPoint;

struct ChartOpen {
  int chart_id = 0;
  Region region;
};

// Morphism data the capabilities consume: the source open includes into (or
// covers into) the target chart; back is the declared local inverse used by
// extensions, valid on back_domain.
struct OpenMorphism {
  int source_chart = 0;
  int target_chart = 0;
  std::function<StratumPoint(const StratumPoint&)> fwd;   // source pt -> target pt
  std::function<StratumPoint(const StratumPoint&)> back;  // target pt -> source pt
  Region back_domain;                                     // in target coordinates
};

struct SectionBase {
  virtual ~SectionBase() = default;
};
using SectionPtr = std::shared_ptr<const SectionBase>;

// Capability record: the Patching / Extension / Averaging axioms plus
// restriction and a numeric probe for sampled equality tests.
class Sheaf {
 public:
  virtual ~Sheaf() = default;

  struct Candidate {
    SectionPtr section;  // already living on the target chart
    Region inner;        // weight 1 plateau
    Region outer;        // weight support
    // When set, used instead of the plateau pair (the branched patching
    // drives collar weights through this).
    std::function<double(const std::vector<double>&)> weight;
  };

  virtual SectionPtr make_default(const ChartOpen& open) const = 0;
  virtual SectionPtr restrict(const OpenMorphism& m, SectionPtr on_target) const = 0;
  virtual SectionPtr extend(const OpenMorphism& into_target, SectionPtr on_source,
                            const ChartOpen& target) const = 0;
  virtual SectionPtr patch(const ChartOpen& target, const std::vector<Candidate>& cands) const = 0;
  virtual SectionPtr average(const FiniteGroup& g, const ChartOpen& open, SectionPtr s) const = 0;
  virtual Vec probe(SectionPtr s, const StratumPoint& p) const = 0;
};

// Plateau weight: 1 on inner, 0 outside outer.
double plateau_weight(const Region& inner, const Region& outer, const std::vector<double>& x);

// ---- concrete sheaves ------------------------------------------------------

struct FunctionSection : SectionBase {
  int chart_id = 0;
  std::function<double(const StratumPoint&)> eval;
};

// C^infinity,1 real functions; patch by partition of unity, average over the
// group orbit, extend along declared local inverses.
class FunctionSheaf : public Sheaf {
 public:
  explicit FunctionSheaf(const KuranishiCategory& k, double default_value = 0.0)
      : k_(&k), default_value_(default_value) {}

  SectionPtr make_default(const ChartOpen& open) const override;
  SectionPtr restrict(const OpenMorphism& m, SectionPtr on_target) const override;
  SectionPtr extend(const OpenMorphism& into_target, SectionPtr on_source,
                    const ChartOpen& target) const override;
  SectionPtr patch(const ChartOpen& target, const std::vector<Candidate>& cands) const override;
  SectionPtr average(const FiniteGroup& g, const ChartOpen& open, SectionPtr s) const override;
  Vec probe(SectionPtr s, const StratumPoint& p) const override;

 private:
  const KuranishiCategory* k_;
  double default_value_;
};

// Conformal metrics on V: positive scalar fields lambda(x). Lemma "Kmetric"
// property {lambda |dbar| < 1} inside {some rho > 1/2} is verified separately
// on grids.
class MetricSheaf : public Sheaf {
 public:
  MetricSheaf(const KuranishiCategory& k, const kcat::CutoffFamily& cutoffs, double default_scale)
      : k_(&k), cutoffs_(&cutoffs), default_scale_(default_scale) {}

  SectionPtr make_default(const ChartOpen& open) const override;
  SectionPtr restrict(const OpenMorphism& m, SectionPtr on_target) const override;
  SectionPtr extend(const OpenMorphism& into_target, SectionPtr on_source,
                    const ChartOpen& target) const override;
  SectionPtr patch(const ChartOpen& target, const std::vector<Candidate>& cands) const override;
  SectionPtr average(const FiniteGroup& g, const ChartOpen& open, SectionPtr s) const override;
  Vec probe(SectionPtr s, const StratumPoint& p) const override;

 private:
  const KuranishiCategory* k_;
  const kcat::CutoffFamily* cutoffs_;
  double default_scale_;
};

// ---- the global-section algorithm -------------------------------------------

struct NestedRegions {
  Region k1, k1s;  // seed domain and its extension (may be empty)
  Region k2, k2s;  // output domain and its extension
};

struct GlobalSectionInput {
  std::map<int, NestedRegions> regions;  // per chart id
  std::map<int, SectionPtr> seed;        // theta on K1# per chart
};

struct GlobalSectionOptions {
  int samples_per_dim = 5;
  double compat_tol = 1e-9;
  int max_halvings = 20;
};

struct GlobalSectionResult {
  std::map<int, SectionPtr> sections;  // defined on K2 per chart
  std::map<int, Region> domains;
  int steps = 0;
};

// Inductive gluing: at step j, extend from the maximal-dimension chart at
// each sampled point, patch with plateau weights over the one-step-shrunk
// regions, then average over G_j. Deterministic given the seed sections.
// Throws AXIOM_VIOLATION(step, chart) if a capability postcondition fails.
GlobalSectionResult global_section(const KuranishiCategory& k, const Sheaf& sheaf, GlobalSectionInput in,
                                   const GlobalSectionOptions& opt = {});

// Lemma "function construction": extend rho given on chart i (with support
// whose closure lies in O per chart) to every chart; zero far away.
std::map<int, SectionPtr> extend_function(const KuranishiCategory& k, int chart_id,
                                          std::function<double(const StratumPoint&)> rho,
                                          const std::map<int, Region>& support_o,
                                          const GlobalSectionOptions& opt = {});

// Remark "function remark": nonnegative function with zero set exactly C
// (per chart regions), squared-distance based.
std::map<int, std::function<double(const StratumPoint&)>> vanishing_function(
    const KuranishiCategory& k, const std::map<int, Region>& closed_c);

}  // namespace vfc::sheaves

#endif
