#ifndef VFC_BRANCHED_HPP
#define VFC_BRANCHED_HPP

#include <optional>
#include <string>

#include "vfc/sheaf.hpp"

namespace vfc::branched {

using kcat::KuranishiCategory;
using kcat::StratumPoint;
using sheaves::ChartOpen;
using sheaves::OpenMorphism;
using sheaves::SectionPtr;
using sheaves::plateau_weight;
using sheaves::Sheaf;

// Finite rational probability space with an equivalence relation; all
// measure arithmetic is exact.
struct BranchSpace {
  std::vector<std::string> ids;
  std::vector<Rat> mu;
  std::vector<int> cls;  // equivalence class representative per index

  std::size_t size() const { return ids.size(); }
  bool equivalent(int a, int b) const { return cls[a] == cls[b]; }
  Rat total() const {
    Rat s = 0;
    for (const Rat& q : mu) s += q;
    return s;
  }
  void validate() const;  // positive rational weights, total exactly 1

  static BranchSpace singleton();
};

struct OpenRef {
  int chart_id = 0;
  Region region;
};

// Weighted branched cover presented through its capability closures. The
// admissible-open oracle returns nullopt off the domain O_I.
class WBCover {
 public:
  std::function<std::optional<BranchSpace>(const OpenRef&)> space;
  // Label transport: identity along inclusions and declared transition
  // branches; right group translation along automorphisms. Returns, per
  // label index of the source space, its index in the pulled-back space.
  std::function<std::vector<int>(const OpenRef&, int group_elem)> pull_group;
  // Separation of two branches at a point of the open.
  std::function<bool(const OpenRef&, const StratumPoint&, int, int)> separated_at;
  // Collar weight: 1 where branches a and b are glued (not separated), 0
  // deep in the separated zone; drives Claim "two patch" blending.
  std::function<double(const OpenRef&, const StratumPoint&, int, int)> nonsep_weight;
};

// Lemma "wb cover" per-chart construction: the G_i-fold cover over opens
// meeting closure(U'), inside U; uniform measure 1/|G_i|; discrete
// equivalence inside U', indiscrete otherwise; singleton away from U'.
WBCover per_chart_cover(const KuranishiCategory& k, int chart_id, Region u_prime, Region u);

// Product cover: product spaces, product measure, separated iff separated in
// some factor.
WBCover product_cover(const KuranishiCategory& k, std::vector<WBCover> factors);

struct AutomorphismFixture {
  int chart_id = 0;
  int group_elem = 0;  // nontrivial element index
  std::vector<StratumPoint> samples;
};

bool has_trivial_stabilizers(const KuranishiCategory& k, const WBCover& cover,
                             const std::vector<AutomorphismFixture>& fixtures);

// Lemma "wb cover" assembly: product over charts of per-chart covers whose
// separation zones contain {rho >= 1/2} (where the virtual class lives).
WBCover standard_cover(const KuranishiCategory& k, const kcat::CutoffFamily& cutoffs);

// ---- the lifted sheaf S^I ---------------------------------------------------

struct BranchedSection : sheaves::SectionBase {
  BranchSpace space;
  std::vector<SectionPtr> per_branch;
};

// S^I: weighted branched sections of an inner sheaf S. Patch and Average
// implement the ordered branch-by-branch constructions of Claims "two patch"
// and "2average"; Extension shares choices across non-separated pairs.
// Requires only Patching+Extension from S; averaging needs trivial
// stabilizers of I.
class BranchedSheaf : public Sheaf {
 public:
  BranchedSheaf(const KuranishiCategory& k, const Sheaf& inner, const WBCover& cover)
      : k_(&k), inner_(&inner), cover_(&cover) {}

  SectionPtr make_default(const ChartOpen& open) const override;
  SectionPtr restrict(const OpenMorphism& m, SectionPtr on_target) const override;
  SectionPtr extend(const OpenMorphism& into_target, SectionPtr on_source,
                    const ChartOpen& target) const override;
  SectionPtr patch(const ChartOpen& target, const std::vector<Candidate>& cands) const override;
  SectionPtr average(const kcat::FiniteGroup& g, const ChartOpen& open, SectionPtr s) const override;
  Vec probe(SectionPtr s, const StratumPoint& p) const override;

  const WBCover& cover() const { return *cover_; }
  const Sheaf& inner() const { return *inner_; }

 private:
  BranchSpace space_of(const ChartOpen& open) const;
  const KuranishiCategory* k_;
  const Sheaf* inner_;
  const WBCover* cover_;
};

}  // namespace vfc::branched

#endif
