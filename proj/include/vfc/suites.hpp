#ifndef VFC_SUITES_HPP
#define VFC_SUITES_HPP

#include "vfc/branched.hpp"
#include "vfc/vint.hpp"

namespace vfc::suites {

using charts::Form;
using kcat::KuranishiCategory;

struct Row {
  std::string check;
  double lhs = 0.0, rhs = 0.0, tol = 0.0;
  bool pass = false;
  std::string note;
};

// Everything the invariance suites need, built once per (category, seed, eps).
struct Workspace {
  const KuranishiCategory* k = nullptr;
  kcat::CutoffFamily cutoffs;
  kcat::Metric metric;
  branched::WBCover cover;
  vclass::VirtualClass vc;
  vint::PartitionOfUnity partition;
  std::uint64_t seed = 0;
};

Workspace build_workspace(const KuranishiCategory& k, std::uint64_t seed, double epsilon,
                          const vclass::BuildClassOptions& opt = {});

int virtual_dim(const KuranishiCategory& k);

// Random compactly supported function on the charts (bump-profile sums).
Form random_support_function(const KuranishiCategory& k, Prng& rng);

// Individual suites; each returns one or more result rows.
std::vector<Row> suite_counts(const Workspace& w, const Form& theta, double expected, double tol);
std::vector<Row> suite_partition_independence(const Workspace& w, const Form& theta, double tol);
std::vector<Row> suite_stokes(const Workspace& w, std::uint64_t seed, int trials, double tol);
std::vector<Row> suite_seed_independence(const KuranishiCategory& k, double epsilon,
                                         const std::vector<std::uint64_t>& seeds, const Form& theta,
                                         double tol);
std::vector<Row> suite_adjunction(const Workspace& w, const vint::TargetA& a, double tol);
std::vector<Row> suite_we_independence(const Workspace& w, const vint::TargetA& a, double tol);
std::vector<Row> suite_tropical_decomposition(const Workspace& w, const Form& theta, double tol,
                                              const vint::TargetA* a = nullptr, double push_tol = 1e-5);

// Weak product of two independent single-chart workspaces against the
// product category (Thm "weak product theorem" at desk scale).
std::vector<Row> suite_weak_product(const KuranishiCategory& k1, const vint::TargetA& a1,
                                    const KuranishiCategory& k2, const vint::TargetA& a2,
                                    std::uint64_t seed, double epsilon, double tol);

// Pullback compatibility over a slice of Z (Prop "sbc" on fixtures).
std::vector<Row> suite_pullback(const KuranishiCategory& k_over_z, const vint::TargetA& a,
                                double slice_value, std::uint64_t seed, double epsilon, double tol);

}  // namespace vfc::suites

#endif
