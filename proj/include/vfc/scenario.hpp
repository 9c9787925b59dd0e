#ifndef VFC_SCENARIO_HPP
#define VFC_SCENARIO_HPP

#include <string>

#include "vfc/charts.hpp"
#include "vfc/kcat.hpp"
#include "vfc/vint.hpp"

#include "json.hpp"

namespace vfc::scenario {

// Scenario = declarative category + forms registry + targets + run knobs.
struct Scenario {
  std::string name;
  kcat::KuranishiCategory category;
  std::map<std::string, charts::Form> forms;
  std::optional<vint::TargetA> target_a;
  std::uint64_t seed = 2024;
  double epsilon = 0.05;
  double tol_scale = 1.0;
  std::vector<std::string> checks;  // requested suites; empty = default set
};

// Throws SCHEMA on malformed input, IO on unreadable files.
Scenario load_scenario(const std::string& path);
Scenario scenario_from_json(const nlohmann::json& j);

// Form loaded from a registry entry (terms of coeff expression x covector
// wedge), evaluated on any chart's stratum points.
charts::Form form_from_json(const nlohmann::json& j);

}  // namespace vfc::scenario

#endif
