#include "vfc/scenario.hpp"

#include <fstream>

#include "vfc/errors.hpp"

namespace vfc::scenario {

using charts::CovectorKind;
using charts::StratumPoint;
using kcat::FiniteGroup;
using kcat::KChart;
using kcat::Transition;
using nlohmann::json;

namespace {

Region region_from(const json& j) {
  Region r;
  for (const auto& jb : j) r.boxes.push_back(box_from_json(jb));
  return r;
}

FiniteGroup group_from(const json& j, int n, int m) {
  std::string kind = j.value("kind", "trivial");
  if (kind == "trivial") return FiniteGroup::trivial(n, m);
  if (kind == "cyclic_rotation") {
    auto axes = j.at("axes").get<std::vector<int>>();
    return FiniteGroup::cyclic_rotation(n, m, axes.at(0), axes.at(1), j.at("order").get<int>());
  }
  if (kind == "cyclic_phase")
    return FiniteGroup::cyclic_phase(n, m, j.at("z").get<int>(), j.at("order").get<int>());
  throw err_schema("unknown group kind '" + kind + "'");
}

std::function<StratumPoint(const StratumPoint&)> point_map_from(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return [](const StratumPoint& p) { return p; };
  if (kind == "pad_u") {
    auto values = j.at("values").get<std::vector<double>>();
    return [values](const StratumPoint& p) {
      StratumPoint q = p;
      for (double v : values) q.u.push_back(v);
      return q;
    };
  }
  if (kind == "take_u") {
    int count = j.at("count").get<int>();
    return [count](const StratumPoint& p) {
      StratumPoint q = p;
      q.u.resize(count);
      return q;
    };
  }
  if (kind == "z_power") {
    int k = j.at("k").get<int>();
    int zi = j.value("z", 0);
    return [k, zi](const StratumPoint& p) {
      StratumPoint q = p;
      q.z[zi] = std::pow(p.z[zi], k);
      return q;
    };
  }
  if (kind == "z_root") {
    int k = j.at("k").get<int>();
    int zi = j.value("z", 0);
    return [k, zi](const StratumPoint& p) {
      StratumPoint q = p;
      q.z[zi] = std::pow(p.z[zi], 1.0 / k);
      return q;
    };
  }
  throw err_schema("unknown point map kind '" + kind + "'");
}

std::pair<CovectorKind, int> covector_from(const std::string& name) {
  auto take = [&](const char* prefix, CovectorKind kind) -> std::optional<std::pair<CovectorKind, int>> {
    std::string p(prefix);
    if (name.rfind(p, 0) == 0) return std::make_pair(kind, std::stoi(name.substr(p.size())) - 1);
    return std::nullopt;
  };
  if (auto c = take("du", CovectorKind::du)) return *c;
  if (auto c = take("dx", CovectorKind::dx)) return *c;
  if (auto c = take("dy", CovectorKind::dy)) return *c;
  if (auto c = take("dlogr", CovectorKind::dlogr)) return *c;
  if (auto c = take("dphi", CovectorKind::dphi)) return *c;
  throw err_schema("unknown covector '" + name + "'");
}

std::function<double(const StratumPoint&)> coeff_from(const std::string& text) {
  Expr e = Expr::parse(text);
  return [e](const StratumPoint& p) {
    ExprEnv env;
    for (int k = 0; k < p.n(); ++k) env["u" + std::to_string(k + 1)] = Cx(p.u[k], 0);
    for (int k = 0; k < p.m(); ++k) env["z" + std::to_string(k + 1)] = p.z[k];
    for (std::size_t k = 0; k < p.vertex_coords.size(); ++k)
      env["t" + std::to_string(k + 1)] = Cx(p.vertex_coords[k], 0);
    return e.eval(env).real();
  };
}

}  // namespace

charts::Form form_from_json(const json& j) {
  charts::FormFlags flags;
  if (j.contains("flags")) {
    flags.in_omega = j["flags"].value("in_omega", false);
    flags.generated_by_functions = j["flags"].value("gbf", false);
    flags.refined = j["flags"].value("refined", false);
  } else {
    flags = {true, true, false};
  }
  std::optional<charts::Form> total;
  for (const auto& jt : j.at("terms")) {
    std::vector<std::pair<CovectorKind, int>> basis;
    for (const auto& b : jt.value("basis", std::vector<std::string>{})) basis.push_back(covector_from(b));
    charts::Form term = charts::monomial_form(coeff_from(jt.at("coeff").get<std::string>()), basis, flags);
    total = total ? charts::add(*total, term) : term;
  }
  if (!total) throw err_schema("form needs at least one term");
  int degree = j.value("degree", total->degree());
  if (degree != total->degree()) throw err_schema("declared form degree disagrees with the basis");
  return *total;
}

namespace {
Scenario scenario_from_json_impl(const json& j);
}

Scenario scenario_from_json(const json& j) {
  try {
    return scenario_from_json_impl(j);
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    throw err_schema(std::string("scenario schema violation: ") + e.what());
  }
}

namespace {

Scenario scenario_from_json_impl(const json& j) {
  Scenario sc;
  sc.name = j.value("name", "scenario");
  sc.seed = j.value("seed", 2024ull);
  sc.epsilon = j.value("epsilon", 0.05);
  if (j.contains("checks")) sc.checks = j.at("checks").get<std::vector<std::string>>();

  std::vector<KChart> charts_in;
  for (const auto& jc : j.at("charts")) {
    KChart c;
    c.id = jc.at("id").get<int>();
    c.n = jc.at("n").get<int>();
    c.m = jc.at("m").get<int>();
    c.d = jc.at("d").get<int>();
    if (jc.contains("polytope")) c.polytope = tropical::Polytope::from_json(jc.at("polytope"));
    c.F = region_from(jc.at("F"));
    c.Fp = region_from(jc.at("Fp"));
    c.Fs = region_from(jc.at("Fs"));
    c.U = region_from(jc.at("U"));
    c.group = group_from(jc.value("group", json{{"kind", "trivial"}}), c.n, c.m);
    c.orientation = jc.value("orientation", 1);
    const auto& jd = jc.at("dbar");
    if (jd.contains("default"))
      c.dbar_exprs[-1] = parse_expr_list(jd.at("default").get<std::vector<std::string>>());
    if (jd.contains("per_vertex"))
      for (const auto& [key, exprs] : jd.at("per_vertex").items())
        c.dbar_exprs[std::stoi(key)] = parse_expr_list(exprs.get<std::vector<std::string>>());
    if (jc.contains("base_u_coords")) c.base_u_coords = jc.at("base_u_coords").get<std::vector<int>>();
    if (jc.contains("core_hint")) c.core_hint = region_from(jc.at("core_hint"));
    charts_in.push_back(std::move(c));
  }

  std::vector<Transition> transitions;
  for (const auto& jt : j.value("transitions", json::array())) {
    Transition t;
    t.i = jt.at("i").get<int>();
    t.j = jt.at("j").get<int>();
    t.param_chart = jt.at("param_chart").get<int>();
    t.domain = region_from(jt.at("domain"));
    t.to_i = point_map_from(jt.at("to_i"));
    t.to_j = point_map_from(jt.at("to_j"));
    t.from_i = point_map_from(jt.at("from_i"));
    t.from_j = point_map_from(jt.at("from_j"));
    t.image_in_i = region_from(jt.at("image_in_i"));
    t.image_in_j = region_from(jt.at("image_in_j"));
    transitions.push_back(std::move(t));
  }

  std::map<std::pair<int, int>, CMat> incs;
  for (const auto& ji : j.value("v_inclusions", json::array())) {
    int small = ji.at("small").get<int>();
    int big = ji.at("big").get<int>();
    const auto& rows = ji.at("matrix");
    CMat m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        m(r, c) = Cx(rows[r][c][0].get<double>(), rows[r][c][1].get<double>());
    incs[{small, big}] = m;
  }

  kcat::TargetSpace z;
  if (j.contains("target_Z")) {
    z.dim = j["target_Z"].value("dim", 0);
    if (j["target_Z"].contains("bounds")) z.bounds = box_from_json(j["target_Z"]["bounds"]);
  }

  sc.category = kcat::build_kuranishi(std::move(charts_in), std::move(transitions), std::move(incs), z);

  if (j.contains("target_A")) {
    vint::TargetA a;
    a.dim = j["target_A"].at("dim").get<int>();
    if (a.dim > 0) a.bounds = box_from_json(j["target_A"].at("bounds"));
    int ucoord = j["target_A"].value("pi_u_coord", 0);
    for (const auto& c : sc.category.charts)
      a.pi[c.id] = [ucoord, dim = a.dim](const StratumPoint& p) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v(i) = p.u[ucoord + i];
        return v;
      };
    sc.target_a = std::move(a);
  }

  for (const auto& jf : j.value("forms", json::array()))
    sc.forms[jf.at("name").get<std::string>()] = form_from_json(jf);
  if (!sc.forms.count("one")) {
    json one = {{"name", "one"},
                {"degree", 0},
                {"terms", json::array({{{"coeff", "1"}, {"basis", json::array()}}})},
                {"flags", {{"in_omega", true}, {"gbf", true}}}};
    sc.forms["one"] = form_from_json(one);
  }
  return sc;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw err_io("cannot read scenario file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw err_schema(std::string("scenario JSON parse failure: ") + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace vfc::scenario
