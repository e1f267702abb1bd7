#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bsn/scenario/scenario.hpp"

namespace bsn::testing {

inline std::string scenario_path(const std::string& name) { return std::string(BSN_SCENARIO_DIR) + "/" + name + ".json"; }

inline scenario::Scenario bundled(const std::string& name) { return scenario::load(scenario_path(name)); }

inline nlohmann::json node(const std::string& id, const std::string& role, const std::string& site, double x, double y,
                           std::vector<std::string> bands = {"ISM_2_4"}) {
  nlohmann::json ifs = nlohmann::json::array();
  for (const auto& b : bands) ifs.push_back({{"band", b}, {"phy", 0}});
  return {{"id", id}, {"role", role}, {"site", site}, {"position", {x, y}}, {"interfaces", ifs}};
}

/// Deterministic star: a BNC at the origin and `count` on-body members on a
/// 0.3 m circle, shadowing off, generous batteries.
inline nlohmann::json star(int count, const std::string& band = "ISM_2_4", const std::string& role = "on_body") {
  nlohmann::json j;
  j["name"] = "test_star";
  j["horizon_s"] = 10;
  j["replications"] = 1;
  j["nodes"] = nlohmann::json::array({node("bnc", "bnc", "waist", 0.0, 0.0, {band})});
  for (int i = 1; i <= count; ++i) {
    const double a = 6.283185307179586 * i / count;
    j["nodes"].push_back(node("n" + std::to_string(i), role, "site" + std::to_string(i), 0.3 * std::cos(a),
                              0.3 * std::sin(a), {band}));
  }
  j["channels"] = nlohmann::json::array({{{"band", band}, {"phy", 0}}});
  j["propagation"] = {{"mode", "geometric"},
                      {"on_body", {{"shadow_sigma_db", 0.0}}},
                      {"through_body", {{"shadow_sigma_db", 0.0}}}};
  j["energy"] = {{"on_body_j", 1000.0}, {"in_body_j", 1000.0}, {"bnc_j", 100000.0}};
  j["traffic"] = nlohmann::json::array();
  return j;
}

inline scenario::Scenario make(const nlohmann::json& j) { return scenario::from_json(j, BSN_SCENARIO_DIR); }

}  // namespace bsn::testing
