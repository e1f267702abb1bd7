#include "bsn/scenario/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>

#include <fmt/format.h>

namespace bsn::scenario {

using nlohmann::json;

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Bnc: return "bnc";
    case Role::OnBody: return "on_body";
    case Role::InBody: return "in_body";
  }
  return "?";
}

Role role_from_string(std::string_view s) {
  for (auto r : {Role::Bnc, Role::OnBody, Role::InBody}) {
    if (to_string(r) == s) return r;
  }
  throw std::invalid_argument(fmt::format("unknown role '{}' (bnc, on_body, in_body)", s));
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Csma802154: return "csma802154";
    case Protocol::PbTdma: return "pbtdma";
    case Protocol::Smac: return "smac";
    case Protocol::Tbw: return "tbw";
    case Protocol::TbwAlwaysOn: return "tbw-always-on";
  }
  return "?";
}

Protocol protocol_from_string(std::string_view s) {
  for (auto p : kAllProtocols) {
    if (to_string(p) == s) return p;
  }
  throw std::invalid_argument(
      fmt::format("unknown protocol '{}' (csma802154, pbtdma, smac, tbw, tbw-always-on)", s));
}

bool PropagationSettings::operator==(const PropagationSettings& o) const {
  const auto& a = medium;
  const auto& b = o.medium;
  const bool same_matrix = (a.link_matrix == nullptr) == (b.link_matrix == nullptr) &&
                           (a.link_matrix == nullptr || *a.link_matrix == *b.link_matrix);
  return a.mode == b.mode && a.on_body == b.on_body && a.through_body == b.through_body &&
         a.min_distance_m == b.min_distance_m && a.capture_margin_db == b.capture_margin_db && same_matrix &&
         a.posture == b.posture && a.interference == b.interference && link_matrix_path == o.link_matrix_path &&
         cca_threshold_dbm == o.cca_threshold_dbm;
}

const PowerProfile& RoleProfiles::of(Role r) const {
  switch (r) {
    case Role::Bnc: return bnc;
    case Role::InBody: return in_body;
    case Role::OnBody: break;
  }
  return on_body;
}

double EnergyBudgets::of(Role r) const {
  switch (r) {
    case Role::Bnc: return bnc_j;
    case Role::InBody: return in_body_j;
    case Role::OnBody: break;
  }
  return on_body_j;
}

int Scenario::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return static_cast<int>(i);
  }
  throw ScenarioError("nodes", fmt::format("unknown node '{}'", id));
}

int Scenario::bnc_index() const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].role == Role::Bnc) return static_cast<int>(i);
  }
  throw ScenarioError("nodes", "no node has role bnc");
}

std::vector<std::uint64_t> Scenario::replication_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int i = 1; i <= replications; ++i) out.push_back(static_cast<std::uint64_t>(i));
  return out;
}

const ChannelConfig& Scenario::channel(const ChannelId& id) const {
  for (const auto& c : channels) {
    if (c.id == id) return c;
  }
  throw ScenarioError("channels", fmt::format("channel {} is not declared", to_string(id)));
}

const RoleProfiles& Scenario::profiles_for(Protocol protocol) const {
  const std::optional<RoleProfiles>* o = nullptr;
  switch (protocol) {
    case Protocol::Csma802154: o = &protocols.csma802154.power_profiles; break;
    case Protocol::PbTdma: o = &protocols.pbtdma.power_profiles; break;
    case Protocol::Smac: o = &protocols.smac.power_profiles; break;
    case Protocol::Tbw:
    case Protocol::TbwAlwaysOn: o = &protocols.tbw.power_profiles; break;
  }
  return (o && o->has_value()) ? **o : power_profiles;
}

// ---------------------------------------------------------------------------
// Parsing helpers

namespace {

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string idx(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ScenarioError(at(path, k), "unknown field");
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ScenarioError(at(path, key), "missing required field");
  return j.at(key);
}

double num(const json& v, const std::string& path) {
  if (!v.is_number()) throw ScenarioError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ScenarioError(path, "must be finite");
  return d;
}

double num_or(const json& j, const std::string& path, const char* key, double dflt) {
  return j.contains(key) ? num(j.at(key), at(path, key)) : dflt;
}

std::int64_t int_of(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ScenarioError(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::int64_t int_or(const json& j, const std::string& path, const char* key, std::int64_t dflt) {
  return j.contains(key) ? int_of(j.at(key), at(path, key)) : dflt;
}

bool bool_or(const json& j, const std::string& path, const char* key, bool dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_boolean()) throw ScenarioError(at(path, key), "expected true or false");
  return j.at(key).get<bool>();
}

std::string str(const json& v, const std::string& path) {
  if (!v.is_string()) throw ScenarioError(path, "expected a string");
  return v.get<std::string>();
}

std::string str_or(const json& j, const std::string& path, const char* key, std::string dflt) {
  return j.contains(key) ? str(j.at(key), at(path, key)) : dflt;
}

SimTime seconds(const json& v, const std::string& path) {
  const double s = num(v, path);
  if (s < 0) throw ScenarioError(path, "durations must be non-negative");
  return SimTime::from_seconds(s);
}

SimTime seconds_or(const json& j, const std::string& path, const char* key, SimTime dflt) {
  return j.contains(key) ? seconds(j.at(key), at(path, key)) : dflt;
}

SimTime ms_or(const json& j, const std::string& path, const char* key, SimTime dflt) {
  if (!j.contains(key)) return dflt;
  const double ms = num(j.at(key), at(path, key));
  if (ms < 0) throw ScenarioError(at(path, key), "durations must be non-negative");
  return SimTime::from_us(std::llround(ms * 1000.0));
}

SimTime us_or(const json& j, const std::string& path, const char* key, SimTime dflt) {
  if (!j.contains(key)) return dflt;
  const auto us = int_of(j.at(key), at(path, key));
  if (us < 0) throw ScenarioError(at(path, key), "durations must be non-negative");
  return SimTime::from_us(us);
}

double secs_out(SimTime t) { return t.seconds(); }
double ms_out(SimTime t) { return static_cast<double>(t.ticks()) / 1000.0; }

template <typename F>
auto wrap(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(path, e.what());
  }
}

ChannelId parse_channel(const json& j, const std::string& path) {
  check_keys(j, path, {"band", "phy", "data_rate_bps", "mtu_bytes"});
  ChannelId c;
  c.band = wrap(at(path, "band"), [&] { return band_from_string(str(require(j, path, "band"), at(path, "band"))); });
  const auto phy = int_or(j, path, "phy", 0);
  if (phy < 0 || phy > 255) throw ScenarioError(at(path, "phy"), "must be in [0, 255]");
  c.phy_technique = static_cast<std::uint8_t>(phy);
  return c;
}

json channel_json(const ChannelId& c) { return json{{"band", std::string(to_string(c.band))}, {"phy", c.phy_technique}}; }

Position parse_position(const json& v, const std::string& path) {
  if (!v.is_array() || (v.size() != 2 && v.size() != 3)) throw ScenarioError(path, "expected [x, y] or [x, y, z]");
  Position p;
  p.x = num(v[0], idx(path, 0));
  p.y = num(v[1], idx(path, 1));
  if (v.size() == 3) p.z = num(v[2], idx(path, 2));
  return p;
}

PathLossParams parse_path_loss(const json& j, const std::string& path, PathLossParams d) {
  check_keys(j, path, {"pl_d0_db", "d0_m", "exponent", "shadow_sigma_db"});
  d.pl_d0_db = num_or(j, path, "pl_d0_db", d.pl_d0_db);
  d.d0_m = num_or(j, path, "d0_m", d.d0_m);
  d.exponent = num_or(j, path, "exponent", d.exponent);
  d.shadow_sigma_db = num_or(j, path, "shadow_sigma_db", d.shadow_sigma_db);
  if (!(d.d0_m > 0)) throw ScenarioError(at(path, "d0_m"), "must be positive");
  if (d.exponent < 0) throw ScenarioError(at(path, "exponent"), "must be non-negative");
  if (d.shadow_sigma_db < 0) throw ScenarioError(at(path, "shadow_sigma_db"), "must be non-negative");
  return d;
}

json path_loss_json(const PathLossParams& p) {
  return json{{"pl_d0_db", p.pl_d0_db}, {"d0_m", p.d0_m}, {"exponent", p.exponent}, {"shadow_sigma_db", p.shadow_sigma_db}};
}

PowerProfile parse_profile(const json& j, const std::string& path, PowerProfile d) {
  check_keys(j, path, {"preset", "sleep_mw", "idle_listen_mw", "rx_mw", "tx_mw", "wakeup_rx_uw", "tx_dbm", "sensitivity_dbm"});
  if (j.contains("preset")) {
    const auto preset = str(j.at("preset"), at(path, "preset"));
    if (preset == "nrf2401") {
      d = PowerProfile::nrf2401();
    } else if (preset == "cc2420") {
      d = PowerProfile::cc2420();
    } else {
      throw ScenarioError(at(path, "preset"), fmt::format("unknown preset '{}' (nrf2401, cc2420)", preset));
    }
  }
  d.sleep_mw = num_or(j, path, "sleep_mw", d.sleep_mw);
  d.idle_listen_mw = num_or(j, path, "idle_listen_mw", d.idle_listen_mw);
  d.rx_mw = num_or(j, path, "rx_mw", d.rx_mw);
  d.tx_mw = num_or(j, path, "tx_mw", d.tx_mw);
  d.wakeup_rx_uw = num_or(j, path, "wakeup_rx_uw", d.wakeup_rx_uw);
  d.tx_dbm = num_or(j, path, "tx_dbm", d.tx_dbm);
  d.sensitivity_dbm = num_or(j, path, "sensitivity_dbm", d.sensitivity_dbm);
  wrap(path, [&] { validate(d); });
  return d;
}

json profile_json(const PowerProfile& p) {
  return json{{"sleep_mw", p.sleep_mw},         {"idle_listen_mw", p.idle_listen_mw}, {"rx_mw", p.rx_mw},
              {"tx_mw", p.tx_mw},               {"wakeup_rx_uw", p.wakeup_rx_uw},     {"tx_dbm", p.tx_dbm},
              {"sensitivity_dbm", p.sensitivity_dbm}};
}

RoleProfiles parse_roles(const json& j, const std::string& path, const RoleProfiles& d) {
  check_keys(j, path, {"on_body", "in_body", "bnc"});
  RoleProfiles r = d;
  if (j.contains("on_body")) r.on_body = parse_profile(j.at("on_body"), at(path, "on_body"), d.on_body);
  if (j.contains("in_body")) r.in_body = parse_profile(j.at("in_body"), at(path, "in_body"), d.in_body);
  if (j.contains("bnc")) r.bnc = parse_profile(j.at("bnc"), at(path, "bnc"), d.bnc);
  return r;
}

json roles_json(const RoleProfiles& r) {
  return json{{"on_body", profile_json(r.on_body)}, {"in_body", profile_json(r.in_body)}, {"bnc", profile_json(r.bnc)}};
}

std::vector<std::string> str_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ScenarioError(path, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(str(v[i], idx(path, i)));
  return out;
}

WakeupEntryConfig parse_wakeup_entry(const json& j, const std::string& path) {
  check_keys(j, path, {"node", "class", "period_s", "offset_s", "window_s"});
  WakeupEntryConfig e;
  e.node = str(require(j, path, "node"), at(path, "node"));
  e.cls = wrap(at(path, "class"), [&] { return traffic_class_from_string(str_or(j, path, "class", "NormalMedium")); });
  e.period = seconds(require(j, path, "period_s"), at(path, "period_s"));
  e.offset = seconds_or(j, path, "offset_s", SimTime::zero());
  e.window = seconds(require(j, path, "window_s"), at(path, "window_s"));
  return e;
}

json wakeup_entry_json(const WakeupEntryConfig& e) {
  return json{{"node", e.node},
              {"class", std::string(to_string(e.cls))},
              {"period_s", secs_out(e.period)},
              {"offset_s", secs_out(e.offset)},
              {"window_s", secs_out(e.window)}};
}

std::string_view to_string(tbw::TableAction a) {
  switch (a) {
    case tbw::TableAction::Insert: return "insert";
    case tbw::TableAction::Modify: return "modify";
    case tbw::TableAction::Remove: return "remove";
  }
  return "?";
}

tbw::TableAction table_action_from_string(std::string_view s) {
  for (auto a : {tbw::TableAction::Insert, tbw::TableAction::Modify, tbw::TableAction::Remove}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument(fmt::format("unknown table action '{}' (insert, modify, remove)", s));
}

}  // namespace

// ---------------------------------------------------------------------------

Scenario from_json(const json& j, const std::string& base_dir) {
  check_keys(j, "", {"name", "description", "horizon_s", "replications", "seeds", "nodes", "channels", "propagation",
                     "power_profiles", "energy", "mac", "protocols", "traffic", "on_demand", "wakeup_table",
                     "table_updates", "channel_map", "load_sweep"});
  Scenario s;
  s.name = str(require(j, "", "name"), "name");
  s.description = str_or(j, "", "description", "");
  s.horizon = seconds_or(j, "", "horizon_s", s.horizon);
  s.replications = static_cast<int>(int_or(j, "", "replications", 1));
  if (s.replications < 1) throw ScenarioError("replications", "must be at least 1");
  if (j.contains("seeds")) {
    const auto& a = j.at("seeds");
    if (!a.is_array()) throw ScenarioError("seeds", "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto v = int_of(a[i], idx("seeds", i));
      if (v < 0) throw ScenarioError(idx("seeds", i), "seeds are non-negative");
      s.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }

  const auto& nodes = require(j, "", "nodes");
  if (!nodes.is_array()) throw ScenarioError("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = idx("nodes", i);
    const auto& n = nodes[i];
    check_keys(n, p, {"id", "role", "site", "position", "interfaces"});
    NodeConfig nc;
    nc.id = str(require(n, p, "id"), at(p, "id"));
    nc.role = wrap(at(p, "role"), [&] { return role_from_string(str(require(n, p, "role"), at(p, "role"))); });
    nc.site = str_or(n, p, "site", nc.id);
    nc.position = parse_position(require(n, p, "position"), at(p, "position"));
    const auto& ifs = require(n, p, "interfaces");
    if (!ifs.is_array() || ifs.empty()) throw ScenarioError(at(p, "interfaces"), "expected a non-empty array");
    for (std::size_t k = 0; k < ifs.size(); ++k) nc.interfaces.push_back(parse_channel(ifs[k], idx(at(p, "interfaces"), k)));
    s.nodes.push_back(std::move(nc));
  }

  if (j.contains("channels")) {
    const auto& chs = j.at("channels");
    if (!chs.is_array()) throw ScenarioError("channels", "expected an array");
    for (std::size_t i = 0; i < chs.size(); ++i) {
      const std::string p = idx("channels", i);
      ChannelConfig c;
      c.id = parse_channel(chs[i], p);
      c.data_rate_bps = int_or(chs[i], p, "data_rate_bps", c.data_rate_bps);
      c.mtu_bytes = int_or(chs[i], p, "mtu_bytes", c.mtu_bytes);
      if (c.data_rate_bps <= 0) throw ScenarioError(at(p, "data_rate_bps"), "must be positive");
      if (c.mtu_bytes <= 0) throw ScenarioError(at(p, "mtu_bytes"), "must be positive");
      s.channels.push_back(c);
    }
  } else {
    // Default: every interface channel at 250 kb/s with a 128-byte MTU.
    std::set<ChannelId> seen;
    for (const auto& n : s.nodes) seen.insert(n.interfaces.begin(), n.interfaces.end());
    for (const auto& c : seen) s.channels.push_back(ChannelConfig{c});
  }

  if (j.contains("propagation")) {
    const std::string p = "propagation";
    const auto& pj = j.at(p);
    check_keys(pj, p, {"mode", "on_body", "through_body", "min_distance_m", "capture_margin_db", "link_matrix",
                       "posture", "interference", "cca_threshold_dbm"});
    auto& m = s.propagation.medium;
    const auto mode = str_or(pj, p, "mode", "geometric");
    if (mode == "geometric") {
      m.mode = LinkMode::Geometric;
    } else if (mode == "empirical") {
      m.mode = LinkMode::Empirical;
    } else {
      throw ScenarioError(at(p, "mode"), fmt::format("unknown mode '{}' (geometric, empirical)", mode));
    }
    if (pj.contains("on_body")) m.on_body = parse_path_loss(pj.at("on_body"), at(p, "on_body"), m.on_body);
    if (pj.contains("through_body")) {
      m.through_body = parse_path_loss(pj.at("through_body"), at(p, "through_body"), m.through_body);
    }
    m.min_distance_m = num_or(pj, p, "min_distance_m", m.min_distance_m);
    if (!(m.min_distance_m > 0)) throw ScenarioError(at(p, "min_distance_m"), "must be positive");
    m.capture_margin_db = num_or(pj, p, "capture_margin_db", m.capture_margin_db);
    m.posture = wrap(at(p, "posture"), [&] { return posture_from_string(str_or(pj, p, "posture", "Standing")); });
    s.propagation.cca_threshold_dbm = num_or(pj, p, "cca_threshold_dbm", s.propagation.cca_threshold_dbm);
    if (pj.contains("interference")) {
      const std::string ip = at(p, "interference");
      const auto& ij = pj.at("interference");
      check_keys(ij, ip, {"enabled", "pass_probability"});
      m.interference.enabled = bool_or(ij, ip, "enabled", false);
      m.interference.pass_probability = num_or(ij, ip, "pass_probability", m.interference.pass_probability);
      const double pp = m.interference.pass_probability;
      if (pp < 0 || pp > 1) throw ScenarioError(at(ip, "pass_probability"), "must be in [0, 1]");
    }
    if (pj.contains("link_matrix")) {
      s.propagation.link_matrix_path = str(pj.at("link_matrix"), at(p, "link_matrix"));
      std::filesystem::path file(s.propagation.link_matrix_path);
      if (file.is_relative()) file = std::filesystem::path(base_dir) / file;
      m.link_matrix = wrap(at(p, "link_matrix"), [&] {
        return std::make_shared<const LinkMatrix>(LinkMatrix::load_csv(file.string()));
      });
    }
  }

  if (j.contains("power_profiles")) s.power_profiles = parse_roles(j.at("power_profiles"), "power_profiles", s.power_profiles);
  if (j.contains("energy")) {
    const auto& ej = j.at("energy");
    check_keys(ej, "energy", {"on_body_j", "in_body_j", "bnc_j"});
    s.energy.on_body_j = num_or(ej, "energy", "on_body_j", s.energy.on_body_j);
    s.energy.in_body_j = num_or(ej, "energy", "in_body_j", s.energy.in_body_j);
    s.energy.bnc_j = num_or(ej, "energy", "bnc_j", s.energy.bnc_j);
    for (double v : {s.energy.on_body_j, s.energy.in_body_j, s.energy.bnc_j}) {
      if (!(v > 0)) throw ScenarioError("energy", "budgets must be positive");
    }
  }

  if (j.contains("mac")) {
    const std::string p = "mac";
    const auto& mj = j.at(p);
    check_keys(mj, p, {"ack_bytes", "beacon_bytes", "turnaround_us", "ack_wait_us", "cca_duration_us", "queue_capacity",
                       "bridge_capacity"});
    auto& m = s.mac;
    m.ack_bytes = int_or(mj, p, "ack_bytes", m.ack_bytes);
    m.beacon_bytes = int_or(mj, p, "beacon_bytes", m.beacon_bytes);
    m.turnaround = us_or(mj, p, "turnaround_us", m.turnaround);
    m.ack_wait = us_or(mj, p, "ack_wait_us", m.ack_wait);
    m.cca_duration = us_or(mj, p, "cca_duration_us", m.cca_duration);
    const auto q = int_or(mj, p, "queue_capacity", static_cast<std::int64_t>(m.queue_capacity));
    const auto b = int_or(mj, p, "bridge_capacity", static_cast<std::int64_t>(m.bridge_capacity));
    if (q < 1) throw ScenarioError(at(p, "queue_capacity"), "must be at least 1");
    if (b < 1) throw ScenarioError(at(p, "bridge_capacity"), "must be at least 1");
    m.queue_capacity = static_cast<std::size_t>(q);
    m.bridge_capacity = static_cast<std::size_t>(b);
    if (m.ack_bytes <= 0 || m.beacon_bytes <= 0) throw ScenarioError(p, "frame sizes must be positive");
  }

  if (j.contains("protocols")) {
    const std::string p = "protocols";
    const auto& pj = j.at(p);
    check_keys(pj, p, {"csma802154", "pbtdma", "smac", "tbw"});
    if (pj.contains("csma802154")) {
      const std::string q = at(p, "csma802154");
      const auto& cj = pj.at("csma802154");
      check_keys(cj, q, {"beacon_order", "superframe_order", "num_gts_slots", "mac_min_be", "a_max_be",
                         "mac_max_csma_backoffs", "contention_window", "mac_max_frame_retries", "gts_nodes",
                         "gts_expiry", "power_profiles"});
      auto& c = s.protocols.csma802154;
      c.superframe.beacon_order = static_cast<int>(int_or(cj, q, "beacon_order", c.superframe.beacon_order));
      c.superframe.superframe_order = static_cast<int>(int_or(cj, q, "superframe_order", c.superframe.superframe_order));
      c.superframe.num_gts_slots = static_cast<int>(int_or(cj, q, "num_gts_slots", c.superframe.num_gts_slots));
      c.csma.mac_min_be = static_cast<int>(int_or(cj, q, "mac_min_be", c.csma.mac_min_be));
      c.csma.a_max_be = static_cast<int>(int_or(cj, q, "a_max_be", c.csma.a_max_be));
      c.csma.mac_max_csma_backoffs = static_cast<int>(int_or(cj, q, "mac_max_csma_backoffs", c.csma.mac_max_csma_backoffs));
      c.csma.contention_window = static_cast<int>(int_or(cj, q, "contention_window", c.csma.contention_window));
      c.csma.mac_max_frame_retries = static_cast<int>(int_or(cj, q, "mac_max_frame_retries", c.csma.mac_max_frame_retries));
      if (cj.contains("gts_nodes")) c.gts_nodes = str_list(cj.at("gts_nodes"), at(q, "gts_nodes"));
      c.gts_expiry = static_cast<int>(int_or(cj, q, "gts_expiry", c.gts_expiry));
      if (cj.contains("power_profiles")) {
        c.power_profiles = parse_roles(cj.at("power_profiles"), at(q, "power_profiles"), s.power_profiles);
      }
      wrap(q, [&] { mac::validate(c.superframe); });
      if (c.csma.mac_min_be < 0 || c.csma.a_max_be < c.csma.mac_min_be || c.csma.a_max_be > 8) {
        throw ScenarioError(q, "need 0 <= mac_min_be <= a_max_be <= 8");
      }
      if (c.csma.mac_max_csma_backoffs < 0 || c.csma.contention_window < 1 || c.csma.mac_max_frame_retries < 0) {
        throw ScenarioError(q, "CSMA counters out of range");
      }
      if (c.gts_expiry < 1) throw ScenarioError(at(q, "gts_expiry"), "must be at least 1");
    }
    if (pj.contains("pbtdma")) {
      const std::string q = at(p, "pbtdma");
      const auto& tj = pj.at("pbtdma");
      check_keys(tj, q, {"slot_ms", "preamble_ms", "slot_guard_ms", "power_profiles"});
      auto& t = s.protocols.pbtdma;
      t.slot = ms_or(tj, q, "slot_ms", t.slot);
      t.preamble = ms_or(tj, q, "preamble_ms", t.preamble);
      t.slot_guard = ms_or(tj, q, "slot_guard_ms", t.slot_guard);
      if (t.slot <= SimTime::zero() || t.preamble <= SimTime::zero()) throw ScenarioError(q, "slot and preamble must be positive");
      if (tj.contains("power_profiles")) {
        t.power_profiles = parse_roles(tj.at("power_profiles"), at(q, "power_profiles"), s.power_profiles);
      }
    }
    if (pj.contains("smac")) {
      const std::string q = at(p, "smac");
      const auto& mj = pj.at("smac");
      check_keys(mj, q, {"cycle_ms", "listen_fraction", "contention_slots", "max_retries", "power_profiles"});
      auto& m = s.protocols.smac;
      m.duty.cycle = ms_or(mj, q, "cycle_ms", m.duty.cycle);
      m.duty.listen_fraction = num_or(mj, q, "listen_fraction", m.duty.listen_fraction);
      m.contention_slots = static_cast<int>(int_or(mj, q, "contention_slots", m.contention_slots));
      m.max_retries = static_cast<int>(int_or(mj, q, "max_retries", m.max_retries));
      if (mj.contains("power_profiles")) {
        m.power_profiles = parse_roles(mj.at("power_profiles"), at(q, "power_profiles"), s.power_profiles);
      }
      wrap(q, [&] { mac::validate(m.duty); });
      if (m.contention_slots < 1 || m.max_retries < 0) throw ScenarioError(q, "contention parameters out of range");
    }
    if (pj.contains("tbw")) {
      const std::string q = at(p, "tbw");
      const auto& bj = pj.at("tbw");
      check_keys(bj, q, {"guard_ms", "default_window_ms", "max_retries", "poll_timeout_ms", "wakeup", "power_profiles"});
      auto& b = s.protocols.tbw;
      b.guard = ms_or(bj, q, "guard_ms", b.guard);
      b.default_window = ms_or(bj, q, "default_window_ms", b.default_window);
      b.max_retries = static_cast<int>(int_or(bj, q, "max_retries", b.max_retries));
      b.poll_timeout = ms_or(bj, q, "poll_timeout_ms", b.poll_timeout);
      if (bj.contains("wakeup")) {
        const std::string w = at(q, "wakeup");
        const auto& wj = bj.at("wakeup");
        check_keys(wj, w, {"signal_ms", "retry_timeout_ms", "retry_jitter_ms", "max_tries", "tx_dbm", "sensitivity_dbm",
                           "signal_loss"});
        auto& r = b.wakeup;
        r.signal_duration = ms_or(wj, w, "signal_ms", r.signal_duration);
        r.retry_timeout = ms_or(wj, w, "retry_timeout_ms", r.retry_timeout);
        r.retry_jitter = ms_or(wj, w, "retry_jitter_ms", r.retry_jitter);
        r.max_tries = static_cast<int>(int_or(wj, w, "max_tries", r.max_tries));
        r.tx_dbm = num_or(wj, w, "tx_dbm", r.tx_dbm);
        r.sensitivity_dbm = num_or(wj, w, "sensitivity_dbm", r.sensitivity_dbm);
        r.signal_loss = num_or(wj, w, "signal_loss", r.signal_loss);
        if (r.signal_duration <= SimTime::zero()) throw ScenarioError(at(w, "signal_ms"), "must be positive");
        if (r.retry_timeout <= r.signal_duration) {
          throw ScenarioError(at(w, "retry_timeout_ms"), "must exceed the signal duration");
        }
        if (r.max_tries < 1) throw ScenarioError(at(w, "max_tries"), "must be at least 1");
        if (r.signal_loss < 0 || r.signal_loss > 1) throw ScenarioError(at(w, "signal_loss"), "must be in [0, 1]");
      }
      if (bj.contains("power_profiles")) {
        b.power_profiles = parse_roles(bj.at("power_profiles"), at(q, "power_profiles"), s.power_profiles);
      }
      if (b.default_window <= SimTime::zero()) throw ScenarioError(at(q, "default_window_ms"), "must be positive");
      if (b.max_retries < 0) throw ScenarioError(at(q, "max_retries"), "must be non-negative");
    }
  }

  if (j.contains("traffic")) {
    const auto& tj = j.at("traffic");
    if (!tj.is_array()) throw ScenarioError("traffic", "expected an array");
    for (std::size_t i = 0; i < tj.size(); ++i) {
      const std::string p = idx("traffic", i);
      const auto& t = tj[i];
      check_keys(t, p, {"node", "dst", "class", "period_s", "rate_per_s", "payload_bytes", "start_offset_s"});
      TrafficEntry e;
      e.node = str(require(t, p, "node"), at(p, "node"));
      e.dst = str_or(t, p, "dst", "");
      e.cls = wrap(at(p, "class"), [&] { return traffic_class_from_string(str(require(t, p, "class"), at(p, "class"))); });
      e.period = seconds_or(t, p, "period_s", SimTime::zero());
      e.rate_per_s = num_or(t, p, "rate_per_s", 0.0);
      e.payload_bytes = int_or(t, p, "payload_bytes", e.payload_bytes);
      e.start_offset = seconds_or(t, p, "start_offset_s", SimTime::zero());
      s.traffic.push_back(e);
    }
  }

  if (j.contains("on_demand")) {
    const auto& oj = j.at("on_demand");
    if (!oj.is_array()) throw ScenarioError("on_demand", "expected an array");
    for (std::size_t i = 0; i < oj.size(); ++i) {
      const std::string p = idx("on_demand", i);
      const auto& o = oj[i];
      check_keys(o, p, {"at_s", "target", "mode", "duration_s", "stream_period_s", "addressing"});
      OnDemandEntry e;
      e.at = seconds(require(o, p, "at_s"), at(p, "at_s"));
      e.target = str(require(o, p, "target"), at(p, "target"));
      e.mode = wrap(at(p, "mode"), [&] { return on_demand_mode_from_string(str_or(o, p, "mode", "NonContinuous")); });
      e.duration = seconds_or(o, p, "duration_s", SimTime::zero());
      e.stream_period = seconds_or(o, p, "stream_period_s", e.stream_period);
      e.addressing = wrap(at(p, "addressing"), [&] { return tbw::addressing_from_string(str_or(o, p, "addressing", "Tone")); });
      if (e.mode == OnDemandMode::Continuous && (e.duration <= SimTime::zero() || e.stream_period <= SimTime::zero())) {
        throw ScenarioError(p, "continuous requests need a positive duration and stream period");
      }
      s.on_demand.push_back(e);
    }
  }

  if (j.contains("wakeup_table")) {
    const auto& wj = j.at("wakeup_table");
    if (!wj.is_array()) throw ScenarioError("wakeup_table", "expected an array");
    for (std::size_t i = 0; i < wj.size(); ++i) s.wakeup_table.push_back(parse_wakeup_entry(wj[i], idx("wakeup_table", i)));
  }

  if (j.contains("table_updates")) {
    const auto& uj = j.at("table_updates");
    if (!uj.is_array()) throw ScenarioError("table_updates", "expected an array");
    for (std::size_t i = 0; i < uj.size(); ++i) {
      const std::string p = idx("table_updates", i);
      check_keys(uj[i], p, {"at_s", "action", "entry"});
      TableUpdateConfig u;
      u.at = seconds(require(uj[i], p, "at_s"), at(p, "at_s"));
      u.action = wrap(at(p, "action"), [&] { return table_action_from_string(str(require(uj[i], p, "action"), at(p, "action"))); });
      u.entry = parse_wakeup_entry(require(uj[i], p, "entry"), at(p, "entry"));
      s.table_updates.push_back(u);
    }
  }

  if (j.contains("channel_map")) {
    const auto& cj = j.at("channel_map");
    if (!cj.is_array()) throw ScenarioError("channel_map", "expected an array");
    for (std::size_t i = 0; i < cj.size(); ++i) {
      const std::string p = idx("channel_map", i);
      const auto& r = cj[i];
      check_keys(r, p, {"network", "channel", "nodes", "connection_id", "connection_type", "src", "dst"});
      ChannelMapEntry e;
      e.network = static_cast<int>(int_or(r, p, "network", 0));
      e.channel = parse_channel(require(r, p, "channel"), at(p, "channel"));
      e.nodes = str_list(require(r, p, "nodes"), at(p, "nodes"));
      e.connection_id = static_cast<int>(int_of(require(r, p, "connection_id"), at(p, "connection_id")));
      e.type = wrap(at(p, "connection_type"), [&] {
        return bridge::connection_type_from_string(str_or(r, p, "connection_type", "Contention"));
      });
      e.src = str(require(r, p, "src"), at(p, "src"));
      e.dst = str(require(r, p, "dst"), at(p, "dst"));
      s.channel_map.push_back(e);
    }
  }

  if (j.contains("load_sweep")) {
    const auto& lj = j.at("load_sweep");
    if (!lj.is_array()) throw ScenarioError("load_sweep", "expected an array");
    for (std::size_t i = 0; i < lj.size(); ++i) {
      const double f = num(lj[i], idx("load_sweep", i));
      if (!(f > 0)) throw ScenarioError(idx("load_sweep", i), "load factors must be positive");
      s.load_sweep.push_back(f);
    }
  }

  validate(s);
  return s;
}

Scenario load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "cannot open scenario file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(path, e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  if (!s.description.empty()) j["description"] = s.description;
  j["horizon_s"] = secs_out(s.horizon);
  j["replications"] = s.replications;
  if (!s.seeds.empty()) j["seeds"] = s.seeds;

  json nodes = json::array();
  for (const auto& n : s.nodes) {
    json ifs = json::array();
    for (const auto& c : n.interfaces) ifs.push_back(channel_json(c));
    nodes.push_back(json{{"id", n.id},
                         {"role", std::string(to_string(n.role))},
                         {"site", n.site},
                         {"position", {n.position.x, n.position.y, n.position.z}},
                         {"interfaces", ifs}});
  }
  j["nodes"] = nodes;

  json chs = json::array();
  for (const auto& c : s.channels) {
    json cj = channel_json(c.id);
    cj["data_rate_bps"] = c.data_rate_bps;
    cj["mtu_bytes"] = c.mtu_bytes;
    chs.push_back(cj);
  }
  j["channels"] = chs;

  const auto& m = s.propagation.medium;
  json pj{{"mode", m.mode == LinkMode::Geometric ? "geometric" : "empirical"},
          {"on_body", path_loss_json(m.on_body)},
          {"through_body", path_loss_json(m.through_body)},
          {"min_distance_m", m.min_distance_m},
          {"capture_margin_db", m.capture_margin_db},
          {"posture", std::string(to_string(m.posture))},
          {"interference", {{"enabled", m.interference.enabled}, {"pass_probability", m.interference.pass_probability}}},
          {"cca_threshold_dbm", s.propagation.cca_threshold_dbm}};
  if (!s.propagation.link_matrix_path.empty()) pj["link_matrix"] = s.propagation.link_matrix_path;
  j["propagation"] = pj;

  j["power_profiles"] = roles_json(s.power_profiles);
  j["energy"] = {{"on_body_j", s.energy.on_body_j}, {"in_body_j", s.energy.in_body_j}, {"bnc_j", s.energy.bnc_j}};
  j["mac"] = {{"ack_bytes", s.mac.ack_bytes},
              {"beacon_bytes", s.mac.beacon_bytes},
              {"turnaround_us", s.mac.turnaround.ticks()},
              {"ack_wait_us", s.mac.ack_wait.ticks()},
              {"cca_duration_us", s.mac.cca_duration.ticks()},
              {"queue_capacity", s.mac.queue_capacity},
              {"bridge_capacity", s.mac.bridge_capacity}};

  const auto& c = s.protocols.csma802154;
  json cj{{"beacon_order", c.superframe.beacon_order},
          {"superframe_order", c.superframe.superframe_order},
          {"num_gts_slots", c.superframe.num_gts_slots},
          {"mac_min_be", c.csma.mac_min_be},
          {"a_max_be", c.csma.a_max_be},
          {"mac_max_csma_backoffs", c.csma.mac_max_csma_backoffs},
          {"contention_window", c.csma.contention_window},
          {"mac_max_frame_retries", c.csma.mac_max_frame_retries},
          {"gts_nodes", c.gts_nodes},
          {"gts_expiry", c.gts_expiry}};
  if (c.power_profiles) cj["power_profiles"] = roles_json(*c.power_profiles);
  const auto& t = s.protocols.pbtdma;
  json tj{{"slot_ms", ms_out(t.slot)}, {"preamble_ms", ms_out(t.preamble)}, {"slot_guard_ms", ms_out(t.slot_guard)}};
  if (t.power_profiles) tj["power_profiles"] = roles_json(*t.power_profiles);
  const auto& sm = s.protocols.smac;
  json sj{{"cycle_ms", ms_out(sm.duty.cycle)},
          {"listen_fraction", sm.duty.listen_fraction},
          {"contention_slots", sm.contention_slots},
          {"max_retries", sm.max_retries}};
  if (sm.power_profiles) sj["power_profiles"] = roles_json(*sm.power_profiles);
  const auto& b = s.protocols.tbw;
  const auto& w = b.wakeup;
  json bj{{"guard_ms", ms_out(b.guard)},
          {"default_window_ms", ms_out(b.default_window)},
          {"max_retries", b.max_retries},
          {"poll_timeout_ms", ms_out(b.poll_timeout)},
          {"wakeup",
           {{"signal_ms", ms_out(w.signal_duration)},
            {"retry_timeout_ms", ms_out(w.retry_timeout)},
            {"retry_jitter_ms", ms_out(w.retry_jitter)},
            {"max_tries", w.max_tries},
            {"tx_dbm", w.tx_dbm},
            {"sensitivity_dbm", w.sensitivity_dbm},
            {"signal_loss", w.signal_loss}}}};
  if (b.power_profiles) bj["power_profiles"] = roles_json(*b.power_profiles);
  j["protocols"] = {{"csma802154", cj}, {"pbtdma", tj}, {"smac", sj}, {"tbw", bj}};

  json tr = json::array();
  for (const auto& e : s.traffic) {
    json ej{{"node", e.node}, {"class", std::string(to_string(e.cls))}, {"payload_bytes", e.payload_bytes},
            {"start_offset_s", secs_out(e.start_offset)}};
    if (!e.dst.empty()) ej["dst"] = e.dst;
    if (e.cls == TrafficClass::Emergency) {
      ej["rate_per_s"] = e.rate_per_s;
    } else {
      ej["period_s"] = secs_out(e.period);
    }
    tr.push_back(ej);
  }
  j["traffic"] = tr;

  json od = json::array();
  for (const auto& e : s.on_demand) {
    od.push_back(json{{"at_s", secs_out(e.at)},
                      {"target", e.target},
                      {"mode", std::string(to_string(e.mode))},
                      {"duration_s", secs_out(e.duration)},
                      {"stream_period_s", secs_out(e.stream_period)},
                      {"addressing", std::string(tbw::to_string(e.addressing))}});
  }
  j["on_demand"] = od;

  json wt = json::array();
  for (const auto& e : s.wakeup_table) wt.push_back(wakeup_entry_json(e));
  j["wakeup_table"] = wt;
  json tu = json::array();
  for (const auto& u : s.table_updates) {
    tu.push_back(json{{"at_s", secs_out(u.at)}, {"action", std::string(to_string(u.action))}, {"entry", wakeup_entry_json(u.entry)}});
  }
  j["table_updates"] = tu;

  json cm = json::array();
  for (const auto& e : s.channel_map) {
    cm.push_back(json{{"network", e.network},
                      {"channel", channel_json(e.channel)},
                      {"nodes", e.nodes},
                      {"connection_id", e.connection_id},
                      {"connection_type", std::string(bridge::to_string(e.type))},
                      {"src", e.src},
                      {"dst", e.dst}});
  }
  j["channel_map"] = cm;
  j["load_sweep"] = s.load_sweep;
  return j;
}

// ---------------------------------------------------------------------------

bridge::ChannelMapTable build_channel_map(const Scenario& s) {
  bridge::ChannelMapTable table;
  if (!s.channel_map.empty()) {
    for (std::size_t i = 0; i < s.channel_map.size(); ++i) {
      const auto& e = s.channel_map[i];
      const std::string p = idx("channel_map", i);
      bridge::ChannelMapRecord r;
      r.network_info = e.network;
      r.channel = e.channel;
      for (const auto& n : e.nodes) r.node_ids.push_back(s.node_index(n));
      r.connection_id = e.connection_id;
      r.connection_type = e.type;
      r.src = s.node_index(e.src);
      r.dst = s.node_index(e.dst);
      table = wrap(p, [&] { return bridge::register_record(table, r); });
    }
    return table;
  }
  const int bnc = s.bnc_index();
  int conn = 1;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    if (static_cast<int>(i) == bnc) continue;
    for (const auto& c : s.nodes[i].interfaces) {
      bridge::ChannelMapRecord r;
      r.channel = c;
      r.node_ids = {static_cast<int>(i), bnc};
      r.connection_id = conn++;
      r.src = static_cast<int>(i);
      r.dst = bnc;
      table = bridge::register_record(table, r);
    }
  }
  return table;
}

bridge::RouteContext route_context(const Scenario& s) {
  bridge::RouteContext ctx;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& n = s.nodes[i];
    if (n.role == Role::InBody) ctx.in_body.insert(static_cast<int>(i));
    // The coordinator hosts the bridging function even with a single radio,
    // so implants may always reach it directly.
    std::set<ChannelId> distinct(n.interfaces.begin(), n.interfaces.end());
    if (distinct.size() >= 2 || n.role == Role::Bnc) ctx.bridges.push_back(static_cast<int>(i));
  }
  return ctx;
}

void validate(const Scenario& s) {
  if (s.nodes.empty()) throw ScenarioError("nodes", "at least one node is required");
  if (!(s.horizon > SimTime::zero())) throw ScenarioError("horizon_s", "must be positive");
  int bncs = 0;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& n = s.nodes[i];
    const std::string p = idx("nodes", i);
    if (n.id.empty()) throw ScenarioError(at(p, "id"), "must not be empty");
    if (!ids.insert(n.id).second) throw ScenarioError(at(p, "id"), fmt::format("duplicate node id '{}'", n.id));
    if (n.role == Role::Bnc) ++bncs;
    for (std::size_t k = 0; k < n.interfaces.size(); ++k) {
      const auto& c = n.interfaces[k];
      if (std::none_of(s.channels.begin(), s.channels.end(), [&](const auto& ch) { return ch.id == c; })) {
        throw ScenarioError(idx(at(p, "interfaces"), k), fmt::format("channel {} is not declared", to_string(c)));
      }
    }
    if (n.role != Role::Bnc && n.interfaces.size() != 1) {
      throw ScenarioError(at(p, "interfaces"), "sensor nodes have exactly one data interface; only the BNC bridges");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (distance(s.nodes[k].position, n.position) < s.propagation.medium.min_distance_m) {
        throw ScenarioError(at(p, "position"), fmt::format("degenerate geometry: closer than min_distance_m to '{}'", s.nodes[k].id));
      }
    }
  }
  if (bncs != 1) throw ScenarioError("nodes", fmt::format("exactly one node must have role bnc (found {})", bncs));
  const int bnc = s.bnc_index();
  const std::set<ChannelId> bnc_ifs(s.nodes[bnc].interfaces.begin(), s.nodes[bnc].interfaces.end());
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    for (const auto& c : s.nodes[i].interfaces) {
      if (!bnc_ifs.contains(c)) {
        throw ScenarioError(idx("nodes", i) + ".interfaces",
                            fmt::format("star topology: the BNC has no interface on {}", to_string(c)));
      }
    }
  }
  std::set<std::int64_t> mtus;
  for (const auto& c : s.channels) mtus.insert(c.mtu_bytes);
  if (mtus.size() > 1) throw ScenarioError("channels", "all channels must share one MTU (no fragmentation)");

  const auto& prop = s.propagation.medium;
  if (prop.mode == LinkMode::Empirical && !prop.link_matrix) {
    throw ScenarioError("propagation.link_matrix", "empirical mode needs a link matrix");
  }

  const auto table = build_channel_map(s);
  const auto ctx = route_context(s);
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    if (!table.on_any_channel(static_cast<int>(i))) {
      throw ScenarioError(idx("nodes", i), "node is not on any channel of the bridging table");
    }
  }

  const std::int64_t mtu = s.channels.empty() ? 128 : *mtus.begin();
  for (std::size_t i = 0; i < s.traffic.size(); ++i) {
    const auto& e = s.traffic[i];
    const std::string p = idx("traffic", i);
    const int src = s.node_index(e.node);
    if (src == bnc) throw ScenarioError(at(p, "node"), "the BNC does not originate traffic");
    const int dst = e.dst.empty() ? bnc : s.node_index(e.dst);
    if (dst == src) throw ScenarioError(at(p, "dst"), "source and destination coincide");
    TrafficSpec spec{src, dst, e.cls, e.period, e.rate_per_s, e.payload_bytes, e.start_offset};
    wrap(p, [&] { validate(spec); });
    if (is_on_demand(e.cls)) throw ScenarioError(at(p, "class"), "on-demand traffic is issued through on_demand");
    if (e.payload_bytes > mtu) throw ScenarioError(at(p, "payload_bytes"), "exceeds the channel MTU");
    const auto route = bridge::lookup_route(table, ctx, src, dst);
    if (route.kind == bridge::RouteKind::NoRoute) {
      throw ScenarioError(p, fmt::format("no route from '{}' to '{}'", e.node, e.dst.empty() ? s.nodes[bnc].id : e.dst));
    }
    if (route.kind == bridge::RouteKind::Direct && dst != bnc) {
      throw ScenarioError(p, "star topology: peer traffic must be relayed by the BNC");
    }
    if (route.kind == bridge::RouteKind::ViaBridge && route.bridge != bnc) {
      throw ScenarioError(p, "only the BNC relays frames");
    }
    if (route.kind == bridge::RouteKind::ViaBridge) {
      const auto& ifs = s.nodes[static_cast<std::size_t>(bnc)].interfaces;
      if (std::set<ChannelId>(ifs.begin(), ifs.end()).size() < 2) {
        throw ScenarioError(p, "relaying needs a BNC with two distinct interfaces");
      }
    }
  }

  for (std::size_t i = 0; i < s.on_demand.size(); ++i) {
    const int t = s.node_index(s.on_demand[i].target);
    if (t == bnc) throw ScenarioError(idx("on_demand", i) + ".target", "the BNC cannot be polled");
    if (s.on_demand[i].at >= s.horizon) throw ScenarioError(idx("on_demand", i) + ".at_s", "after the horizon");
  }

  auto check_entry = [&](const WakeupEntryConfig& e, const std::string& p) {
    const int n = s.node_index(e.node);
    if (n == bnc) throw ScenarioError(at(p, "node"), "the BNC has no wakeup entry");
    tbw::WakeupEntry we{n, e.period, e.offset, e.window, e.cls};
    wrap(p, [&] { tbw::validate(we); });
  };
  tbw::WakeupTable wt;
  for (std::size_t i = 0; i < s.wakeup_table.size(); ++i) {
    const auto& e = s.wakeup_table[i];
    const std::string p = idx("wakeup_table", i);
    check_entry(e, p);
    wt = wrap(p, [&] {
      return tbw::table_update(wt, tbw::WakeupEntry{s.node_index(e.node), e.period, e.offset, e.window, e.cls},
                               tbw::TableAction::Insert);
    });
  }
  for (std::size_t i = 0; i < s.table_updates.size(); ++i) {
    check_entry(s.table_updates[i].entry, idx("table_updates", i) + ".entry");
  }
  for (const auto& g : s.protocols.csma802154.gts_nodes) {
    if (s.node_index(g) == bnc) throw ScenarioError("protocols.csma802154.gts_nodes", "the BNC owns no GTS");
  }
}

Scenario scale_load(const Scenario& s, double factor) {
  if (!(factor > 0)) throw std::invalid_argument("load factor must be positive");
  Scenario out = s;
  for (auto& t : out.traffic) {
    if (t.cls == TrafficClass::Emergency) {
      t.rate_per_s *= factor;
    } else {
      t.period = SimTime{std::max<std::int64_t>(1, std::llround(static_cast<double>(t.period.ticks()) / factor))};
    }
  }
  return out;
}

}  // namespace bsn::scenario
