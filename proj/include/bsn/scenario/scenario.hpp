#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bsn/bridge/bridge.hpp"
#include "bsn/energy/energy.hpp"
#include "bsn/mac/baselines.hpp"
#include "bsn/phy/medium.hpp"
#include "bsn/tbw/wakeup.hpp"
#include "bsn/traffic/traffic.hpp"

namespace bsn::scenario {

/// Thrown for any malformed or inconsistent scenario. The message starts
/// with the offending field path, e.g. "nodes[3].position: ...".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class Role : std::uint8_t { Bnc, OnBody, InBody };
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

enum class Protocol : std::uint8_t { Csma802154, PbTdma, Smac, Tbw, TbwAlwaysOn };
inline constexpr Protocol kAllProtocols[] = {Protocol::Csma802154, Protocol::PbTdma, Protocol::Smac, Protocol::Tbw,
                                             Protocol::TbwAlwaysOn};
std::string_view to_string(Protocol p);
/// Throws std::invalid_argument listing the known names.
Protocol protocol_from_string(std::string_view s);
constexpr bool uses_wakeup_radio(Protocol p) { return p == Protocol::Tbw || p == Protocol::TbwAlwaysOn; }

struct NodeConfig {
  std::string id;
  Role role = Role::OnBody;
  std::string site;
  Position position;
  std::vector<ChannelId> interfaces;

  bool operator==(const NodeConfig&) const = default;
};

struct ChannelConfig {
  ChannelId id;
  std::int64_t data_rate_bps = 250'000;
  std::int64_t mtu_bytes = 128;

  bool operator==(const ChannelConfig&) const = default;
};

struct PropagationSettings {
  PropagationConfig medium;
  std::string link_matrix_path;  // as written in the file; resolved against the scenario directory
  double cca_threshold_dbm = -85.0;

  bool operator==(const PropagationSettings& o) const;
};

/// Power draw and battery budget per node role.
struct RoleProfiles {
  PowerProfile on_body = PowerProfile::nrf2401();
  PowerProfile in_body = PowerProfile::nrf2401();
  PowerProfile bnc = PowerProfile::nrf2401();

  bool operator==(const RoleProfiles&) const = default;
  const PowerProfile& of(Role r) const;
};

struct EnergyBudgets {
  double on_body_j = 5.0;
  double in_body_j = 5.0;
  double bnc_j = 1000.0;

  bool operator==(const EnergyBudgets&) const = default;
  double of(Role r) const;
};

/// Frame sizes and timing shared by every MAC.
struct MacCommon {
  std::int64_t ack_bytes = 11;
  std::int64_t beacon_bytes = 24;
  SimTime turnaround = SimTime::from_us(192);
  SimTime ack_wait = SimTime::from_us(864);
  SimTime cca_duration = SimTime::from_us(128);
  std::size_t queue_capacity = 16;
  std::size_t bridge_capacity = 16;

  bool operator==(const MacCommon&) const = default;
};

struct CsmaProtocolConfig {
  mac::SuperframeConfig superframe;
  mac::CsmaParams csma;
  std::vector<std::string> gts_nodes;
  int gts_expiry = 4;
  std::optional<RoleProfiles> power_profiles;

  bool operator==(const CsmaProtocolConfig&) const = default;
};

struct TdmaProtocolConfig {
  SimTime slot = SimTime::from_ms(5);
  SimTime preamble = SimTime::from_ms(5);
  /// Listening time the BNC gives a silent slot before sleeping.
  SimTime slot_guard = SimTime::from_ms(1);
  std::optional<RoleProfiles> power_profiles;

  bool operator==(const TdmaProtocolConfig&) const = default;
};

struct SmacProtocolConfig {
  mac::SmacConfig duty;
  int contention_slots = 32;
  int max_retries = 3;
  std::optional<RoleProfiles> power_profiles;

  bool operator==(const SmacProtocolConfig&) const = default;
};

struct TbwProtocolConfig {
  SimTime guard = SimTime::from_ms(2);
  /// Window given to nodes that have periodic traffic but no table entry.
  SimTime default_window = SimTime::from_ms(20);
  int max_retries = 3;
  /// How long a node stays awake for an expected on-demand poll.
  SimTime poll_timeout = SimTime::from_ms(100);
  tbw::WakeupRadioConfig wakeup;
  std::optional<RoleProfiles> power_profiles;

  bool operator==(const TbwProtocolConfig&) const = default;
};

struct ProtocolConfigs {
  CsmaProtocolConfig csma802154;
  TdmaProtocolConfig pbtdma;
  SmacProtocolConfig smac;
  TbwProtocolConfig tbw;

  bool operator==(const ProtocolConfigs&) const = default;
};

struct TrafficEntry {
  std::string node;
  std::string dst;  // empty: the BNC
  TrafficClass cls = TrafficClass::NormalMedium;
  SimTime period{};
  double rate_per_s = 0.0;
  std::int64_t payload_bytes = 128;
  SimTime start_offset{};

  bool operator==(const TrafficEntry&) const = default;
};

struct OnDemandEntry {
  SimTime at{};
  std::string target;
  OnDemandMode mode = OnDemandMode::NonContinuous;
  SimTime duration{};
  SimTime stream_period = SimTime::from_ms(1000);
  tbw::Addressing addressing = tbw::Addressing::Tone;

  bool operator==(const OnDemandEntry&) const = default;
};

struct WakeupEntryConfig {
  std::string node;
  TrafficClass cls = TrafficClass::NormalMedium;
  SimTime period{};
  SimTime offset{};
  SimTime window{};

  bool operator==(const WakeupEntryConfig&) const = default;
};

struct TableUpdateConfig {
  SimTime at{};
  tbw::TableAction action = tbw::TableAction::Modify;
  WakeupEntryConfig entry;

  bool operator==(const TableUpdateConfig&) const = default;
};

struct ChannelMapEntry {
  int network = 0;
  ChannelId channel;
  std::vector<std::string> nodes;
  int connection_id = 0;
  bridge::ConnectionType type = bridge::ConnectionType::Contention;
  std::string src;
  std::string dst;

  bool operator==(const ChannelMapEntry&) const = default;
};

struct Scenario {
  std::string name;
  std::string description;
  SimTime horizon = SimTime::from_seconds(600);
  int replications = 1;
  std::vector<std::uint64_t> seeds;  // empty: 1..replications
  std::vector<NodeConfig> nodes;
  std::vector<ChannelConfig> channels;
  PropagationSettings propagation;
  RoleProfiles power_profiles;
  EnergyBudgets energy;
  MacCommon mac;
  ProtocolConfigs protocols;
  std::vector<TrafficEntry> traffic;
  std::vector<OnDemandEntry> on_demand;
  std::vector<WakeupEntryConfig> wakeup_table;
  std::vector<TableUpdateConfig> table_updates;
  std::vector<ChannelMapEntry> channel_map;  // empty: one record per node and interface
  std::vector<double> load_sweep;            // traffic-rate multipliers for `sweep`

  bool operator==(const Scenario&) const = default;

  /// Index of the node with `id`; throws ScenarioError when absent.
  int node_index(const std::string& id) const;
  int bnc_index() const;
  std::vector<std::uint64_t> replication_seeds() const;
  const ChannelConfig& channel(const ChannelId& id) const;
  /// Profiles and budget in force for `protocol` (protocol override or the defaults).
  const RoleProfiles& profiles_for(Protocol protocol) const;
};

/// Parses and validates. `base_dir` resolves relative file references.
Scenario from_json(const nlohmann::json& j, const std::string& base_dir = ".");
Scenario load(const std::string& path);
nlohmann::json to_json(const Scenario& s);

/// Consistency checks beyond the syntax; throws ScenarioError.
void validate(const Scenario& s);

/// Copy of `s` with every traffic rate multiplied by `factor` (periods divided).
Scenario scale_load(const Scenario& s, double factor);

/// Bridging table (explicit or derived from the interfaces) and routing context.
bridge::ChannelMapTable build_channel_map(const Scenario& s);
bridge::RouteContext route_context(const Scenario& s);

}  // namespace bsn::scenario
