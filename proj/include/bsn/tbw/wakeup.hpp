#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bsn/sim/time.hpp"
#include "bsn/traffic/traffic.hpp"

namespace bsn::tbw {

/// Periodic wakeup pattern of one node for one normal traffic level:
/// windows [offset + k*period, offset + k*period + window).
struct WakeupEntry {
  int node = -1;
  SimTime period{};
  SimTime offset{};
  SimTime window{};
  TrafficClass cls = TrafficClass::NormalMedium;

  bool operator==(const WakeupEntry&) const = default;

  /// Start of the first window beginning at or after `t`.
  SimTime next_window_start(SimTime t) const;
};

/// Throws std::invalid_argument unless period > 0, 0 < window <= period and
/// the class is a normal level.
void validate(const WakeupEntry& e);

enum class TableAction : std::uint8_t { Insert, Modify, Remove };

/// The BNC-maintained table of node wakeup patterns.
class WakeupTable {
 public:
  const std::vector<WakeupEntry>& entries() const { return entries_; }
  std::uint64_t revision() const { return revision_; }
  bool empty() const { return entries_.empty(); }

  const WakeupEntry* find(int node, TrafficClass cls) const;
  std::vector<WakeupEntry> entries_for(int node) const;

  bool operator==(const WakeupTable&) const = default;

 private:
  friend WakeupTable table_update(const WakeupTable&, const WakeupEntry&, TableAction, bool);
  std::vector<WakeupEntry> entries_;
  std::uint64_t revision_ = 0;
};

/// Applies one modification and bumps the revision. Errors:
/// "BNC only" when the caller is not the coordinator, "no such entry" for
/// Modify/Remove of an absent (node, class), "duplicate entry" for Insert.
WakeupTable table_update(const WakeupTable& table, const WakeupEntry& entry, TableAction action,
                         bool caller_is_bnc = true);

struct Interval {
  SimTime start;
  SimTime end;  // exclusive

  bool operator==(const Interval&) const = default;
  SimTime length() const { return end - start; }
};

/// The BNC data radio's awake set over one hyperperiod, repeated forever.
struct BncPattern {
  std::vector<Interval> intervals;  // sorted, disjoint, within [0, hyperperiod)
  SimTime hyperperiod{};
  /// Set when the periods have no usable common hyperperiod; the BNC then
  /// schedules each node window individually.
  bool fallback = false;

  SimTime awake_measure() const;
  bool awake_at(SimTime t) const;
  /// Start of the first awake interval beginning after `t` (absolute time).
  SimTime next_interval_start(SimTime t) const;
};

/// Union of every entry's guarded windows [start - guard, start + window + guard)
/// over one hyperperiod (the LCM of the periods), wrapped cyclically.
/// Falls back (flagged) when the LCM exceeds `max_hyperperiod`.
BncPattern derive_bnc_pattern(const WakeupTable& table, SimTime guard,
                              SimTime max_hyperperiod = SimTime::from_seconds(86400.0 * 7));

/// Merges arbitrary intervals into a sorted disjoint list.
std::vector<Interval> merge_intervals(std::vector<Interval> intervals);

// ---------------------------------------------------------------------------
// Wakeup radio signalling

enum class SignalDirection : std::uint8_t { NodeToBnc, BncToNode };
enum class SignalPurpose : std::uint8_t { Emergency, OnDemand };
enum class Addressing : std::uint8_t { Tone, Broadcast };

std::string_view to_string(Addressing a);
Addressing addressing_from_string(std::string_view s);

struct WakeupSignal {
  SignalDirection direction = SignalDirection::NodeToBnc;
  Addressing addressing = Addressing::Tone;
  int addressed_node = -1;  // for Tone
  SimTime duration = SimTime::from_ms(10);
  SignalPurpose purpose = SignalPurpose::Emergency;
};

/// Emergency signals travel node->BNC, on-demand signals BNC->node.
void validate(const WakeupSignal& s);

/// Nodes whose wakeup receiver triggers on a BNC->node signal.
std::vector<int> woken_nodes(const WakeupSignal& s, std::span<const int> all_nodes);

/// Timing and retry policy of the wakeup radio.
struct WakeupRadioConfig {
  SimTime signal_duration = SimTime::from_ms(10);
  /// Measured from the start of the previous signal.
  SimTime retry_timeout = SimTime::from_ms(50);
  /// Uniform extra delay in [0, retry_jitter] added to each retry so that two
  /// nodes whose signals collided do not retry in lockstep.
  SimTime retry_jitter = SimTime::from_ms(10);
  int max_tries = 10;
  double tx_dbm = -5.0;
  double sensitivity_dbm = -95.0;
  /// Independent loss probability of each signal on the wakeup channel.
  double signal_loss = 0.0;

  bool operator==(const WakeupRadioConfig&) const = default;
};

/// Access delay of an emergency frame on an otherwise idle BNC: from frame
/// generation until the node starts sending it. The signal wakes the BNC,
/// which polls after one turnaround; the node answers one turnaround after
/// the poll. Each of the first `lost` signals costs one retry timeout plus
/// its drawn jitter (`jitter_total` summed over the retries).
/// std::nullopt when every try is lost.
std::optional<SimTime> emergency_access_delay(const WakeupRadioConfig& cfg, int lost, SimTime turnaround,
                                              SimTime grant_airtime, SimTime jitter_total = SimTime::zero());

}  // namespace bsn::tbw
