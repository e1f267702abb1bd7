#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "bsn/sim/rng.hpp"
#include "bsn/sim/time.hpp"

namespace bsn {

/// Traffic taxonomy carried by every frame: periodic normal traffic at three
/// levels, BNC-initiated on-demand traffic, and unpredictable emergencies.
enum class TrafficClass : std::uint8_t {
  NormalHigh,
  NormalMedium,
  NormalLow,
  OnDemandContinuous,
  OnDemandNonContinuous,
  Emergency,
};

inline constexpr std::size_t kTrafficClassCount = 6;
inline constexpr std::array<TrafficClass, kTrafficClassCount> kAllTrafficClasses = {
    TrafficClass::NormalHigh,         TrafficClass::NormalMedium,          TrafficClass::NormalLow,
    TrafficClass::OnDemandContinuous, TrafficClass::OnDemandNonContinuous, TrafficClass::Emergency,
};

std::string_view to_string(TrafficClass c);
TrafficClass traffic_class_from_string(std::string_view s);

constexpr std::size_t index_of(TrafficClass c) { return static_cast<std::size_t>(c); }

constexpr bool is_normal(TrafficClass c) {
  return c == TrafficClass::NormalHigh || c == TrafficClass::NormalMedium || c == TrafficClass::NormalLow;
}
constexpr bool is_on_demand(TrafficClass c) {
  return c == TrafficClass::OnDemandContinuous || c == TrafficClass::OnDemandNonContinuous;
}

/// Emergency(5) > OnDemandContinuous(4) > OnDemandNonContinuous(3)
///   > NormalHigh(2) > NormalMedium(1) > NormalLow(0)
constexpr int priority(TrafficClass c) {
  switch (c) {
    case TrafficClass::Emergency: return 5;
    case TrafficClass::OnDemandContinuous: return 4;
    case TrafficClass::OnDemandNonContinuous: return 3;
    case TrafficClass::NormalHigh: return 2;
    case TrafficClass::NormalMedium: return 1;
    case TrafficClass::NormalLow: return 0;
  }
  return -1;
}

/// One traffic source at a node. Normal classes are CBR with `period`;
/// Emergency is a Poisson process with `rate_per_s`.
struct TrafficSpec {
  int node = -1;
  int dst = -1;  // -1: the BNC
  TrafficClass cls = TrafficClass::NormalMedium;
  SimTime period{};
  double rate_per_s = 0.0;
  std::int64_t payload_bytes = 128;
  SimTime start_offset{};

  bool operator==(const TrafficSpec&) const = default;
};

/// Throws std::invalid_argument when the spec violates its invariants.
void validate(const TrafficSpec& spec);

/// Smallest start_offset + k*period strictly greater than `now`
/// (start_offset itself when now < start_offset).
/// Throws std::invalid_argument("wrong generator") for non-normal classes.
SimTime next_normal_arrival(const TrafficSpec& spec, SimTime now);

/// now + Exp(rate) rounded up to whole ticks; SimTime::never() for rate 0.
SimTime next_emergency(double rate_per_s, RngStream& rng, SimTime now);

enum class OnDemandMode : std::uint8_t { Continuous, NonContinuous };

std::string_view to_string(OnDemandMode m);
OnDemandMode on_demand_mode_from_string(std::string_view s);

/// A BNC-initiated request for data from one node.
struct OnDemandRequest {
  int target = -1;
  OnDemandMode mode = OnDemandMode::NonContinuous;
  SimTime duration{};
  SimTime stream_period = SimTime::from_ms(1000);

  TrafficClass response_class() const {
    return mode == OnDemandMode::Continuous ? TrafficClass::OnDemandContinuous
                                            : TrafficClass::OnDemandNonContinuous;
  }
  /// Offsets, relative to the start of service, at which the target
  /// produces response frames: one frame for NonContinuous, one per
  /// stream_period within [0, duration) for Continuous.
  std::vector<SimTime> response_offsets() const;
};

/// Throws std::invalid_argument("unknown target") unless 0 <= target < node_count.
OnDemandRequest issue_on_demand(int target, int node_count, OnDemandMode mode, SimTime duration,
                                SimTime stream_period = SimTime::from_ms(1000));

}  // namespace bsn
