#include "bsn/traffic/traffic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bsn {

std::string_view to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::NormalHigh: return "NormalHigh";
    case TrafficClass::NormalMedium: return "NormalMedium";
    case TrafficClass::NormalLow: return "NormalLow";
    case TrafficClass::OnDemandContinuous: return "OnDemandContinuous";
    case TrafficClass::OnDemandNonContinuous: return "OnDemandNonContinuous";
    case TrafficClass::Emergency: return "Emergency";
  }
  return "?";
}

TrafficClass traffic_class_from_string(std::string_view s) {
  for (TrafficClass c : kAllTrafficClasses) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown traffic class '" + std::string(s) + "'");
}

std::string_view to_string(OnDemandMode m) {
  return m == OnDemandMode::Continuous ? "Continuous" : "NonContinuous";
}

OnDemandMode on_demand_mode_from_string(std::string_view s) {
  if (s == "Continuous") return OnDemandMode::Continuous;
  if (s == "NonContinuous") return OnDemandMode::NonContinuous;
  throw std::invalid_argument("unknown on-demand mode '" + std::string(s) + "'");
}

void validate(const TrafficSpec& spec) {
  if (spec.payload_bytes <= 0) throw std::invalid_argument("payload_bytes must be positive");
  if (spec.start_offset < SimTime::zero()) throw std::invalid_argument("start_offset must be non-negative");
  if (is_normal(spec.cls)) {
    if (spec.period <= SimTime::zero()) throw std::invalid_argument("CBR period must be positive");
  } else if (spec.cls == TrafficClass::Emergency) {
    if (!(spec.rate_per_s >= 0.0)) throw std::invalid_argument("emergency rate must be non-negative");
  } else {
    throw std::invalid_argument("on-demand traffic is issued by the BNC, not configured as a source");
  }
}

SimTime next_normal_arrival(const TrafficSpec& spec, SimTime now) {
  if (!is_normal(spec.cls)) throw std::invalid_argument("wrong generator");
  if (spec.period <= SimTime::zero()) throw std::invalid_argument("CBR period must be positive");
  if (now < spec.start_offset) return spec.start_offset;
  const std::int64_t k = (now - spec.start_offset).ticks() / spec.period.ticks() + 1;
  return spec.start_offset + spec.period * k;
}

SimTime next_emergency(double rate_per_s, RngStream& rng, SimTime now) {
  if (rate_per_s < 0.0) throw std::invalid_argument("emergency rate must be non-negative");
  if (rate_per_s == 0.0) return SimTime::never();
  const double gap_s = rng.exponential(rate_per_s);
  return now + SimTime{static_cast<std::int64_t>(std::ceil(gap_s * 1e6))};
}

std::vector<SimTime> OnDemandRequest::response_offsets() const {
  std::vector<SimTime> out;
  if (mode == OnDemandMode::NonContinuous) {
    out.push_back(SimTime::zero());
    return out;
  }
  if (stream_period <= SimTime::zero()) throw std::invalid_argument("stream period must be positive");
  for (SimTime t = SimTime::zero(); t < duration; t += stream_period) out.push_back(t);
  return out;
}

OnDemandRequest issue_on_demand(int target, int node_count, OnDemandMode mode, SimTime duration,
                                SimTime stream_period) {
  if (target < 0 || target >= node_count) throw std::invalid_argument("unknown target");
  if (duration < SimTime::zero()) throw std::invalid_argument("negative duration");
  return OnDemandRequest{target, mode, duration, stream_period};
}

}  // namespace bsn
