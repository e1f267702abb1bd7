#include "bsn/tbw/wakeup.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bsn::tbw {

SimTime WakeupEntry::next_window_start(SimTime t) const {
  const std::int64_t p = period.ticks();
  const std::int64_t off = offset.ticks() % p;
  if (t.ticks() <= off) return SimTime{off};
  const std::int64_t k = (t.ticks() - off + p - 1) / p;
  return SimTime{off + k * p};
}

void validate(const WakeupEntry& e) {
  if (e.node < 0) throw std::invalid_argument("wakeup entry needs a node");
  if (e.period <= SimTime::zero()) throw std::invalid_argument("wakeup period must be positive");
  if (e.window <= SimTime::zero() || e.window > e.period) {
    throw std::invalid_argument("wakeup window must be in (0, period]");
  }
  if (e.offset < SimTime::zero()) throw std::invalid_argument("wakeup offset must be non-negative");
  if (!is_normal(e.cls)) throw std::invalid_argument("wakeup entries describe normal traffic only");
}

const WakeupEntry* WakeupTable::find(int node, TrafficClass cls) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const WakeupEntry& e) { return e.node == node && e.cls == cls; });
  return it == entries_.end() ? nullptr : &*it;
}

std::vector<WakeupEntry> WakeupTable::entries_for(int node) const {
  std::vector<WakeupEntry> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [&](const WakeupEntry& e) { return e.node == node; });
  return out;
}

WakeupTable table_update(const WakeupTable& table, const WakeupEntry& entry, TableAction action,
                         bool caller_is_bnc) {
  if (!caller_is_bnc) throw std::logic_error("BNC only");
  WakeupTable next = table;
  auto it = std::find_if(next.entries_.begin(), next.entries_.end(),
                         [&](const WakeupEntry& e) { return e.node == entry.node && e.cls == entry.cls; });
  switch (action) {
    case TableAction::Insert:
      if (it != next.entries_.end()) throw std::invalid_argument("duplicate entry");
      validate(entry);
      next.entries_.push_back(entry);
      break;
    case TableAction::Modify:
      if (it == next.entries_.end()) throw std::invalid_argument("no such entry");
      validate(entry);
      *it = entry;
      break;
    case TableAction::Remove:
      if (it == next.entries_.end()) throw std::invalid_argument("no such entry");
      next.entries_.erase(it);
      break;
  }
  ++next.revision_;
  return next;
}

std::vector<Interval> merge_intervals(std::vector<Interval> intervals) {
  std::erase_if(intervals, [](const Interval& i) { return i.end <= i.start; });
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });
  std::vector<Interval> out;
  for (const auto& i : intervals) {
    if (!out.empty() && i.start <= out.back().end) {
      out.back().end = std::max(out.back().end, i.end);
    } else {
      out.push_back(i);
    }
  }
  return out;
}

SimTime BncPattern::awake_measure() const {
  SimTime sum{};
  for (const auto& i : intervals) sum += i.length();
  return sum;
}

namespace {

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

bool BncPattern::awake_at(SimTime t) const {
  if (hyperperiod <= SimTime::zero()) return false;
  const SimTime phase{floor_mod(t.ticks(), hyperperiod.ticks())};
  return std::any_of(intervals.begin(), intervals.end(),
                     [&](const Interval& i) { return i.start <= phase && phase < i.end; });
}

SimTime BncPattern::next_interval_start(SimTime t) const {
  if (intervals.empty() || hyperperiod <= SimTime::zero()) return SimTime::never();
  const std::int64_t h = hyperperiod.ticks();
  const std::int64_t base = t.ticks() - floor_mod(t.ticks(), h);
  for (std::int64_t cycle = base; ; cycle += h) {
    for (const auto& i : intervals) {
      const SimTime start{cycle + i.start.ticks()};
      if (start > t) return start;
    }
  }
}

BncPattern derive_bnc_pattern(const WakeupTable& table, SimTime guard, SimTime max_hyperperiod) {
  BncPattern pattern;
  if (table.empty()) return pattern;

  std::int64_t h = 1;
  for (const auto& e : table.entries()) {
    const std::int64_t p = e.period.ticks();
    const std::int64_t g = std::gcd(h, p);
    if (h / g > max_hyperperiod.ticks() / p) {
      pattern.fallback = true;
      return pattern;
    }
    h = h / g * p;
  }
  if (h > max_hyperperiod.ticks()) {
    pattern.fallback = true;
    return pattern;
  }
  pattern.hyperperiod = SimTime{h};

  std::vector<Interval> raw;
  auto add_wrapped = [&](std::int64_t s, std::int64_t e) {
    if (e - s >= h) {
      raw.push_back({SimTime{0}, SimTime{h}});
      return;
    }
    // Normalise the start into [0, h) and split at the hyperperiod boundary.
    std::int64_t shift = ((s % h) + h) % h - s;
    s += shift;
    e += shift;
    if (e <= h) {
      raw.push_back({SimTime{s}, SimTime{e}});
    } else {
      raw.push_back({SimTime{s}, SimTime{h}});
      raw.push_back({SimTime{0}, SimTime{e - h}});
    }
  };
  for (const auto& e : table.entries()) {
    const std::int64_t p = e.period.ticks();
    const std::int64_t off = e.offset.ticks() % p;
    for (std::int64_t k = 0; k < h / p; ++k) {
      const std::int64_t start = off + k * p;
      add_wrapped(start - guard.ticks(), start + e.window.ticks() + guard.ticks());
    }
  }
  pattern.intervals = merge_intervals(std::move(raw));
  return pattern;
}

std::string_view to_string(Addressing a) { return a == Addressing::Tone ? "Tone" : "Broadcast"; }

Addressing addressing_from_string(std::string_view s) {
  if (s == "Tone") return Addressing::Tone;
  if (s == "Broadcast") return Addressing::Broadcast;
  throw std::invalid_argument("unknown addressing '" + std::string(s) + "'");
}

void validate(const WakeupSignal& s) {
  if (s.purpose == SignalPurpose::Emergency && s.direction != SignalDirection::NodeToBnc) {
    throw std::invalid_argument("emergency wakeup signals go from node to BNC");
  }
  if (s.purpose == SignalPurpose::OnDemand && s.direction != SignalDirection::BncToNode) {
    throw std::invalid_argument("on-demand wakeup signals go from BNC to node");
  }
  if (s.duration <= SimTime::zero()) throw std::invalid_argument("wakeup signal duration must be positive");
  if (s.addressing == Addressing::Tone && s.addressed_node < 0) {
    throw std::invalid_argument("tone addressing needs a target node");
  }
}

std::vector<int> woken_nodes(const WakeupSignal& s, std::span<const int> all_nodes) {
  if (s.addressing == Addressing::Broadcast) return {all_nodes.begin(), all_nodes.end()};
  return {s.addressed_node};
}

std::optional<SimTime> emergency_access_delay(const WakeupRadioConfig& cfg, int lost, SimTime turnaround,
                                              SimTime grant_airtime, SimTime jitter_total) {
  if (lost >= cfg.max_tries) return std::nullopt;
  return cfg.retry_timeout * lost + jitter_total + cfg.signal_duration + turnaround + grant_airtime + turnaround;
}

}  // namespace bsn::tbw
