#include "bsn/mac/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsn::mac {

void validate(const SuperframeConfig& cfg) {
  if (cfg.superframe_order < 0 || cfg.superframe_order > cfg.beacon_order || cfg.beacon_order > 14) {
    throw std::invalid_argument("superframe requires 0 <= SO <= BO <= 14");
  }
  if (cfg.num_gts_slots < 0 || cfg.num_gts_slots > 7) throw std::invalid_argument("at most 7 GTS slots");
  if (cfg.base <= SimTime::zero()) throw std::invalid_argument("superframe base must be positive");
}

CsmaState initial_csma_state(const CsmaParams& p) { return CsmaState{0, p.mac_min_be}; }

std::int64_t draw_backoff_units(const CsmaState& s, RngStream& rng) {
  return rng.uniform_int(0, (std::int64_t{1} << s.be) - 1);
}

std::optional<CsmaState> after_busy(const CsmaState& s, const CsmaParams& p) {
  CsmaState next{s.nb + 1, std::min(s.be + 1, p.a_max_be)};
  if (next.nb > p.mac_max_csma_backoffs) return std::nullopt;
  return next;
}

CsmaDecision csma_attempt(const CsmaState& state, const CsmaParams& params, RngStream& rng,
                          const std::function<CcaResult(int)>& cca_fn, bool in_cap) {
  if (!in_cap) throw std::logic_error("CAP only");
  const std::int64_t units = draw_backoff_units(state, rng);
  for (int k = 0; k < params.contention_window; ++k) {
    if (cca_fn(k) == CcaResult::Busy) {
      if (auto next = after_busy(state, params)) return Deferred{*next};
      return ChannelAccessFailure{};
    }
  }
  return TransmitAfter{kUnitBackoff * (units + params.contention_window)};
}

GtsManageResult gts_manage(std::span<const GtsRequest> requests, std::vector<GtsDescriptor> descriptors,
                           const std::set<int>& active_owners, const SuperframeConfig& cfg,
                           int expiry_threshold) {
  GtsManageResult out;
  for (auto& d : descriptors) {
    if (active_owners.contains(d.owner)) {
      d.inactivity_countdown = expiry_threshold;
    } else {
      --d.inactivity_countdown;
    }
    if (d.inactivity_countdown <= 0) {
      out.revoked.push_back(d.owner);
    } else {
      out.descriptors.push_back(d);
    }
  }

  // GTS slots are packed from the end of the superframe towards the CAP.
  std::vector<bool> used(kSuperframeSlots, false);
  for (const auto& d : out.descriptors) {
    for (int s = d.first_slot; s < d.first_slot + d.slot_count; ++s) used[static_cast<std::size_t>(s)] = true;
  }
  const int region_start = cfg.num_cap_slots();
  for (const auto& req : requests) {
    const bool already = std::any_of(out.descriptors.begin(), out.descriptors.end(),
                                     [&](const GtsDescriptor& d) { return d.owner == req.node; });
    if (already) continue;
    int found = -1;
    for (int first = kSuperframeSlots - req.slots; first >= region_start; --first) {
      bool free = true;
      for (int s = first; s < first + req.slots; ++s) free = free && !used[static_cast<std::size_t>(s)];
      if (free) {
        found = first;
        break;
      }
    }
    if (found < 0 || req.slots <= 0) {
      out.denied.push_back(req.node);
      continue;
    }
    for (int s = found; s < found + req.slots; ++s) used[static_cast<std::size_t>(s)] = true;
    out.descriptors.push_back(GtsDescriptor{req.node, found, req.slots, expiry_threshold});
  }
  return out;
}

std::vector<int> TdmaSchedule::slots_of(int node) const {
  std::vector<int> out;
  for (const auto& [slot_index, owner] : assignment) {
    if (owner == node) out.push_back(slot_index);
  }
  return out;
}

void validate(const TdmaSchedule& s) {
  if (s.frame_length <= 0 || s.slot <= SimTime::zero() || s.preamble < SimTime::zero()) {
    throw std::invalid_argument("TDMA schedule needs positive frame length and slot duration");
  }
  for (const auto& [slot_index, owner] : s.assignment) {
    if (slot_index < 0 || slot_index >= s.frame_length) throw std::invalid_argument("TDMA slot outside frame");
    if (owner < 0) throw std::invalid_argument("TDMA slot owner must be a node");
  }
}

TdmaSchedule make_round_robin(std::span<const int> nodes, SimTime slot, SimTime preamble) {
  TdmaSchedule s;
  s.frame_length = static_cast<int>(nodes.size());
  s.slot = slot;
  s.preamble = preamble;
  for (std::size_t i = 0; i < nodes.size(); ++i) s.assignment[static_cast<int>(i)] = nodes[i];
  return s;
}

std::vector<SlotTransmission> tdma_round(const TdmaSchedule& schedule, SimTime round_start,
                                         const std::function<int(int)>& pending,
                                         const std::function<bool(int)>& heard_preamble) {
  std::vector<SlotTransmission> out;
  std::map<int, int> budget;
  for (const auto& [slot_index, owner] : schedule.assignment) {
    if (!heard_preamble(owner)) continue;
    auto [it, fresh] = budget.try_emplace(owner, 0);
    if (fresh) it->second = pending(owner);
    if (it->second <= 0) continue;
    --it->second;
    out.push_back(SlotTransmission{slot_index, owner, round_start + schedule.slot_start(slot_index)});
  }
  return out;
}

SimTime SmacConfig::listen_window() const {
  return SimTime{static_cast<std::int64_t>(std::llround(static_cast<double>(cycle.ticks()) * listen_fraction))};
}

void validate(const SmacConfig& c) {
  if (c.cycle <= SimTime::zero()) throw std::invalid_argument("S-MAC cycle must be positive");
  if (!(c.listen_fraction > 0.0 && c.listen_fraction <= 1.0)) {
    throw std::invalid_argument("S-MAC listen fraction must be in (0, 1]");
  }
}

SmacPhase smac_window(SimTime now, const SmacConfig& cfg) {
  const std::int64_t phase = now.ticks() % cfg.cycle.ticks();
  return phase < cfg.listen_window().ticks() ? SmacPhase::Listen : SmacPhase::Sleep;
}

SimTime next_listen_start(SimTime now, const SmacConfig& cfg) {
  const std::int64_t k = now.ticks() / cfg.cycle.ticks();
  const SimTime this_start = cfg.cycle * k;
  if (smac_window(now, cfg) == SmacPhase::Listen) return this_start;
  return this_start + cfg.cycle;
}

}  // namespace bsn::mac
