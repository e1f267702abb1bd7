#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "bsn/phy/medium.hpp"
#include "bsn/sim/rng.hpp"
#include "bsn/sim/time.hpp"

namespace bsn::mac {

// ---------------------------------------------------------------------------
// Beacon-enabled superframe (802.15.4 style)

inline constexpr SimTime kBaseSuperframe = SimTime::from_us(15'360);  // 960 symbols at 62.5 ksym/s
inline constexpr int kSuperframeSlots = 16;

struct SuperframeConfig {
  int beacon_order = 6;
  int superframe_order = 6;
  SimTime base = kBaseSuperframe;
  int num_gts_slots = 0;

  bool operator==(const SuperframeConfig&) const = default;

  SimTime beacon_interval() const { return base * (std::int64_t{1} << beacon_order); }
  SimTime active_period() const { return base * (std::int64_t{1} << superframe_order); }
  SimTime slot_duration() const { return SimTime{active_period().ticks() / kSuperframeSlots}; }
  int num_cap_slots() const { return kSuperframeSlots - num_gts_slots; }
  /// Offset of the contention-free period from the beacon.
  SimTime cfp_start() const { return slot_duration() * num_cap_slots(); }
};

/// Throws std::invalid_argument unless 0 <= SO <= BO <= 14 and the GTS
/// region leaves at least one CAP slot (at most 7 GTS slots).
void validate(const SuperframeConfig& cfg);

// ---------------------------------------------------------------------------
// Slotted CSMA/CA

inline constexpr SimTime kUnitBackoff = SimTime::from_us(320);  // 20 symbols

struct CsmaParams {
  int mac_min_be = 3;
  int a_max_be = 5;
  int mac_max_csma_backoffs = 4;
  int contention_window = 2;
  int mac_max_frame_retries = 3;

  bool operator==(const CsmaParams&) const = default;
};

struct CsmaState {
  int nb = 0;
  int be = 3;

  bool operator==(const CsmaState&) const = default;
};

CsmaState initial_csma_state(const CsmaParams& p);

/// Random backoff in whole units: uniform in [0, 2^BE - 1].
std::int64_t draw_backoff_units(const CsmaState& s, RngStream& rng);

/// State after a busy CCA; std::nullopt once NB exceeds macMaxCSMABackoffs.
std::optional<CsmaState> after_busy(const CsmaState& s, const CsmaParams& p);

struct TransmitAfter {
  SimTime delay;  // backoff plus the CW clear assessments
};
struct Deferred {
  CsmaState state;
};
struct ChannelAccessFailure {};

using CsmaDecision = std::variant<TransmitAfter, Deferred, ChannelAccessFailure>;

/// One backoff-and-assess round. `cca_fn(k)` reports the k-th assessment
/// (0-based) of this round. Throws std::logic_error("CAP only") when
/// called outside the contention access period.
CsmaDecision csma_attempt(const CsmaState& state, const CsmaParams& params, RngStream& rng,
                          const std::function<CcaResult(int)>& cca_fn, bool in_cap = true);

// ---------------------------------------------------------------------------
// Guaranteed time slots

struct GtsRequest {
  int node = -1;
  int slots = 1;
};

struct GtsDescriptor {
  int owner = -1;
  int first_slot = 0;  // index within the 16-slot superframe
  int slot_count = 1;
  int inactivity_countdown = 4;

  bool operator==(const GtsDescriptor&) const = default;
};

struct GtsManageResult {
  std::vector<GtsDescriptor> descriptors;
  std::vector<int> revoked;  // owners whose descriptor expired this interval
  std::vector<int> denied;   // requesters left on the CAP
};

/// Coordinator bookkeeping, once per beacon interval: descriptors whose
/// owner was idle `expiry_threshold` consecutive superframes are revoked,
/// then pending requests are granted from the free GTS region.
GtsManageResult gts_manage(std::span<const GtsRequest> requests, std::vector<GtsDescriptor> descriptors,
                           const std::set<int>& active_owners, const SuperframeConfig& cfg,
                           int expiry_threshold = 4);

// ---------------------------------------------------------------------------
// Preamble-based TDMA

struct TdmaSchedule {
  int frame_length = 0;  // slots per round
  SimTime slot{};
  SimTime preamble{};
  std::map<int, int> assignment;  // slot index -> owner node

  bool operator==(const TdmaSchedule&) const = default;

  SimTime round_length() const { return preamble + slot * frame_length; }
  SimTime slot_start(int slot_index) const { return preamble + slot * slot_index; }
  std::vector<int> slots_of(int node) const;
};

/// Throws std::invalid_argument for slots outside the frame or empty timing.
void validate(const TdmaSchedule& s);

/// Round-robin schedule giving each node one slot, in order.
TdmaSchedule make_round_robin(std::span<const int> nodes, SimTime slot, SimTime preamble);

struct SlotTransmission {
  int slot = 0;
  int node = -1;
  SimTime start{};  // absolute
};

/// Transmissions of one round: every owner that heard the preamble and has
/// a pending frame sends one frame per owned slot. `pending(node)` returns
/// the queue length.
std::vector<SlotTransmission> tdma_round(const TdmaSchedule& schedule, SimTime round_start,
                                         const std::function<int(int)>& pending,
                                         const std::function<bool(int)>& heard_preamble);

// ---------------------------------------------------------------------------
// S-MAC (synchronised fixed duty cycle)

struct SmacConfig {
  SimTime cycle = SimTime::from_ms(1000);
  double listen_fraction = 0.1;

  bool operator==(const SmacConfig&) const = default;

  SimTime listen_window() const;
};

void validate(const SmacConfig& c);

enum class SmacPhase : std::uint8_t { Listen, Sleep };

SmacPhase smac_window(SimTime now, const SmacConfig& cfg);
/// Start of the listen window containing `now`, or of the next one.
SimTime next_listen_start(SimTime now, const SmacConfig& cfg);

}  // namespace bsn::mac
