#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "bsn/sim/time.hpp"

namespace bsn {

enum class RadioState : std::uint8_t { Sleep, Idle, Rx, Tx };
inline constexpr std::size_t kRadioStateCount = 4;

std::string_view to_string(RadioState s);

/// Power draw per radio state, in milliwatts, plus radio-level settings
/// that travel with the hardware class.
struct PowerProfile {
  double sleep_mw = 0.001;
  double idle_listen_mw = 54.0;
  double rx_mw = 54.0;
  double tx_mw = 26.0;
  double wakeup_rx_uw = 50.0;
  double tx_dbm = -5.0;
  double sensitivity_dbm = -95.0;

  bool operator==(const PowerProfile&) const = default;

  double power_mw(RadioState s) const;

  /// nRF2401-class transceiver at -5 dBm.
  static PowerProfile nrf2401();
  /// CC2420-class transceiver at 0 dBm.
  static PowerProfile cc2420();
};

/// Throws std::invalid_argument on negative draws or sleep > idle.
void validate(const PowerProfile& p);

/// Per-state time accounting for one radio against a joule budget.
///
/// consumed_j is always exactly the sum of per-state ticks times the state
/// power, so when the budget runs out mid-interval only the whole ticks
/// that fit are accounted and the ledger is marked dead.
class EnergyLedger {
 public:
  explicit EnergyLedger(PowerProfile profile, double initial_j = 5.0);

  struct Result {
    /// Ticks actually accounted; shorter than requested iff the ledger died.
    SimTime accounted{};
    bool died = false;
  };

  /// Throws std::invalid_argument for negative durations and
  /// std::logic_error when the ledger is already dead.
  Result account(RadioState state, SimTime duration);

  /// Ticks until the budget is exhausted in `state`; never() when the state draws no power.
  SimTime time_to_exhaustion(RadioState state) const;

  double remaining() const;
  double initial() const { return initial_j_; }
  double consumed() const { return consumed_j_; }
  bool dead() const { return dead_; }
  const PowerProfile& profile() const { return profile_; }
  std::int64_t ticks_in(RadioState s) const { return ticks_[static_cast<std::size_t>(s)]; }
  std::int64_t total_ticks() const;
  /// Sum of ticks x power recomputed from the per-state counters.
  double recomputed_j() const;

 private:
  PowerProfile profile_;
  double initial_j_;
  double consumed_j_ = 0.0;
  bool dead_ = false;
  std::array<std::int64_t, kRadioStateCount> ticks_{};
};

/// consumed / delivered_bits, absent when nothing was delivered.
std::optional<double> energy_per_delivered_bit(double consumed_j, std::uint64_t delivered_bits);

/// Several radios of one node sharing a single battery.
///
/// Each radio keeps its own ledger (so per-radio closure holds); the budget
/// check is made against the sum. Call `settle(now)` before changing any
/// radio state; it returns the death instant if the battery ran out.
class NodeBattery {
 public:
  explicit NodeBattery(double initial_j) : initial_j_(initial_j) {}

  /// Adds a radio starting in `state` at `now`; returns its index.
  std::size_t add_radio(const PowerProfile& profile, RadioState state, SimTime now);

  /// Accounts every radio up to `now` in its current state. If the budget
  /// is exhausted first, accounting stops at the death tick, which is returned.
  std::optional<SimTime> settle(SimTime now);

  void set_state(std::size_t radio, RadioState state) { radios_.at(radio).state = state; }
  RadioState state(std::size_t radio) const { return radios_.at(radio).state; }

  /// First instant at which `settle` detects exhaustion if no state changes.
  /// The death tick it then reports is the end of the last fully paid tick,
  /// one tick earlier.
  SimTime projected_death() const;

  double initial() const { return initial_j_; }
  double consumed() const;
  double remaining() const;
  bool dead() const { return dead_; }
  SimTime accounted_until() const { return last_; }
  std::size_t radios() const { return radios_.size(); }
  const EnergyLedger& ledger(std::size_t radio) const { return radios_.at(radio).ledger; }

 private:
  struct Radio {
    EnergyLedger ledger;
    RadioState state;
  };
  double draw_mw() const;

  double initial_j_;
  std::vector<Radio> radios_;
  SimTime last_{};
  bool dead_ = false;
};

}  // namespace bsn
