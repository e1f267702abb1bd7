#include "bsn/energy/energy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bsn {

std::string_view to_string(RadioState s) {
  switch (s) {
    case RadioState::Sleep: return "sleep";
    case RadioState::Idle: return "idle";
    case RadioState::Rx: return "rx";
    case RadioState::Tx: return "tx";
  }
  return "?";
}

double PowerProfile::power_mw(RadioState s) const {
  switch (s) {
    case RadioState::Sleep: return sleep_mw;
    case RadioState::Idle: return idle_listen_mw;
    case RadioState::Rx: return rx_mw;
    case RadioState::Tx: return tx_mw;
  }
  return 0.0;
}

PowerProfile PowerProfile::nrf2401() {
  return PowerProfile{.sleep_mw = 0.001, .idle_listen_mw = 54.0, .rx_mw = 54.0, .tx_mw = 26.0,
                      .wakeup_rx_uw = 50.0, .tx_dbm = -5.0, .sensitivity_dbm = -95.0};
}

PowerProfile PowerProfile::cc2420() {
  return PowerProfile{.sleep_mw = 0.001, .idle_listen_mw = 56.0, .rx_mw = 56.0, .tx_mw = 31.0,
                      .wakeup_rx_uw = 50.0, .tx_dbm = 0.0, .sensitivity_dbm = -95.0};
}

void validate(const PowerProfile& p) {
  if (p.sleep_mw < 0 || p.idle_listen_mw < 0 || p.rx_mw < 0 || p.tx_mw < 0 || p.wakeup_rx_uw < 0) {
    throw std::invalid_argument("power draws must be non-negative");
  }
  if (p.sleep_mw > p.idle_listen_mw) throw std::invalid_argument("sleep draw exceeds idle-listen draw");
}

namespace {

/// Whole ticks of `power_mw` that fit in `budget_j`.
std::int64_t ticks_affordable(double budget_j, double power_mw) {
  const double joules_per_tick = power_mw * 1e-9;
  if (joules_per_tick <= 0.0) return std::numeric_limits<std::int64_t>::max();
  if (budget_j <= 0.0) return 0;
  double k = std::floor(budget_j / joules_per_tick);
  if (k >= 9.0e18) return std::numeric_limits<std::int64_t>::max();
  auto ticks = static_cast<std::int64_t>(k);
  while (ticks > 0 && static_cast<double>(ticks) * joules_per_tick > budget_j) --ticks;
  return ticks;
}

}  // namespace

EnergyLedger::EnergyLedger(PowerProfile profile, double initial_j) : profile_(profile), initial_j_(initial_j) {
  validate(profile_);
  if (!(initial_j_ >= 0.0)) throw std::invalid_argument("initial energy must be non-negative");
}

EnergyLedger::Result EnergyLedger::account(RadioState state, SimTime duration) {
  if (duration < SimTime::zero()) throw std::invalid_argument("negative duration");
  if (dead_) throw std::logic_error("ledger is dead");
  if (duration == SimTime::zero()) return {};
  const double mw = profile_.power_mw(state);
  const std::int64_t affordable = ticks_affordable(initial_j_ - consumed_j_, mw);
  Result r;
  std::int64_t ticks = duration.ticks();
  if (affordable < ticks) {
    ticks = affordable;
    r.died = true;
    dead_ = true;
  }
  ticks_[static_cast<std::size_t>(state)] += ticks;
  consumed_j_ += static_cast<double>(ticks) * mw * 1e-9;
  r.accounted = SimTime{ticks};
  return r;
}

SimTime EnergyLedger::time_to_exhaustion(RadioState state) const {
  const std::int64_t t = ticks_affordable(initial_j_ - consumed_j_, profile_.power_mw(state));
  return t == std::numeric_limits<std::int64_t>::max() ? SimTime::never() : SimTime{t};
}

double EnergyLedger::remaining() const {
  if (dead_) return 0.0;
  const double r = initial_j_ - consumed_j_;
  return r > 0.0 ? r : 0.0;
}

std::int64_t EnergyLedger::total_ticks() const {
  std::int64_t sum = 0;
  for (auto t : ticks_) sum += t;
  return sum;
}

double EnergyLedger::recomputed_j() const {
  double sum = 0.0;
  for (std::size_t s = 0; s < kRadioStateCount; ++s) {
    sum += static_cast<double>(ticks_[s]) * profile_.power_mw(static_cast<RadioState>(s)) * 1e-9;
  }
  return sum;
}

std::optional<double> energy_per_delivered_bit(double consumed_j, std::uint64_t delivered_bits) {
  if (delivered_bits == 0) return std::nullopt;
  return consumed_j / static_cast<double>(delivered_bits);
}

std::size_t NodeBattery::add_radio(const PowerProfile& profile, RadioState state, SimTime now) {
  settle(now);
  if (radios_.empty()) last_ = now;
  radios_.push_back(Radio{EnergyLedger(profile, std::numeric_limits<double>::infinity()), state});
  return radios_.size() - 1;
}

double NodeBattery::draw_mw() const {
  double mw = 0.0;
  for (const auto& r : radios_) mw += r.ledger.profile().power_mw(r.state);
  return mw;
}

double NodeBattery::consumed() const {
  double sum = 0.0;
  for (const auto& r : radios_) sum += r.ledger.consumed();
  return sum;
}

double NodeBattery::remaining() const {
  if (dead_) return 0.0;
  const double r = initial_j_ - consumed();
  return r > 0.0 ? r : 0.0;
}

std::optional<SimTime> NodeBattery::settle(SimTime now) {
  if (dead_ || now <= last_) return std::nullopt;
  std::int64_t ticks = (now - last_).ticks();
  const std::int64_t affordable = ticks_affordable(initial_j_ - consumed(), draw_mw());
  const bool dies = affordable < ticks;
  if (dies) ticks = affordable;
  for (auto& r : radios_) r.ledger.account(r.state, SimTime{ticks});
  last_ += SimTime{ticks};
  if (dies) {
    dead_ = true;
    return last_;
  }
  return std::nullopt;
}

SimTime NodeBattery::projected_death() const {
  if (dead_) return last_;
  const std::int64_t t = ticks_affordable(initial_j_ - consumed(), draw_mw());
  if (t >= SimTime::never().ticks() - last_.ticks() - 1) return SimTime::never();
  return last_ + SimTime{t} + SimTime{1};
}

}  // namespace bsn
