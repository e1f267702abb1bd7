#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

namespace bsn {

/// Virtual simulation time. One tick is one microsecond.
///
/// The same type is used for instants and durations; all protocol
/// durations are rounded to whole ticks when a scenario is loaded.
class SimTime {
 public:
  constexpr SimTime() = default;
  constexpr explicit SimTime(std::int64_t ticks) : ticks_(ticks) {}

  static constexpr SimTime zero() { return SimTime{0}; }
  static constexpr SimTime never() { return SimTime{std::numeric_limits<std::int64_t>::max()}; }
  static constexpr SimTime from_us(std::int64_t us) { return SimTime{us}; }
  static constexpr SimTime from_ms(std::int64_t ms) { return SimTime{ms * 1000}; }
  static SimTime from_seconds(double s) { return SimTime{static_cast<std::int64_t>(std::llround(s * 1e6))}; }
  /// Rounds a duration in seconds up to whole ticks.
  static SimTime ceil_seconds(double s) { return SimTime{static_cast<std::int64_t>(std::ceil(s * 1e6 - 1e-9))}; }

  constexpr std::int64_t ticks() const { return ticks_; }
  constexpr double seconds() const { return static_cast<double>(ticks_) * 1e-6; }
  constexpr bool is_never() const { return ticks_ == std::numeric_limits<std::int64_t>::max(); }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime& operator+=(SimTime d) {
    ticks_ += d.ticks_;
    return *this;
  }
  constexpr SimTime& operator-=(SimTime d) {
    ticks_ -= d.ticks_;
    return *this;
  }
  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.ticks_ + b.ticks_}; }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.ticks_ - b.ticks_}; }
  friend constexpr SimTime operator*(SimTime a, std::int64_t k) { return SimTime{a.ticks_ * k}; }
  friend constexpr SimTime operator*(std::int64_t k, SimTime a) { return SimTime{a.ticks_ * k}; }

 private:
  std::int64_t ticks_ = 0;
};

/// Airtime of a frame of `bytes` at `bits_per_second`, rounded up to ticks.
constexpr SimTime airtime(std::int64_t bytes, std::int64_t bits_per_second) {
  const std::int64_t bits_us = bytes * 8 * 1'000'000;
  return SimTime{(bits_us + bits_per_second - 1) / bits_per_second};
}

}  // namespace bsn
