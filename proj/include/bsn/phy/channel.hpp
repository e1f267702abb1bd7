#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace bsn {

enum class Band : std::uint8_t { MICS_402_405, ISM_2_4, WMTS, UWB };

std::string_view to_string(Band b);
/// Throws std::invalid_argument on an unknown name.
Band band_from_string(std::string_view s);

/// A MAC-level channel: a frequency band together with the PHY technique
/// used on it. Two ids are equal iff both fields are equal.
struct ChannelId {
  Band band = Band::ISM_2_4;
  std::uint8_t phy_technique = 0;

  auto operator<=>(const ChannelId&) const = default;
};

/// Renders as e.g. "ISM_2_4/0".
std::string to_string(const ChannelId& c);

struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Position&) const = default;
};

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

}  // namespace bsn
