#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <tuple>

#include "bsn/sim/rng.hpp"

namespace bsn {

enum class Posture : std::uint8_t { Standing, Sitting };

std::string_view to_string(Posture p);
Posture posture_from_string(std::string_view s);

/// Measured per-link packet success rates between body sites, one set per
/// posture. A missing entry means the link does not exist (probability 0).
class LinkMatrix {
 public:
  /// Throws std::invalid_argument unless 0 <= probability <= 1.
  void set(Posture posture, std::string src_site, std::string dst_site, double probability);
  double probability(Posture posture, std::string_view src_site, std::string_view dst_site) const;
  bool contains(Posture posture, std::string_view src_site, std::string_view dst_site) const;
  std::size_t size() const { return entries_.size(); }

  using Key = std::tuple<Posture, std::string, std::string>;
  const std::map<Key, double, std::less<>>& entries() const { return entries_; }

  /// CSV with header `posture,src,dst,success_rate`. Errors carry the line number.
  static LinkMatrix from_csv(std::istream& in);
  static LinkMatrix load_csv(const std::string& path);
  void write_csv(std::ostream& out) const;

  bool operator==(const LinkMatrix&) const = default;

 private:
  std::map<Key, double, std::less<>> entries_;
};

enum class LinkOutcome : std::uint8_t { Success, Loss };

LinkOutcome empirical_outcome(std::string_view src_site, std::string_view dst_site, Posture posture,
                              const LinkMatrix& matrix, RngStream& rng);

/// Microwave-oven coexistence gate: when enabled a frame passes with
/// `pass_probability`, otherwise always.
struct InterferenceGate {
  bool enabled = false;
  double pass_probability = 0.9685;

  bool operator==(const InterferenceGate&) const = default;
};

enum class GateOutcome : std::uint8_t { Pass, Corrupt };

GateOutcome interference_gate(const InterferenceGate& gate, RngStream& rng);

}  // namespace bsn
