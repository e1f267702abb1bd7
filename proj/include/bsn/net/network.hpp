#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bsn/bridge/bridge.hpp"
#include "bsn/metrics/metrics.hpp"
#include "bsn/scenario/scenario.hpp"
#include "bsn/tbw/wakeup.hpp"

namespace bsn::net {

namespace detail {
class Net;
}

/// One end-to-end delivery, kept when delivery recording is enabled.
struct Delivery {
  bridge::Mpdu mpdu;  // as received, hop trace included
  SimTime at{};
};

/// Per-class frame conservation at the current instant.
struct Conservation {
  bool holds = false;          // delivered + dropped + in_flight == generated for every class
  bool in_flight_matches = false;  // in-flight records equal frames physically held in queues and stores
  bool bridge_conserved = true;
};

/// A complete body sensor network run for one protocol and seed.
class Network {
 public:
  Network(const scenario::Scenario& scenario, scenario::Protocol protocol, std::uint64_t seed);
  ~Network();
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  /// One `tick,seq,kind,target` line per dispatched event.
  void set_trace(std::ostream* sink);
  /// Keep a copy of every generated frame and every end-to-end delivery
  /// (off by default).
  void record_deliveries(bool on);

  /// Advances the simulation to `until` (inclusive). May be called repeatedly.
  void run(SimTime until);
  SimTime now() const;

  /// Snapshot of the metrics, with every battery settled to now().
  metrics::RunMetrics metrics();

  const std::vector<Delivery>& deliveries() const;
  /// Frames as created at their source.
  const std::vector<bridge::Mpdu>& generated() const;
  Conservation conservation() const;
  const bridge::BridgeState* bridge() const;

  /// TBW only: the BNC's current table, the pattern it derived and the table
  /// revision a node has learned.
  const tbw::WakeupTable& wakeup_table() const;
  tbw::BncPattern bnc_pattern() const;
  std::uint64_t known_revision(const std::string& node) const;
  /// TBW only: start instants of the windows a node actually opened.
  const std::vector<SimTime>& window_starts(const std::string& node) const;

 private:
  std::unique_ptr<detail::Net> net_;
};

/// Runs one replication to the scenario horizon (or `until`).
metrics::RunMetrics run_once(const scenario::Scenario& scenario, scenario::Protocol protocol, std::uint64_t seed,
                             std::optional<SimTime> until = std::nullopt, std::ostream* trace = nullptr);

/// Runs every replication seed of the scenario (or the first `reps`).
std::vector<metrics::RunMetrics> run_replications(const scenario::Scenario& scenario, scenario::Protocol protocol,
                                                  std::optional<int> reps = std::nullopt,
                                                  std::optional<SimTime> until = std::nullopt);

/// Paired comparison: every protocol runs the same seed list. Throws
/// std::invalid_argument when fewer than two protocols are given.
std::vector<std::pair<std::string, metrics::Aggregate>> compare_protocols(
    const scenario::Scenario& scenario, const std::vector<scenario::Protocol>& protocols,
    std::optional<int> reps = std::nullopt, std::optional<SimTime> until = std::nullopt);

/// Measured success rate of one directed link.
struct LinkProbe {
  std::string src_site;
  std::string dst_site;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  double rate() const { return sent == 0 ? 0.0 : static_cast<double>(delivered) / static_cast<double>(sent); }
};

/// Sends `frames` isolated data frames over every ordered pair of scenario
/// nodes (BNC included) through the scenario's propagation model.
std::vector<LinkProbe> probe_links(const scenario::Scenario& scenario, std::uint64_t seed, std::uint64_t frames);

/// `src,dst,route_kind,ingress,bridge,egress` for every ordered node pair.
void write_routes(std::ostream& out, const scenario::Scenario& scenario);

}  // namespace bsn::net
