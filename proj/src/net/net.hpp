#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bsn/bridge/bridge.hpp"
#include "bsn/energy/energy.hpp"
#include "bsn/metrics/metrics.hpp"
#include "bsn/net/network.hpp"
#include "bsn/phy/medium.hpp"
#include "bsn/scenario/scenario.hpp"
#include "bsn/sim/engine.hpp"
#include "bsn/sim/rng.hpp"

namespace bsn::net::detail {

inline std::uint64_t frame_key(int src, std::uint64_t seq) {
  return (static_cast<std::uint64_t>(src) << 40) ^ seq;
}

struct QueuedFrame {
  bridge::Mpdu mpdu;
  int next_port = -1;  // receiving port of this hop
  int attempts = 0;    // transmissions of this hop so far
  SimTime last_tx_start{};
};

enum class DropReason : std::uint8_t {
  QueueOverflow,
  ChannelAccess,
  RetryLimit,
  ChannelLoss,
  BridgeOverflow,
  NodeDeath,
  EmergencyFailure
};

struct FrameRecord {
  TrafficClass cls = TrafficClass::NormalMedium;
  std::uint64_t digest = 0;
  int received_hops = 0;
  enum class Status : std::uint8_t { InFlight, Delivered, Dropped } status = Status::InFlight;
};

/// One data radio of a node attached to one cell.
struct Port {
  int node = -1;
  int cell = -1;
  int mport = -1;  // index within the cell's medium
  std::size_t radio = 0;
  PowerProfile profile;
  bool want_listen = false;
  bool transmitting = false;
  int wake_refs = 0;
  std::deque<QueuedFrame> queue;
  std::unique_ptr<RngStream> rng;  // MAC randomness of this interface
};

struct Node {
  std::string name;
  scenario::Role role = scenario::Role::OnBody;
  bool alive = true;
  std::unique_ptr<NodeBattery> battery;
  EventHandle death_event;
  SimTime death_at = SimTime::never();
  std::optional<SimTime> died_at;
  int port = -1;           // the data interface of a sensor node
  std::vector<int> ports;  // all data interfaces (several for the BNC)
  int wake_mport = -1;     // wakeup radio port on the wakeup medium
  std::size_t wake_radio = std::numeric_limits<std::size_t>::max();
  bool wake_tx = false;
  std::uint64_t next_seq = 1;
  std::unordered_set<std::uint64_t> seen;
};

class Net;

/// MAC protocol instance for one channel; the BNC coordinates every cell.
class Cell {
 public:
  Cell(Net& net, int index, const scenario::ChannelConfig& channel, std::unique_ptr<Medium> medium)
      : net_(net), index_(index), channel_(channel), medium_(std::move(medium)) {}
  virtual ~Cell() = default;

  virtual void start() = 0;
  /// A frame was appended to `port`'s queue.
  virtual void frame_queued(int port) = 0;

  Medium& medium() { return *medium_; }
  const Medium& medium() const { return *medium_; }
  const scenario::ChannelConfig& channel() const { return channel_; }
  int index() const { return index_; }

  std::vector<int> ports;        // network port ids attached to this cell
  std::vector<int> port_of_mport;
  int bnc_port = -1;

 protected:
  Net& net_;
  int index_;
  scenario::ChannelConfig channel_;
  std::unique_ptr<Medium> medium_;
};

std::unique_ptr<Cell> make_csma_cell(Net& net, int index, const scenario::ChannelConfig& ch, std::unique_ptr<Medium> m);
std::unique_ptr<Cell> make_tdma_cell(Net& net, int index, const scenario::ChannelConfig& ch, std::unique_ptr<Medium> m);
std::unique_ptr<Cell> make_smac_cell(Net& net, int index, const scenario::ChannelConfig& ch, std::unique_ptr<Medium> m);
std::unique_ptr<Cell> make_tbw_cell(Net& net, int index, const scenario::ChannelConfig& ch, std::unique_ptr<Medium> m,
                                    bool always_on);

/// Shared runtime state; cells drive it through the helpers below.
class Net {
 public:
  Net(const scenario::Scenario& s, scenario::Protocol protocol, std::uint64_t seed);
  ~Net();

  // --- topology -----------------------------------------------------------
  const scenario::Scenario& sc;
  scenario::Protocol protocol;
  std::uint64_t seed;
  Engine engine;
  std::vector<Node> nodes;
  std::vector<Port> ports;
  std::vector<std::unique_ptr<Cell>> cells;
  int bnc = -1;
  std::unique_ptr<bridge::BridgeState> bridge;
  bridge::ChannelMapTable channel_map;
  bridge::RouteContext route_ctx;
  std::unique_ptr<Medium> wake_medium;  // TBW wakeup channel
  std::vector<int> wake_node_of_mport;

  SimTime now() const { return engine.now(); }
  Cell& cell_of(int port) { return *cells[static_cast<std::size_t>(ports[static_cast<std::size_t>(port)].cell)]; }
  Port& port(int p) { return ports[static_cast<std::size_t>(p)]; }
  Node& node_of(int p) { return nodes[static_cast<std::size_t>(port(p).node)]; }
  bool port_alive(int p) { return node_of(p).alive; }
  bool is_bnc_port(int p) { return port(p).node == bnc; }

  // --- timing -------------------------------------------------------------
  SimTime airtime_of(int cell, std::int64_t bytes) const;
  SimTime data_airtime(int port, const QueuedFrame& f) const;
  SimTime ack_airtime(int cell) const { return airtime_of(cell, sc.mac.ack_bytes); }
  SimTime beacon_airtime(int cell) const { return airtime_of(cell, sc.mac.beacon_bytes); }
  double cca_threshold() const { return sc.propagation.cca_threshold_dbm; }

  // --- radio --------------------------------------------------------------
  /// Desired listening state when not transmitting.
  void set_listen(int port, bool on);
  void acquire(int port);
  void release(int port);
  /// Starts a transmission now. `on_end` runs at the end of the airtime,
  /// before the medium forgets the frame, unless the sender died meanwhile.
  TxId begin_tx(int port, SimTime airtime, bool data, std::string_view kind, std::function<void(TxId)> on_end);
  DeliveryOutcome resolve(int port_rx, TxId tx);
  /// Sends a wakeup signal from `node`'s wakeup radio; `on_end` runs at its end.
  TxId begin_signal(int node, SimTime duration, std::function<void(TxId)> on_end);
  DeliveryOutcome resolve_signal(int node, TxId tx);
  void update_radio(int port);
  void settle_node(int node);

  // --- frames -------------------------------------------------------------
  /// Hands a data frame that arrived intact at `rx_port`. Returns false for duplicates.
  bool receive_data(int rx_port, const QueuedFrame& f);
  /// Head of `port` was acknowledged.
  void pop_success(int port);
  /// Head of `port` was sent without acknowledgement; `received` tells whether it arrived.
  void pop_unacked(int port, bool received);
  void pop_drop(int port, DropReason reason);
  void drop_record(const bridge::Mpdu& m, DropReason reason, bool force = false);
  QueuedFrame* head(int port);
  /// On-demand response frame generated at `node` now.
  void generate(int node, TrafficClass cls, int dst, std::int64_t payload_bytes);

  // --- bookkeeping ----------------------------------------------------------
  SimTime run_until = SimTime::zero();
  std::unordered_map<std::uint64_t, FrameRecord> records;
  std::array<metrics::ClassCounts, kTrafficClassCount> counts{};
  std::vector<metrics::LatencySample> latencies;
  std::vector<SimTime> emergency_access;
  std::uint64_t queue_drops = 0, caf = 0, retry_drops = 0, channel_losses = 0, bridge_drops = 0,
                emergency_failures = 0, death_drops = 0, delivered_bits = 0;
  std::uint64_t transparency_violations = 0, missing_bridge_hops = 0;
  bool recording = false;
  std::vector<Delivery> deliveries;
  std::vector<bridge::Mpdu> generated_frames;

  // TBW introspection, filled by the TBW cells.
  tbw::WakeupTable table;
  std::function<tbw::BncPattern()> pattern_fn;
  std::vector<std::uint64_t> known_revision;
  std::vector<std::vector<tbw::WakeupEntry>> known_entries;
  bool table_ready = false;
  std::vector<std::vector<SimTime>> window_starts;

  void start();
  void refresh_death(int node);
  metrics::RunMetrics snapshot();
  Conservation conservation() const;

 private:
  void build();
  void start_traffic();
  void kill(int node, SimTime at);
  void enqueue_at_source(int node, QueuedFrame f);
  void on_activity(int cell, int mport);
};

/// Inserts by priority (highest first), FIFO among equals.
void insert_by_priority(std::deque<QueuedFrame>& q, QueuedFrame f);

}  // namespace bsn::net::detail
