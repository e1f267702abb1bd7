#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bsn/phy/channel.hpp"
#include "bsn/phy/link_matrix.hpp"
#include "bsn/phy/propagation.hpp"
#include "bsn/sim/rng.hpp"
#include "bsn/sim/time.hpp"

namespace bsn {

enum class CcaResult : std::uint8_t { Idle, Busy };
enum class DeliveryOutcome : std::uint8_t { Delivered, Collided, BelowSensitivity, OffChannel };

std::string_view to_string(DeliveryOutcome o);

/// A signal as seen by one listener.
struct HeardSignal {
  ChannelId channel;
  double rx_dbm = 0.0;
};

/// Energy-detection CCA: Busy iff a signal on `channel` reaches the
/// listener at or above the threshold. Other channels are invisible.
CcaResult cca(const ChannelId& channel, double threshold_dbm, std::span<const HeardSignal> active);

/// One transmission as received at a particular receiver.
struct Reception {
  ChannelId channel;
  SimTime start;
  SimTime end;  // exclusive
  double rx_dbm = 0.0;
};

struct ReceiverView {
  ChannelId tuned;
  bool listening_throughout = true;  // listening on `tuned` for the whole airtime
  double sensitivity_dbm = -95.0;
};

/// Outcome of `wanted` at a receiver, given every other transmission that
/// may overlap it. Rules in order: off-channel or not listening, capture
/// failure against an overlapping same-channel interferer, sensitivity.
DeliveryOutcome resolve_delivery(const Reception& wanted, std::span<const Reception> others,
                                 const ReceiverView& receiver, double capture_margin_db,
                                 bool check_sensitivity = true);

enum class LinkMode : std::uint8_t { Geometric, Empirical };

/// Channel-wide propagation and reception settings.
struct PropagationConfig {
  LinkMode mode = LinkMode::Geometric;
  PathLossParams on_body = PathLossParams::on_body_default();
  PathLossParams through_body = PathLossParams::through_body_default();
  double min_distance_m = kDefaultMinDistanceM;
  double capture_margin_db = 10.0;
  std::shared_ptr<const LinkMatrix> link_matrix;
  Posture posture = Posture::Standing;
  InterferenceGate interference;
};

/// Attachment of one radio interface to a medium.
struct PortInfo {
  int node = -1;
  Position position;
  std::string site;
  bool in_body = false;
  double sensitivity_dbm = -95.0;
};

using TxId = std::uint64_t;

/// Shared radio channel for one ChannelId during a run.
///
/// Received power is computed for every attached port when a transmission
/// starts (one shadowing draw per receiver), so CCA, capture and
/// sensitivity all see the same value for the lifetime of the frame.
class Medium {
 public:
  Medium(ChannelId channel, PropagationConfig config, std::uint64_t master_seed);

  const ChannelId& channel() const { return channel_; }
  const PropagationConfig& config() const { return config_; }

  int attach(PortInfo info);
  std::size_t ports() const { return ports_.size(); }
  const PortInfo& port(int p) const { return ports_.at(static_cast<std::size_t>(p)).info; }

  void set_listening(int p, bool listening, SimTime now);
  bool listening(int p) const { return ports_.at(static_cast<std::size_t>(p)).listening; }
  /// Number of ongoing detectable transmissions at a listening port.
  int detecting(int p) const { return ports_.at(static_cast<std::size_t>(p)).detecting; }

  /// Called when a port's detecting count goes 0->1 or 1->0.
  void on_activity(std::function<void(int)> cb) { activity_cb_ = std::move(cb); }

  TxId begin(int src_port, double tx_dbm, SimTime start, SimTime airtime, bool data_frame);
  /// Outcome of an ongoing or just-ended transmission at `rx_port`.
  /// Data frames additionally pass the empirical / interference gates.
  DeliveryOutcome resolve(TxId id, int rx_port);
  /// Marks the transmission finished; it stays visible for overlap checks
  /// as long as some active transmission may overlap it.
  void finish(TxId id, SimTime now);

  CcaResult cca_at(int p, double threshold_dbm, SimTime now) const;
  double rx_dbm(TxId id, int p) const;
  std::size_t active() const;

  /// Overlap losses of data frames, counted per receiver.
  std::uint64_t collisions() const { return collisions_; }
  std::uint64_t control_collisions() const { return control_collisions_; }

 private:
  struct Port {
    PortInfo info;
    bool listening = false;
    SimTime listen_since;
    int detecting = 0;
  };
  struct Tx {
    TxId id = 0;
    int src = -1;
    SimTime start;
    SimTime end;
    double tx_dbm = 0.0;
    bool data = false;
    bool finished = false;
    std::vector<double> rx;      // per port
    std::vector<int> detected;   // ports whose detecting count this tx raised
  };

  const Tx& find(TxId id) const;
  RngStream& stream(std::map<int, RngStream>& pool, const char* prefix, int node);
  const PathLossParams& params_for(const PortInfo& a, const PortInfo& b) const;
  void prune(SimTime now);

  ChannelId channel_;
  PropagationConfig config_;
  std::uint64_t seed_;
  std::vector<Port> ports_;
  std::vector<Tx> txs_;  // active plus recently finished, ordered by id
  TxId next_id_ = 1;
  std::function<void(int)> activity_cb_;
  std::map<int, RngStream> shadow_rng_;
  std::map<int, RngStream> link_rng_;
  std::map<int, RngStream> interf_rng_;
  std::uint64_t collisions_ = 0;
  std::uint64_t control_collisions_ = 0;
};

}  // namespace bsn
