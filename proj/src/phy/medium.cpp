#include "bsn/phy/medium.hpp"

#include <algorithm>
#include <stdexcept>

namespace bsn {

std::string_view to_string(DeliveryOutcome o) {
  switch (o) {
    case DeliveryOutcome::Delivered: return "Delivered";
    case DeliveryOutcome::Collided: return "Collided";
    case DeliveryOutcome::BelowSensitivity: return "BelowSensitivity";
    case DeliveryOutcome::OffChannel: return "OffChannel";
  }
  return "?";
}

CcaResult cca(const ChannelId& channel, double threshold_dbm, std::span<const HeardSignal> active) {
  for (const auto& s : active) {
    if (s.channel == channel && s.rx_dbm >= threshold_dbm) return CcaResult::Busy;
  }
  return CcaResult::Idle;
}

DeliveryOutcome resolve_delivery(const Reception& wanted, std::span<const Reception> others,
                                 const ReceiverView& receiver, double capture_margin_db,
                                 bool check_sensitivity) {
  if (receiver.tuned != wanted.channel || !receiver.listening_throughout) return DeliveryOutcome::OffChannel;
  for (const auto& o : others) {
    if (o.channel != wanted.channel) continue;
    const bool overlap = o.start < wanted.end && wanted.start < o.end;
    if (overlap && wanted.rx_dbm - o.rx_dbm < capture_margin_db) return DeliveryOutcome::Collided;
  }
  if (check_sensitivity && wanted.rx_dbm < receiver.sensitivity_dbm) return DeliveryOutcome::BelowSensitivity;
  return DeliveryOutcome::Delivered;
}

Medium::Medium(ChannelId channel, PropagationConfig config, std::uint64_t master_seed)
    : channel_(channel), config_(std::move(config)), seed_(master_seed) {
  if (config_.mode == LinkMode::Empirical && !config_.link_matrix) {
    throw std::invalid_argument("empirical link mode requires a link matrix");
  }
}

int Medium::attach(PortInfo info) {
  ports_.push_back(Port{std::move(info), false, SimTime{}, 0});
  return static_cast<int>(ports_.size() - 1);
}

void Medium::set_listening(int p, bool listening, SimTime now) {
  auto& port = ports_.at(static_cast<std::size_t>(p));
  if (listening && !port.listening) port.listen_since = now;
  port.listening = listening;
}

RngStream& Medium::stream(std::map<int, RngStream>& pool, const char* prefix, int node) {
  auto it = pool.find(node);
  if (it == pool.end()) {
    const std::string label = std::string(prefix) + "/" + to_string(channel_) + "/" + std::to_string(node);
    it = pool.emplace(node, RngStream(seed_, label)).first;
  }
  return it->second;
}

const PathLossParams& Medium::params_for(const PortInfo& a, const PortInfo& b) const {
  return (a.in_body || b.in_body) ? config_.through_body : config_.on_body;
}

TxId Medium::begin(int src_port, double tx_dbm, SimTime start, SimTime airtime, bool data_frame) {
  prune(start);
  Tx tx;
  tx.id = next_id_++;
  tx.src = src_port;
  tx.start = start;
  tx.end = start + airtime;
  tx.tx_dbm = tx_dbm;
  tx.data = data_frame;
  tx.rx.assign(ports_.size(), -1e9);
  const PortInfo& src = port(src_port);
  RngStream& shadow = stream(shadow_rng_, "shadow", src.node);
  for (std::size_t p = 0; p < ports_.size(); ++p) {
    if (static_cast<int>(p) == src_port) continue;
    const PortInfo& dst = ports_[p].info;
    const PathLossParams& params = params_for(src, dst);
    const double d = distance(src.position, dst.position);
    // Empirical mode keeps geometry only for CCA/capture and uses median loss.
    const double loss = config_.mode == LinkMode::Geometric
                            ? path_loss_db(d, params, shadow, config_.min_distance_m)
                            : median_path_loss_db(d, params, config_.min_distance_m);
    tx.rx[p] = rx_power_dbm(tx_dbm, loss);
    auto& port_state = ports_[p];
    if (port_state.listening && tx.rx[p] >= dst.sensitivity_dbm) {
      tx.detected.push_back(static_cast<int>(p));
      if (port_state.detecting++ == 0 && activity_cb_) activity_cb_(static_cast<int>(p));
    }
  }
  txs_.push_back(std::move(tx));
  return txs_.back().id;
}

const Medium::Tx& Medium::find(TxId id) const {
  auto it = std::lower_bound(txs_.begin(), txs_.end(), id, [](const Tx& t, TxId v) { return t.id < v; });
  if (it == txs_.end() || it->id != id) throw std::out_of_range("unknown transmission");
  return *it;
}

double Medium::rx_dbm(TxId id, int p) const { return find(id).rx.at(static_cast<std::size_t>(p)); }

DeliveryOutcome Medium::resolve(TxId id, int rx_port) {
  const Tx& tx = find(id);
  const Port& rx = ports_.at(static_cast<std::size_t>(rx_port));
  std::vector<Reception> others;
  for (const auto& o : txs_) {
    if (o.id == id) continue;
    if (o.src == rx_port) continue;  // own transmission already breaks listening_throughout
    others.push_back(Reception{channel_, o.start, o.end, o.rx[static_cast<std::size_t>(rx_port)]});
  }
  const ReceiverView view{channel_, rx.listening && rx.listen_since <= tx.start, rx.info.sensitivity_dbm};
  const Reception wanted{channel_, tx.start, tx.end, tx.rx[static_cast<std::size_t>(rx_port)]};
  const bool empirical = config_.mode == LinkMode::Empirical && tx.data;
  DeliveryOutcome out = resolve_delivery(wanted, others, view, config_.capture_margin_db, !empirical);
  if (out == DeliveryOutcome::Collided) ++(tx.data ? collisions_ : control_collisions_);
  if (out != DeliveryOutcome::Delivered || !tx.data) return out;

  const int rx_node = rx.info.node;
  if (empirical) {
    const PortInfo& src = port(tx.src);
    if (empirical_outcome(src.site, rx.info.site, config_.posture, *config_.link_matrix,
                          stream(link_rng_, "link", rx_node)) == LinkOutcome::Loss) {
      return DeliveryOutcome::BelowSensitivity;
    }
  }
  if (interference_gate(config_.interference, stream(interf_rng_, "interference", rx_node)) ==
      GateOutcome::Corrupt) {
    return DeliveryOutcome::Collided;
  }
  return out;
}

void Medium::finish(TxId id, SimTime now) {
  auto it = std::lower_bound(txs_.begin(), txs_.end(), id, [](const Tx& t, TxId v) { return t.id < v; });
  if (it == txs_.end() || it->id != id || it->finished) return;
  it->finished = true;
  for (int p : it->detected) {
    auto& port_state = ports_[static_cast<std::size_t>(p)];
    if (--port_state.detecting == 0 && activity_cb_) activity_cb_(p);
  }
  it->detected.clear();
  prune(now);
}

void Medium::prune(SimTime now) {
  SimTime earliest_active = now;
  for (const auto& t : txs_) {
    if (!t.finished) earliest_active = std::min(earliest_active, t.start);
  }
  std::erase_if(txs_, [&](const Tx& t) { return t.finished && t.end <= earliest_active; });
}

CcaResult Medium::cca_at(int p, double threshold_dbm, SimTime now) const {
  std::vector<HeardSignal> heard;
  for (const auto& t : txs_) {
    if (t.finished || t.src == p) continue;
    if (t.start <= now && now < t.end) heard.push_back(HeardSignal{channel_, t.rx[static_cast<std::size_t>(p)]});
  }
  return cca(channel_, threshold_dbm, heard);
}

std::size_t Medium::active() const {
  return static_cast<std::size_t>(std::count_if(txs_.begin(), txs_.end(), [](const Tx& t) { return !t.finished; }));
}

}  // namespace bsn
