#include <algorithm>

#include "net.hpp"

namespace bsn::net::detail {

namespace {

constexpr int kDownlink = -1;

// Preamble-based TDMA: the BNC opens each round with a preamble, then every
// member owns one uplink slot. Frames are not acknowledged. When the BNC
// relays traffic into this cell it keeps one downlink slot per round.
class TdmaCell final : public Cell {
 public:
  using Cell::Cell;

  void start() override {
    const auto& cfg = net_.sc.protocols.pbtdma;
    std::vector<int> members;
    for (int p : ports) {
      if (p != bnc_port) members.push_back(p);
    }
    slots_ = members;
    if (net_.bridge && receives_relayed()) slots_.push_back(kDownlink);
    heard_.assign(net_.ports.size(), false);
    round_ = cfg.preamble + cfg.slot * static_cast<std::int64_t>(slots_.size());
    net_.engine.schedule(SimTime::zero(), "tdma_round", net_.bnc, [this] { begin_round(SimTime::zero()); });
  }

  void frame_queued(int) override {}

 private:
  bool receives_relayed() const {
    for (const auto& t : net_.sc.traffic) {
      if (t.dst.empty()) continue;
      const int d = net_.sc.node_index(t.dst);
      if (d == net_.bnc) continue;
      const int dp = net_.nodes[static_cast<std::size_t>(d)].port;
      if (std::find(ports.begin(), ports.end(), dp) != ports.end()) return true;
    }
    return false;
  }

  void begin_round(SimTime at) {
    const auto& cfg = net_.sc.protocols.pbtdma;
    downlink_to_ = -1;
    if (QueuedFrame* h = net_.head(bnc_port)) {
      h->attempts = std::max(h->attempts, 1);  // announced: keeps the head position
      downlink_to_ = h->next_port;
    }
    for (int p : ports) {
      if (p != bnc_port) net_.set_listen(p, true);
    }
    net_.engine.schedule(at + net_.sc.mac.turnaround, "tdma_preamble", net_.bnc, [this] {
      if (!net_.port_alive(bnc_port)) return;
      net_.begin_tx(bnc_port, net_.beacon_airtime(index_), false, "preamble_tx", [this](TxId tx) {
        for (int p : ports) {
          if (p == bnc_port) continue;
          heard_[static_cast<std::size_t>(p)] = net_.resolve(p, tx) == DeliveryOutcome::Delivered;
          net_.set_listen(p, false);
        }
      });
    });
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const SimTime t = at + cfg.preamble + cfg.slot * static_cast<std::int64_t>(i);
      const int owner = slots_[i];
      net_.engine.schedule(t, "tdma_slot", owner == kDownlink ? net_.bnc : net_.port(owner).node,
                           [this, owner] { owner == kDownlink ? downlink_slot() : uplink_slot(owner); });
    }
    net_.engine.schedule(at + round_, "tdma_round", net_.bnc, [this, next = at + round_] { begin_round(next); });
  }

  void uplink_slot(int owner) {
    const auto& cfg = net_.sc.protocols.pbtdma;
    if (!net_.port_alive(bnc_port)) return;
    net_.set_listen(bnc_port, true);
    const SimTime slot_start = net_.now();
    QueuedFrame* h = net_.head(owner);
    const bool sends = h != nullptr && heard_[static_cast<std::size_t>(owner)] && net_.port_alive(owner) &&
                       net_.sc.mac.turnaround + net_.data_airtime(owner, *h) <= cfg.slot;
    if (!sends) {
      net_.engine.schedule(slot_start + cfg.slot_guard, "tdma_idle", net_.bnc,
                           [this] { net_.set_listen(bnc_port, false); });
      return;
    }
    net_.engine.schedule(slot_start + net_.sc.mac.turnaround, "tdma_tx", net_.port(owner).node, [this, owner] {
      QueuedFrame* f = net_.head(owner);
      if (f == nullptr || !net_.port_alive(owner)) {
        net_.set_listen(bnc_port, false);
        return;
      }
      ++f->attempts;
      f->last_tx_start = net_.now();
      const QueuedFrame copy = *f;
      net_.begin_tx(owner, net_.data_airtime(owner, copy), true, "data_tx", [this, owner, copy](TxId tx) {
        const bool ok = net_.resolve(copy.next_port, tx) == DeliveryOutcome::Delivered;
        if (ok) net_.receive_data(copy.next_port, copy);
        net_.pop_unacked(owner, ok);
        net_.set_listen(bnc_port, false);
      });
    });
  }

  void downlink_slot() {
    const auto& cfg = net_.sc.protocols.pbtdma;
    const int dst = downlink_to_;
    QueuedFrame* h = net_.head(bnc_port);
    if (dst < 0 || h == nullptr || h->next_port != dst || !net_.port_alive(bnc_port)) return;
    if (net_.sc.mac.turnaround + net_.data_airtime(bnc_port, *h) > cfg.slot) return;
    if (heard_[static_cast<std::size_t>(dst)]) net_.set_listen(dst, true);
    net_.engine.schedule(net_.now() + net_.sc.mac.turnaround, "tdma_tx", net_.bnc, [this, dst] {
      QueuedFrame* f = net_.head(bnc_port);
      if (f == nullptr || !net_.port_alive(bnc_port)) {
        net_.set_listen(dst, false);
        return;
      }
      f->last_tx_start = net_.now();
      const QueuedFrame copy = *f;
      net_.begin_tx(bnc_port, net_.data_airtime(bnc_port, copy), true, "data_tx", [this, dst, copy](TxId tx) {
        const bool ok = net_.resolve(dst, tx) == DeliveryOutcome::Delivered;
        if (ok) net_.receive_data(dst, copy);
        net_.pop_unacked(bnc_port, ok);
        net_.set_listen(dst, false);
      });
    });
  }

  std::vector<int> slots_;
  std::vector<bool> heard_;
  SimTime round_{};
  int downlink_to_ = -1;
};

}  // namespace

std::unique_ptr<Cell> make_tdma_cell(Net& net, int index, const scenario::ChannelConfig& ch, std::unique_ptr<Medium> m) {
  return std::make_unique<TdmaCell>(net, index, ch, std::move(m));
}

}  // namespace bsn::net::detail
