#include <algorithm>
#include <set>

#include "cell_common.hpp"

namespace bsn::net::detail {

namespace {

// Beacon-enabled 802.15.4-style cell: the BNC beacons every beacon
// interval; devices contend with slotted CSMA/CA in the CAP and owners of a
// guaranteed time slot send unacknowledged frames in the CFP.
class CsmaCell final : public AckedCell {
 public:
  using AckedCell::AckedCell;

  void start() override {
    const auto& cfg = net_.sc.protocols.csma802154;
    mac::validate(cfg.superframe);
    agents_.assign(net_.ports.size(), Agent{});
    for (const auto& name : cfg.gts_nodes) {
      const int p = net_.nodes[static_cast<std::size_t>(net_.sc.node_index(name))].port;
      if (std::find(ports.begin(), ports.end(), p) != ports.end()) gts_candidates_.push_back(p);
    }
    net_.engine.schedule(SimTime::zero(), "beacon", net_.bnc, [this] { beacon(SimTime::zero()); });
  }

  void frame_queued(int p) override {
    Agent& a = agent(p);
    if (a.phase == Phase::Idle) start_next(p);
  }

 private:
  enum class Phase { Idle, Backoff, WaitAck, Deferred, Gts };

  struct Agent {
    Phase phase = Phase::Idle;
    mac::CsmaState st;
    int cw_left = 0;
    bool synced = false;
    bool rx_on = false;
  };

  Agent& agent(int p) { return agents_[static_cast<std::size_t>(p)]; }
  const mac::SuperframeConfig& sf() const { return net_.sc.protocols.csma802154.superframe; }
  const mac::CsmaParams& params() const { return net_.sc.protocols.csma802154.csma; }
  bool in_cap(SimTime t) const { return t >= sf_start_ && t < cap_end_; }

  bool listen_policy(int p) {
    if (in_beacon_) return true;
    if (p == bnc_port) return net_.now() >= sf_start_ && net_.now() < active_end_;
    return agent(p).rx_on && in_cap(net_.now());
  }

  void beacon(SimTime at) {
    const auto& cfg = net_.sc.protocols.csma802154;
    sf_start_ = at;
    cap_end_ = at + sf().cfp_start();
    active_end_ = at + sf().active_period();

    std::vector<mac::GtsRequest> requests;
    for (int p : gts_candidates_) {
      const bool has = std::any_of(descriptors_.begin(), descriptors_.end(),
                                   [p](const mac::GtsDescriptor& d) { return d.owner == p; });
      if (!has && net_.port_alive(p) && !net_.port(p).queue.empty()) requests.push_back(mac::GtsRequest{p, 1});
    }
    auto res = mac::gts_manage(requests, descriptors_, gts_active_, sf(), cfg.gts_expiry);
    descriptors_ = std::move(res.descriptors);
    gts_active_.clear();

    for (int p : ports) agent(p).rx_on = false;
    for (const auto& f : net_.port(bnc_port).queue) agent(f.next_port).rx_on = true;

    in_beacon_ = true;
    for (int p : ports) net_.set_listen(p, true);
    if (net_.port_alive(bnc_port)) {
      net_.begin_tx(bnc_port, net_.beacon_airtime(index_), false, "beacon_tx", [this](TxId tx) {
        in_beacon_ = false;
        for (int p : ports) {
          if (p == bnc_port) continue;
          agent(p).synced = net_.resolve(p, tx) == DeliveryOutcome::Delivered;
          if (agent(p).phase == Phase::Idle || agent(p).phase == Phase::Gts) agent(p).phase = Phase::Idle;
          net_.set_listen(p, listen_policy(p));
        }
        for (int p : ports) {
          if (agent(p).phase == Phase::Idle || agent(p).phase == Phase::Deferred) start_next(p);
        }
      });
    }

    for (const auto& d : descriptors_) {
      const SimTime t = at + sf().slot_duration() * d.first_slot;
      const SimTime end = t + sf().slot_duration() * d.slot_count;
      net_.engine.schedule(t, "gts_slot", net_.port(d.owner).node, [this, owner = d.owner, end] { gts_send(owner, end); });
    }
    net_.engine.schedule(cap_end_, "cap_end", net_.bnc, [this] {
      for (int p : ports) {
        if (p != bnc_port) net_.set_listen(p, false);
      }
    });
    net_.engine.schedule(active_end_, "inactive", net_.bnc, [this] {
      for (int p : ports) net_.set_listen(p, false);
    });
    const SimTime next = at + sf().beacon_interval();
    net_.engine.schedule(next, "beacon", net_.bnc, [this, next] { beacon(next); });
  }

  bool gts_owner(int p) const {
    return std::any_of(descriptors_.begin(), descriptors_.end(), [p](const mac::GtsDescriptor& d) { return d.owner == p; });
  }

  void start_next(int p) {
    Agent& a = agent(p);
    if (!net_.port_alive(p)) return;
    QueuedFrame* h = net_.head(p);
    if (h == nullptr) {
      a.phase = Phase::Idle;
      net_.set_listen(p, listen_policy(p));
      return;
    }
    if (p != bnc_port && gts_owner(p)) {
      a.phase = Phase::Gts;
      net_.set_listen(p, listen_policy(p));
      return;
    }
    if (p == bnc_port && !agent(h->next_port).rx_on) {
      a.phase = Phase::Idle;  // the destination is not listening this superframe
      return;
    }
    if (a.phase != Phase::Deferred) a.st = mac::initial_csma_state(params());
    if ((p != bnc_port && !a.synced) || !in_cap(net_.now()) || in_beacon_) {
      a.phase = Phase::Deferred;
      return;
    }
    backoff(p);
  }

  void backoff(int p) {
    Agent& a = agent(p);
    const SimTime unit = mac::kUnitBackoff;
    const std::int64_t since = (net_.now() - sf_start_).ticks();
    const SimTime boundary = sf_start_ + unit * ((since + unit.ticks() - 1) / unit.ticks());
    const std::int64_t b = mac::draw_backoff_units(a.st, *net_.port(p).rng);
    const SimTime first_cca = boundary + unit * b;
    const SimTime tx_at = first_cca + unit * params().contention_window;
    const QueuedFrame& h = *net_.head(p);
    if (tx_at + net_.data_airtime(p, h) + net_.sc.mac.ack_wait > cap_end_) {
      a.phase = Phase::Deferred;
      net_.set_listen(p, listen_policy(p));
      return;
    }
    a.phase = Phase::Backoff;
    a.cw_left = params().contention_window;
    net_.set_listen(p, listen_policy(p));
    schedule_cca(p, first_cca);
  }

  void schedule_cca(int p, SimTime slot) {
    net_.engine.schedule(slot, "cca", net_.port(p).node, [this, p, slot] {
      if (!net_.port_alive(p)) return;
      net_.set_listen(p, true);
      net_.engine.schedule(slot + net_.sc.mac.cca_duration, "cca_done", net_.port(p).node,
                           [this, p, slot] { cca_done(p, slot); });
    });
  }

  void cca_done(int p, SimTime slot) {
    Agent& a = agent(p);
    if (!net_.port_alive(p)) return;
    if (net_.head(p) == nullptr) {
      start_next(p);
      return;
    }
    const bool idle = !net_.port(p).transmitting && cca_idle(p);
    net_.set_listen(p, listen_policy(p));
    if (!idle) {
      channel_busy(p);
      return;
    }
    if (--a.cw_left > 0) {
      schedule_cca(p, slot + mac::kUnitBackoff);
      return;
    }
    net_.engine.schedule(slot + mac::kUnitBackoff, "csma_tx", net_.port(p).node, [this, p] {
      if (!net_.port_alive(p)) return;
      if (net_.head(p) == nullptr) {
        start_next(p);
        return;
      }
      if (net_.port(p).transmitting) {  // sending an ack at this instant
        channel_busy(p);
        return;
      }
      agent(p).phase = Phase::WaitAck;
      send_acked(p, [this, p](bool acked) { after_exchange(p, acked); });
    });
  }

  void channel_busy(int p) {
    Agent& a = agent(p);
    if (auto next = mac::after_busy(a.st, params())) {
      a.st = *next;
      backoff(p);
    } else {

      net_.pop_drop(p, DropReason::ChannelAccess);
      a.phase = Phase::Idle;
      start_next(p);
    }
  }

  void after_exchange(int p, bool acked) {
    Agent& a = agent(p);
    a.phase = Phase::Idle;
    if (acked) {
      net_.pop_success(p);
    } else if (net_.head(p)->attempts > params().mac_max_frame_retries) {
      net_.pop_drop(p, DropReason::RetryLimit);
    }
    net_.set_listen(p, listen_policy(p));
    start_next(p);
  }

  void gts_send(int owner, SimTime end) {
    if (!net_.port_alive(owner) || !net_.port_alive(bnc_port)) return;
    net_.engine.schedule(net_.now() + net_.sc.mac.turnaround, "gts_tx", net_.port(owner).node, [this, owner, end] {
      QueuedFrame* f = net_.head(owner);
      if (f == nullptr || !net_.port_alive(owner) || net_.port(owner).transmitting) return;
      if (net_.now() + net_.data_airtime(owner, *f) > end) return;
      gts_active_.insert(owner);
      ++f->attempts;
      f->last_tx_start = net_.now();
      const QueuedFrame copy = *f;
      net_.begin_tx(owner, net_.data_airtime(owner, copy), true, "data_tx", [this, owner, copy, end](TxId tx) {
        const bool ok = net_.resolve(copy.next_port, tx) == DeliveryOutcome::Delivered;
        if (ok) net_.receive_data(copy.next_port, copy);
        net_.pop_unacked(owner, ok);
        gts_send(owner, end);
      });
    });
  }

  std::vector<Agent> agents_;
  std::vector<int> gts_candidates_;
  std::vector<mac::GtsDescriptor> descriptors_;
  std::set<int> gts_active_;
  SimTime sf_start_{};
  SimTime cap_end_{};
  SimTime active_end_{};
  bool in_beacon_ = false;
};

}  // namespace

std::unique_ptr<Cell> make_csma_cell(Net& net, int index, const scenario::ChannelConfig& ch, std::unique_ptr<Medium> m) {
  return std::make_unique<CsmaCell>(net, index, ch, std::move(m));
}

}  // namespace bsn::net::detail
