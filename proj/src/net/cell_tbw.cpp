#include <algorithm>

#include <fmt/format.h>

#include "cell_common.hpp"

namespace bsn::net::detail {

namespace {

tbw::WakeupEntry to_entry(const scenario::Scenario& sc, const scenario::WakeupEntryConfig& c) {
  return tbw::WakeupEntry{sc.node_index(c.node), c.period, c.offset, c.window, c.cls};
}

tbw::WakeupTable table_of(const std::vector<tbw::WakeupEntry>& entries) {
  tbw::WakeupTable t;
  for (const auto& e : entries) t = tbw::table_update(t, e, tbw::TableAction::Insert);
  return t;
}

// Builds the initial table once per run, shared by every TBW cell: the
// configured entries plus one entry per periodic source that has none.
void init_table(Net& net) {
  if (net.table_ready) return;
  net.table_ready = true;
  const auto& sc = net.sc;
  const auto& cfg = sc.protocols.tbw;
  tbw::WakeupTable table;
  for (const auto& c : sc.wakeup_table) table = tbw::table_update(table, to_entry(sc, c), tbw::TableAction::Insert);
  std::int64_t k = 0;
  for (const auto& t : sc.traffic) {
    if (!is_normal(t.cls)) continue;
    const int n = sc.node_index(t.node);
    if (table.find(n, t.cls) != nullptr) continue;
    const SimTime window = std::min(cfg.default_window, t.period);
    const SimTime offset{((window + cfg.guard * 2) * k).ticks() % t.period.ticks()};
    table = tbw::table_update(table, tbw::WakeupEntry{n, t.period, offset, window, t.cls}, tbw::TableAction::Insert);
    ++k;
  }
  net.table = table;
  for (std::size_t n = 0; n < net.nodes.size(); ++n) {
    net.known_entries[n] = table.entries_for(static_cast<int>(n));
    net.known_revision[n] = table.revision();
  }
  net.pattern_fn = [&net] {
    std::vector<tbw::WakeupEntry> all;
    for (const auto& v : net.known_entries) all.insert(all.end(), v.begin(), v.end());
    return tbw::derive_bnc_pattern(table_of(all), net.sc.protocols.tbw.guard);
  };
  for (const auto& u : sc.table_updates) {
    net.engine.schedule(u.at, "table_update", net.bnc, [&net, u] {
      try {
        net.table = tbw::table_update(net.table, to_entry(net.sc, u.entry), u.action);
      } catch (const std::invalid_argument&) {
        // Inconsistent updates leave the table untouched.
      }
    });
  }
}

// Traffic-based wakeup: the BNC polls each node inside the node's periodic
// windows, nodes raise emergencies over the wakeup radio and the BNC wakes
// nodes for on-demand requests the same way.
class TbwCell final : public AckedCell {
 public:
  TbwCell(Net& net, int index, const scenario::ChannelConfig& ch, std::unique_ptr<Medium> m, bool always_on)
      : AckedCell(net, index, ch, std::move(m)), always_on_(always_on) {}

  void start() override {
    init_table(net_);
    side_.resize(net_.ports.size());
    for (int p : ports) {
      if (p == bnc_port) continue;
      members_.push_back(p);
      side_[static_cast<std::size_t>(p)].loss =
          std::make_shared<RngStream>(net_.seed, fmt::format("wakeloss/{}", net_.port(p).node));
    }
    for (int p : members_) plan_window(p);
    if (always_on_) {
      net_.acquire(bnc_port);
    } else {
      rederive();
    }
    for (const auto& od : net_.sc.on_demand) {
      const int target = net_.sc.node_index(od.target);
      const int tp = net_.nodes[static_cast<std::size_t>(target)].port;
      if (std::find(members_.begin(), members_.end(), tp) == members_.end()) continue;
      net_.engine.schedule(od.at, "on_demand", net_.bnc, [this, od, tp] { on_demand(od, tp, 1); });
    }
  }

  void frame_queued(int p) override {
    if (p == bnc_port) {
      for (const auto& f : net_.port(bnc_port).queue) {
        const int dst = f.next_port;
        if (net_.known_entries[static_cast<std::size_t>(net_.port(dst).node)].empty()) wake_for_downlink(dst);
      }
      return;
    }
    NodeSide& ns = side(p);
    if (!ns.em_active && has_emergency(p)) {
      ns.em_active = true;
      ns.em_tries = 0;
      signal_emergency(p);
    }
  }

 private:
  enum class Kind : int { Emergency = 0, OnDemand = 1, Window = 2 };

  struct Service {
    Kind kind = Kind::Window;
    int port = -1;
    SimTime expiry{};
    std::uint64_t order = 0;
  };

  struct NodeSide {
    EventHandle open_ev;
    bool in_window = false;
    bool window_ref = false;
    SimTime last_close{};
    bool em_active = false;
    int em_tries = 0;
    EventHandle em_timer;
    bool em_ref = false;
    bool od_ref = false;
    SimTime od_until{};
    bool dl_wake = false;
    std::shared_ptr<RngStream> loss;
  };

  const scenario::TbwProtocolConfig& cfg() const { return net_.sc.protocols.tbw; }
  NodeSide& side(int p) { return side_[static_cast<std::size_t>(p)]; }
  int node(int p) { return net_.port(p).node; }

  bool has_emergency(int p) {
    const auto& q = net_.port(p).queue;
    return std::any_of(q.begin(), q.end(), [](const QueuedFrame& f) { return f.mpdu.cls == TrafficClass::Emergency; });
  }

  // --- node windows ---------------------------------------------------------

  void plan_window(int p) {
    NodeSide& ns = side(p);
    if (ns.open_ev.valid()) net_.engine.cancel(ns.open_ev);
    ns.open_ev = {};
    if (ns.in_window || !net_.port_alive(p)) return;
    const SimTime from = std::max(net_.now(), ns.last_close);
    SimTime best = SimTime::never();
    SimTime width{};
    for (const auto& e : net_.known_entries[static_cast<std::size_t>(node(p))]) {
      const SimTime s = e.next_window_start(from);
      if (s < best) {
        best = s;
        width = e.window;
      } else if (s == best) {
        width = std::max(width, e.window);
      }
    }
    if (best.is_never()) return;
    ns.open_ev = net_.engine.schedule(best, "window_open", node(p), [this, p, best, width] { open_window(p, best, width); });
  }

  void open_window(int p, SimTime start, SimTime width) {
    NodeSide& ns = side(p);
    ns.open_ev = {};
    if (!net_.port_alive(p)) return;
    ns.in_window = true;
    net_.window_starts[static_cast<std::size_t>(node(p))].push_back(start);
    if (!ns.window_ref) {
      ns.window_ref = true;
      net_.acquire(p);
    }
    enqueue(Kind::Window, p, start + width);
    net_.engine.schedule(start + width, "window_close", node(p), [this, p] {
      NodeSide& s = side(p);
      s.in_window = false;
      s.last_close = net_.now();
      if (s.window_ref) {
        s.window_ref = false;
        net_.release(p);
      }
      plan_window(p);
    });
  }

  void learn(int p) {
    const auto n = static_cast<std::size_t>(node(p));
    if (net_.known_revision[n] == net_.table.revision()) return;
    net_.known_entries[n] = net_.table.entries_for(node(p));
    net_.known_revision[n] = net_.table.revision();
    plan_window(p);
    rederive();
  }

  /// Drops the node's wake holds once it has nothing left to send.
  void relax(int p) {
    NodeSide& ns = side(p);
    const auto& q = net_.port(p).queue;
    if (q.empty() && ns.window_ref) {
      ns.window_ref = false;
      net_.release(p);
    }
    if (!has_emergency(p)) stop_emergency(p);
    const bool od_left =
        std::any_of(q.begin(), q.end(), [](const QueuedFrame& f) { return is_on_demand(f.mpdu.cls); });
    if (!od_left && ns.od_ref) {
      ns.od_ref = false;
      net_.release(p);
    }
  }

  // --- BNC wake pattern ---------------------------------------------------

  void rederive() {
    if (always_on_) return;
    for (auto h : chain_) net_.engine.cancel(h);
    chain_.clear();
    std::vector<tbw::WakeupEntry> entries;
    for (int p : members_) {
      const auto& v = net_.known_entries[static_cast<std::size_t>(node(p))];
      entries.insert(entries.end(), v.begin(), v.end());
    }
    pattern_ = tbw::derive_bnc_pattern(table_of(entries), cfg().guard);
    if (pattern_.fallback) {
      if (pattern_ref_) {
        pattern_ref_ = false;
        net_.release(bnc_port);
      }
      for (const auto& e : entries) follow_entry(e, net_.now());
      return;
    }
    follow_pattern();
  }

  SimTime interval_end(SimTime now) const {
    const auto& iv = pattern_.intervals;
    const std::int64_t h = pattern_.hyperperiod.ticks();
    if (iv.size() == 1 && iv.front().start.ticks() == 0 && iv.front().end.ticks() == h) return SimTime::never();
    const std::int64_t phase = now.ticks() % h;
    const std::int64_t base = now.ticks() - phase;
    for (const auto& i : iv) {
      if (i.start.ticks() <= phase && phase < i.end.ticks()) {
        std::int64_t end = base + i.end.ticks();
        if (i.end.ticks() == h && iv.front().start.ticks() == 0) end += iv.front().end.ticks();
        return SimTime{end};
      }
    }
    return now;
  }

  void follow_pattern() {
    chain_.clear();
    if (pattern_.hyperperiod <= SimTime::zero() || pattern_.intervals.empty()) {
      if (pattern_ref_) {
        pattern_ref_ = false;
        net_.release(bnc_port);
      }
      return;
    }
    const SimTime now = net_.now();
    if (pattern_.awake_at(now)) {
      if (!pattern_ref_) {
        pattern_ref_ = true;
        net_.acquire(bnc_port);
      }
      const SimTime end = interval_end(now);
      if (end.is_never()) return;
      chain_.push_back(net_.engine.schedule(end, "bnc_sleep", net_.bnc, [this] {
        if (pattern_ref_) {
          pattern_ref_ = false;
          net_.release(bnc_port);
        }
        follow_pattern();
      }));
      return;
    }
    if (pattern_ref_) {
      pattern_ref_ = false;
      net_.release(bnc_port);
    }
    const SimTime next = pattern_.next_interval_start(now);
    if (!next.is_never()) chain_.push_back(net_.engine.schedule(next, "bnc_wake", net_.bnc, [this] { follow_pattern(); }));
  }

  // Periods without a usable hyperperiod: wake for each guarded window.
  void follow_entry(const tbw::WakeupEntry& e, SimTime from) {
    const SimTime s = e.next_window_start(from);
    if (s.is_never()) return;
    const SimTime wake = std::max(net_.now(), s - cfg().guard);
    const SimTime sleep = s + e.window + cfg().guard;
    chain_.push_back(net_.engine.schedule(wake, "bnc_wake", net_.bnc, [this, e, sleep, s] {
      net_.acquire(bnc_port);
      chain_.push_back(net_.engine.schedule(sleep, "bnc_sleep", net_.bnc, [this, e, s] {
        net_.release(bnc_port);
        follow_entry(e, s + SimTime{1});
      }));
    }));
  }

  // --- BNC services -------------------------------------------------------

  void enqueue(Kind kind, int p, SimTime expiry) {
    if (active_ && cur_.kind == kind && cur_.port == p) {
      cur_.expiry = std::max(cur_.expiry, expiry);
      return;
    }
    for (auto& s : pending_) {
      if (s.kind == kind && s.port == p) {
        s.expiry = std::max(s.expiry, expiry);
        return;
      }
    }
    pending_.push_back(Service{kind, p, expiry, next_order_++});
    kick();
  }

  bool higher_pending(Kind k) const {
    return std::any_of(pending_.begin(), pending_.end(), [k](const Service& s) { return s.kind < k; });
  }

  void kick() {
    if (active_ || !net_.port_alive(bnc_port)) return;
    const SimTime now = net_.now();
    std::erase_if(pending_, [&](const Service& s) { return s.expiry <= now || !net_.port_alive(s.port); });
    if (pending_.empty()) return;
    auto best = std::min_element(pending_.begin(), pending_.end(), [](const Service& a, const Service& b) {
      return a.kind != b.kind ? a.kind < b.kind : a.order < b.order;
    });
    cur_ = *best;
    pending_.erase(best);
    active_ = true;
    silence_ = 0;
    const std::uint64_t id = ++svc_id_;
    net_.acquire(bnc_port);
    net_.engine.schedule(now + net_.sc.mac.turnaround, "exchange", net_.bnc, [this, id] { step(id); });
    // Watchdog in case the peer vanished mid-exchange.
    const SimTime slack = net_.airtime_of(index_, channel_.mtu_bytes) * 2 + net_.sc.mac.ack_wait * 2;
    net_.engine.schedule(cur_.expiry + slack, "exchange_watchdog", net_.bnc, [this, id] {
      if (active_ && svc_id_ == id) end_service(id);
    });
  }

  void end_service(std::uint64_t id) {
    if (!active_ || svc_id_ != id) return;
    active_ = false;
    ++svc_id_;
    net_.release(bnc_port);
    kick();
  }

  void step_later(std::uint64_t id) {
    net_.engine.schedule(net_.now() + net_.sc.mac.turnaround, "exchange", net_.bnc, [this, id] { step(id); });
  }

  bool downlink_to_front(int p) {
    auto& q = net_.port(bnc_port).queue;
    auto it = std::find_if(q.begin(), q.end(), [p](const QueuedFrame& f) { return f.next_port == p; });
    if (it == q.end()) return false;
    std::rotate(q.begin(), it, it + 1);
    return true;
  }

  void step(std::uint64_t id) {
    if (!active_ || svc_id_ != id) return;
    if (!net_.port_alive(bnc_port)) return;
    const int p = cur_.port;
    const SimTime now = net_.now();
    if (now >= cur_.expiry || !net_.port_alive(p)) {
      end_service(id);
      return;
    }
    if (higher_pending(cur_.kind)) {
      pending_.push_back(cur_);
      end_service(id);
      return;
    }
    if (net_.port(bnc_port).transmitting) {
      step_later(id);
      return;
    }
    if (downlink_to_front(p)) {
      const QueuedFrame& f = *net_.head(bnc_port);
      if (now + net_.data_airtime(bnc_port, f) + net_.sc.mac.ack_wait <= cur_.expiry) {
        side(p).dl_wake = false;
        send_acked(bnc_port, [this, id](bool acked) {
          if (acked) {
            net_.pop_success(bnc_port);
          } else if (net_.head(bnc_port)->attempts > cfg().max_retries) {
            net_.pop_drop(bnc_port, DropReason::RetryLimit);
          }
          step_later(id);
        });
        return;
      }
    }
    const SimTime poll_air = net_.beacon_airtime(index_);
    if (now + poll_air + net_.sc.mac.turnaround + net_.ack_airtime(index_) > cur_.expiry) {
      end_service(id);
      return;
    }
    responded_ = false;
    net_.begin_tx(bnc_port, poll_air, false, "poll_tx", [this, p, id, deadline = cur_.expiry](TxId tx) {
      if (net_.resolve(p, tx) == DeliveryOutcome::Delivered) on_poll(p, id, deadline);
      net_.engine.schedule(net_.now() + net_.sc.mac.turnaround + SimTime{1}, "poll_check", net_.bnc, [this, id] {
        if (!active_ || svc_id_ != id || responded_) return;
        if (++silence_ > cfg().max_retries) {
          end_service(id);
        } else {
          step(id);
        }
      });
    });
  }

  // The poll tells the node how long the BNC stays with it; a frame whose
  // exchange would overrun that deadline waits for the next service.
  void on_poll(int p, std::uint64_t id, SimTime deadline) {
    learn(p);
    while (net_.head(p) != nullptr && net_.head(p)->attempts > cfg().max_retries) net_.pop_drop(p, DropReason::RetryLimit);
    net_.engine.schedule(net_.now() + net_.sc.mac.turnaround, "poll_reply", node(p), [this, p, id, deadline] {
      if (!net_.port_alive(p) || net_.port(p).transmitting) return;
      if (active_ && svc_id_ == id) responded_ = true;
      const QueuedFrame* h = net_.head(p);
      const bool fits = h != nullptr && net_.now() + net_.data_airtime(p, *h) + net_.sc.mac.ack_wait <= deadline;
      if (!fits) {
        net_.begin_tx(p, net_.ack_airtime(index_), false, "null_tx", [this, p, id](TxId tx) {
          const bool heard = net_.resolve(bnc_port, tx) == DeliveryOutcome::Delivered;
          relax(p);
          if (heard) {
            end_service(id);
          } else if (active_ && svc_id_ == id) {
            step_later(id);
          }
        });
        return;
      }
      send_acked(p, [this, p, id](bool acked) {
        if (acked) {
          net_.pop_success(p);
        } else if (net_.head(p)->attempts > cfg().max_retries) {
          net_.pop_drop(p, DropReason::RetryLimit);
        }
        relax(p);
        if (!active_ || svc_id_ != id) return;
        if (acked && net_.head(p) == nullptr && !downlink_pending(p)) {
          end_service(id);
        } else {
          step_later(id);
        }
      });
    });
  }

  bool downlink_pending(int p) {
    const auto& q = net_.port(bnc_port).queue;
    return std::any_of(q.begin(), q.end(), [p](const QueuedFrame& f) { return f.next_port == p; });
  }

  // --- emergencies --------------------------------------------------------

  void stop_emergency(int p) {
    NodeSide& ns = side(p);
    ns.em_active = false;
    if (ns.em_timer.valid()) net_.engine.cancel(ns.em_timer);
    ns.em_timer = {};
    if (ns.em_ref) {
      ns.em_ref = false;
      net_.release(p);
    }
  }

  void fail_emergency(int p) {
    auto& q = net_.port(p).queue;
    for (auto it = q.begin(); it != q.end();) {
      if (it->mpdu.cls == TrafficClass::Emergency && !(it == q.begin() && net_.port(p).transmitting)) {
        const bridge::Mpdu m = it->mpdu;
        it = q.erase(it);
        net_.drop_record(m, DropReason::EmergencyFailure);
      } else {
        ++it;
      }
    }
    stop_emergency(p);
  }

  void signal_emergency(int p) {
    NodeSide& ns = side(p);
    ns.em_timer = {};
    if (!net_.port_alive(p)) return;
    if (!has_emergency(p)) {
      stop_emergency(p);
      return;
    }
    const auto& w = cfg().wakeup;
    const int n = node(p);
    if (active_ && cur_.port == p) {
      ns.em_timer = net_.engine.schedule(net_.now() + w.retry_timeout, "em_retry", n, [this, p] { signal_emergency(p); });
      return;
    }
    if (ns.em_tries >= w.max_tries) {
      fail_emergency(p);
      return;
    }
    if (net_.nodes[static_cast<std::size_t>(n)].wake_tx) {
      ns.em_timer = net_.engine.schedule(net_.now() + w.signal_duration, "em_retry", n, [this, p] { signal_emergency(p); });
      return;
    }
    ++ns.em_tries;
    const SimTime jitter{net_.port(p).rng->uniform_int(0, w.retry_jitter.ticks())};
    ns.em_timer =
        net_.engine.schedule(net_.now() + w.retry_timeout + jitter, "em_retry", n, [this, p] { signal_emergency(p); });
    net_.begin_signal(n, w.signal_duration, [this, p](TxId tx) {
      NodeSide& s = side(p);
      if (!s.em_active) return;
      if (!s.em_ref) {
        s.em_ref = true;
        net_.acquire(p);
      }
      const bool heard = net_.resolve_signal(net_.bnc, tx) == DeliveryOutcome::Delivered &&
                         !s.loss->bernoulli(cfg().wakeup.signal_loss);
      if (heard) enqueue(Kind::Emergency, p, net_.now() + cfg().wakeup.retry_timeout);
    });
  }

  // --- BNC-initiated wakeups ----------------------------------------------

  void hold_for_poll(int p) {
    NodeSide& ns = side(p);
    ns.od_until = net_.now() + cfg().poll_timeout;
    if (!ns.od_ref) {
      ns.od_ref = true;
      net_.acquire(p);
    }
    net_.engine.schedule(ns.od_until, "poll_timeout", node(p), [this, p] {
      NodeSide& s = side(p);
      if (s.od_ref && net_.now() >= s.od_until) {
        s.od_ref = false;
        net_.release(p);
      }
    });
    enqueue(Kind::OnDemand, p, ns.od_until);
  }

  /// Wakeup signal from the BNC to `target`; `on_woken` runs at the target
  /// once the signal got through, after up to max_tries attempts.
  void bnc_signal(int target, tbw::Addressing addressing, int attempt, std::function<void()> on_woken) {
    const auto& w = cfg().wakeup;
    if (!net_.port_alive(bnc_port) || !net_.port_alive(target)) return;
    if (net_.nodes[static_cast<std::size_t>(net_.bnc)].wake_tx) {
      net_.engine.schedule(net_.now() + w.signal_duration, "bnc_signal", net_.bnc,
                           [this, target, addressing, attempt, on_woken] { bnc_signal(target, addressing, attempt, on_woken); });
      return;
    }
    const SimTime started = net_.now();
    net_.begin_signal(net_.bnc, w.signal_duration, [this, target, addressing, attempt, on_woken, started](TxId tx) {
      tbw::WakeupSignal sig;
      sig.direction = tbw::SignalDirection::BncToNode;
      sig.addressing = addressing;
      sig.addressed_node = node(target);
      sig.purpose = tbw::SignalPurpose::OnDemand;
      std::vector<int> all;
      for (int p : members_) all.push_back(node(p));
      const auto woken = tbw::woken_nodes(sig, all);
      const SimTime brief = net_.sc.mac.turnaround * 2 + net_.beacon_airtime(index_);
      for (int p : members_) {
        if (p == target || !net_.port_alive(p)) continue;
        if (std::find(woken.begin(), woken.end(), node(p)) == woken.end()) continue;
        if (net_.resolve_signal(node(p), tx) != DeliveryOutcome::Delivered) continue;
        net_.acquire(p);
        net_.engine.schedule(net_.now() + brief, "wake_release", node(p), [this, p] { net_.release(p); });
      }
      const bool got = std::find(woken.begin(), woken.end(), node(target)) != woken.end() &&
                       net_.resolve_signal(node(target), tx) == DeliveryOutcome::Delivered &&
                       !side(target).loss->bernoulli(cfg().wakeup.signal_loss);
      if (got) {
        on_woken();
      } else if (attempt < cfg().wakeup.max_tries) {
        net_.engine.schedule(started + cfg().wakeup.retry_timeout, "bnc_signal", net_.bnc,
                             [this, target, addressing, attempt, on_woken] {
                               bnc_signal(target, addressing, attempt + 1, on_woken);
                             });
      }
    });
  }

  void on_demand(const scenario::OnDemandEntry& od, int target, int attempt) {
    const int n = node(target);
    const auto req = issue_on_demand(n, static_cast<int>(net_.nodes.size()), od.mode, od.duration, od.stream_period);
    const auto offsets = req.response_offsets();
    const TrafficClass cls = req.response_class();
    bnc_signal(target, od.addressing, attempt, [this, target, n, cls, offsets] {
      const SimTime base = net_.now();
      for (std::size_t i = 0; i < offsets.size(); ++i) {
        auto respond = [this, target, n, cls] {
          if (!net_.port_alive(target)) return;
          net_.generate(n, cls, net_.bnc, 128);
          hold_for_poll(target);
        };
        if (i == 0) {
          respond();
        } else {
          net_.engine.schedule(base + offsets[i] - offsets[0], "on_demand", n, respond);
        }
      }
    });
  }

  void wake_for_downlink(int dst) {
    NodeSide& ns = side(dst);
    if (ns.dl_wake || ns.od_ref || ns.em_ref) return;
    ns.dl_wake = true;
    bnc_signal(dst, tbw::Addressing::Tone, 1, [this, dst] { hold_for_poll(dst); });
  }

  bool always_on_;
  std::vector<int> members_;
  std::vector<NodeSide> side_;
  tbw::BncPattern pattern_;
  bool pattern_ref_ = false;
  std::vector<EventHandle> chain_;

  std::vector<Service> pending_;
  Service cur_;
  bool active_ = false;
  bool responded_ = false;
  int silence_ = 0;
  std::uint64_t svc_id_ = 0;
  std::uint64_t next_order_ = 0;
};

}  // namespace

std::unique_ptr<Cell> make_tbw_cell(Net& net, int index, const scenario::ChannelConfig& ch, std::unique_ptr<Medium> m,
                                    bool always_on) {
  return std::make_unique<TbwCell>(net, index, ch, std::move(m), always_on);
}

}  // namespace bsn::net::detail
