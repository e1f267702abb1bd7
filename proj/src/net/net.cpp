#include "net.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace bsn::net::detail {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void insert_by_priority(std::deque<QueuedFrame>& q, QueuedFrame f) {
  // A frame already on the air (attempts > 0) keeps the head position.
  auto first = q.begin();
  if (first != q.end() && first->attempts > 0) ++first;
  const int pr = priority(f.mpdu.cls);
  auto it = std::find_if(first, q.end(), [&](const QueuedFrame& o) { return priority(o.mpdu.cls) < pr; });
  q.insert(it, std::move(f));
}

Net::Net(const scenario::Scenario& s, scenario::Protocol p, std::uint64_t sd) : sc(s), protocol(p), seed(sd) {
  build();
}

Net::~Net() = default;

void Net::build() {
  bnc = sc.bnc_index();
  channel_map = scenario::build_channel_map(sc);
  route_ctx = scenario::route_context(sc);
  const auto& profiles = sc.profiles_for(protocol);

  nodes.resize(sc.nodes.size());
  for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
    const auto& nc = sc.nodes[i];
    nodes[i].name = nc.id;
    nodes[i].role = nc.role;
    nodes[i].battery = std::make_unique<NodeBattery>(sc.energy.of(nc.role));
  }

  // One cell per channel that carries at least one interface.
  std::vector<ChannelId> used;
  for (const auto& ch : sc.channels) {
    bool any = false;
    for (const auto& n : sc.nodes) any = any || std::find(n.interfaces.begin(), n.interfaces.end(), ch.id) != n.interfaces.end();
    if (any) used.push_back(ch.id);
  }
  for (std::size_t c = 0; c < used.size(); ++c) {
    const auto& ch = sc.channel(used[c]);
    auto medium = std::make_unique<Medium>(ch.id, sc.propagation.medium, seed);
    const int idx = static_cast<int>(c);
    switch (protocol) {
      case scenario::Protocol::Csma802154: cells.push_back(make_csma_cell(*this, idx, ch, std::move(medium))); break;
      case scenario::Protocol::PbTdma: cells.push_back(make_tdma_cell(*this, idx, ch, std::move(medium))); break;
      case scenario::Protocol::Smac: cells.push_back(make_smac_cell(*this, idx, ch, std::move(medium))); break;
      case scenario::Protocol::Tbw: cells.push_back(make_tbw_cell(*this, idx, ch, std::move(medium), false)); break;
      case scenario::Protocol::TbwAlwaysOn: cells.push_back(make_tbw_cell(*this, idx, ch, std::move(medium), true)); break;
    }
    cells.back()->medium().on_activity([this, idx](int mport) { on_activity(idx, mport); });
  }

  for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
    const auto& nc = sc.nodes[i];
    const PowerProfile& prof = profiles.of(nc.role);
    for (const auto& ifc : nc.interfaces) {
      const auto cit = std::find(used.begin(), used.end(), ifc);
      const int c = static_cast<int>(cit - used.begin());
      Cell& cell = *cells[static_cast<std::size_t>(c)];
      Port p;
      p.node = static_cast<int>(i);
      p.cell = c;
      p.profile = prof;
      p.mport = cell.medium().attach(PortInfo{static_cast<int>(i), nc.position, nc.site, nc.role == scenario::Role::InBody,
                                              prof.sensitivity_dbm});
      p.radio = nodes[i].battery->add_radio(prof, RadioState::Sleep, SimTime::zero());
      p.rng = std::make_unique<RngStream>(seed, fmt::format("mac/{}/{}", i, to_string(ifc)));
      const int pid = static_cast<int>(ports.size());
      ports.push_back(std::move(p));
      cell.ports.push_back(pid);
      cell.port_of_mport.push_back(pid);
      nodes[i].ports.push_back(pid);
      if (static_cast<int>(i) == bnc) {
        cell.bnc_port = pid;
      } else {
        nodes[i].port = pid;
      }
    }
  }

  const auto& bnc_ifs = sc.nodes[static_cast<std::size_t>(bnc)].interfaces;
  if (std::set<ChannelId>(bnc_ifs.begin(), bnc_ifs.end()).size() >= 2) {
    bridge = std::make_unique<bridge::BridgeState>(bnc, bnc_ifs, sc.mac.bridge_capacity);
  }

  if (scenario::uses_wakeup_radio(protocol)) {
    const auto& w = sc.protocols.tbw.wakeup;
    wake_medium = std::make_unique<Medium>(ChannelId{Band::ISM_2_4, 250}, sc.propagation.medium, seed);
    wake_medium->on_activity([this](int mport) {
      const int n = wake_node_of_mport[static_cast<std::size_t>(mport)];
      Node& node = nodes[static_cast<std::size_t>(n)];
      if (!node.alive) return;
      settle_node(n);
      if (!node.alive) return;
      if (!node.wake_tx) {
        node.battery->set_state(node.wake_radio, wake_medium->detecting(mport) > 0 ? RadioState::Rx : RadioState::Idle);
      }
      refresh_death(n);
    });
    for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
      const auto& nc = sc.nodes[i];
      const PowerProfile& data = profiles.of(nc.role);
      PowerProfile wp;
      wp.sleep_mw = 0.0;
      wp.idle_listen_mw = data.wakeup_rx_uw / 1000.0;
      wp.rx_mw = wp.idle_listen_mw;
      wp.tx_mw = data.tx_mw;
      wp.wakeup_rx_uw = data.wakeup_rx_uw;
      wp.tx_dbm = w.tx_dbm;
      wp.sensitivity_dbm = w.sensitivity_dbm;
      nodes[i].wake_mport = wake_medium->attach(
          PortInfo{static_cast<int>(i), nc.position, nc.site, nc.role == scenario::Role::InBody, w.sensitivity_dbm});
      wake_node_of_mport.push_back(static_cast<int>(i));
      nodes[i].wake_radio = nodes[i].battery->add_radio(wp, RadioState::Idle, SimTime::zero());
      wake_medium->set_listening(nodes[i].wake_mport, true, SimTime::zero());
    }
  }

  known_revision.assign(nodes.size(), 0);
  known_entries.assign(nodes.size(), {});
  window_starts.assign(nodes.size(), {});
}

SimTime Net::airtime_of(int cell, std::int64_t bytes) const {
  return airtime(bytes, cells[static_cast<std::size_t>(cell)]->channel().data_rate_bps);
}

SimTime Net::data_airtime(int p, const QueuedFrame& f) const {
  return airtime_of(ports[static_cast<std::size_t>(p)].cell, f.mpdu.payload_bytes);
}

void Net::on_activity(int cell, int mport) {
  update_radio(cells[static_cast<std::size_t>(cell)]->port_of_mport[static_cast<std::size_t>(mport)]);
}

void Net::settle_node(int n) {
  Node& node = nodes[static_cast<std::size_t>(n)];
  if (!node.alive) return;
  if (auto died = node.battery->settle(now())) kill(n, *died);
}

void Net::update_radio(int p) {
  Port& pt = port(p);
  Node& node = nodes[static_cast<std::size_t>(pt.node)];
  if (!node.alive) return;
  settle_node(pt.node);
  if (!node.alive) return;
  const Medium& m = cell_of(p).medium();
  RadioState st = RadioState::Sleep;
  if (pt.transmitting) {
    st = RadioState::Tx;
  } else if (m.listening(pt.mport)) {
    st = m.detecting(pt.mport) > 0 ? RadioState::Rx : RadioState::Idle;
  }
  node.battery->set_state(pt.radio, st);
  refresh_death(pt.node);
}

void Net::refresh_death(int n) {
  Node& node = nodes[static_cast<std::size_t>(n)];
  if (!node.alive) return;
  const SimTime at = node.battery->projected_death();
  if (at > run_until) {
    if (node.death_event.valid()) engine.cancel(node.death_event);
    node.death_event = {};
    node.death_at = SimTime::never();
    return;
  }
  if (node.death_event.valid() && engine.pending(node.death_event) && node.death_at == at) return;
  if (node.death_event.valid()) engine.cancel(node.death_event);
  node.death_at = at;
  node.death_event = engine.schedule(at, "death", n, [this, n] {
    nodes[static_cast<std::size_t>(n)].death_event = {};
    settle_node(n);
    refresh_death(n);
  });
}

void Net::kill(int n, SimTime at) {
  Node& node = nodes[static_cast<std::size_t>(n)];
  if (!node.alive) return;
  node.alive = false;
  node.died_at = at;
  if (node.death_event.valid()) engine.cancel(node.death_event);
  node.death_event = {};
  for (int p : node.ports) {
    Port& pt = port(p);
    pt.want_listen = false;
    pt.wake_refs = 0;
    cell_of(p).medium().set_listening(pt.mport, false, now());
    while (!pt.queue.empty()) pop_drop(p, DropReason::NodeDeath);
  }
  if (wake_medium && node.wake_mport >= 0) wake_medium->set_listening(node.wake_mport, false, now());
}

void Net::set_listen(int p, bool on) {
  Port& pt = port(p);
  pt.want_listen = on;
  if (pt.transmitting || !node_of(p).alive) return;
  Medium& m = cell_of(p).medium();
  if (m.listening(pt.mport) != on) {
    m.set_listening(pt.mport, on, now());
    update_radio(p);
  }
}

void Net::acquire(int p) {
  ++port(p).wake_refs;
  set_listen(p, true);
}

void Net::release(int p) {
  Port& pt = port(p);
  if (pt.wake_refs > 0) --pt.wake_refs;
  set_listen(p, pt.wake_refs > 0);
}

TxId Net::begin_tx(int p, SimTime air, bool data, std::string_view kind, std::function<void(TxId)> on_end) {
  Port& pt = port(p);
  if (pt.transmitting) throw std::logic_error("radio already transmitting");
  Medium& m = cell_of(p).medium();
  pt.transmitting = true;
  m.set_listening(pt.mport, false, now());
  const TxId tx = m.begin(pt.mport, pt.profile.tx_dbm, now(), air, data);
  update_radio(p);
  engine.schedule(now() + air, kind, pt.node, [this, p, tx, cb = std::move(on_end)] {
    Port& q = port(p);
    Medium& med = cell_of(p).medium();
    q.transmitting = false;
    if (!node_of(p).alive) {
      med.finish(tx, now());
      return;
    }
    if (q.want_listen) med.set_listening(q.mport, true, now());
    update_radio(p);
    if (cb) cb(tx);
    med.finish(tx, now());
  });
  return tx;
}

DeliveryOutcome Net::resolve(int rx, TxId tx) {
  if (!port_alive(rx)) return DeliveryOutcome::OffChannel;
  return cell_of(rx).medium().resolve(tx, port(rx).mport);
}

TxId Net::begin_signal(int n, SimTime duration, std::function<void(TxId)> on_end) {
  Node& node = nodes[static_cast<std::size_t>(n)];
  settle_node(n);
  node.wake_tx = true;
  wake_medium->set_listening(node.wake_mport, false, now());
  const TxId tx = wake_medium->begin(node.wake_mport, sc.protocols.tbw.wakeup.tx_dbm, now(), duration, false);
  if (node.alive) {
    node.battery->set_state(node.wake_radio, RadioState::Tx);
    refresh_death(n);
  }
  engine.schedule(now() + duration, "wake_signal", n, [this, n, tx, cb = std::move(on_end)] {
    Node& nd = nodes[static_cast<std::size_t>(n)];
    nd.wake_tx = false;
    if (nd.alive) {
      settle_node(n);
    }
    if (nd.alive) {
      wake_medium->set_listening(nd.wake_mport, true, now());
      nd.battery->set_state(nd.wake_radio,
                            wake_medium->detecting(nd.wake_mport) > 0 ? RadioState::Rx : RadioState::Idle);
      refresh_death(n);
      if (cb) cb(tx);
    }
    wake_medium->finish(tx, now());
  });
  return tx;
}

DeliveryOutcome Net::resolve_signal(int n, TxId tx) {
  const Node& node = nodes[static_cast<std::size_t>(n)];
  if (!node.alive) return DeliveryOutcome::OffChannel;
  return wake_medium->resolve(tx, node.wake_mport);
}

QueuedFrame* Net::head(int p) {
  auto& q = port(p).queue;
  return q.empty() ? nullptr : &q.front();
}

bool Net::receive_data(int rx, const QueuedFrame& f) {
  const int n = port(rx).node;
  Node& node = nodes[static_cast<std::size_t>(n)];
  const std::uint64_t key = frame_key(f.mpdu.src, f.mpdu.seq);
  if (!node.seen.insert(key).second) return false;
  bridge::Mpdu m = f.mpdu;
  m.hop_trace.push_back(bridge::Hop{n, cell_of(rx).channel().id});
  auto& rec = records.at(key);
  ++rec.received_hops;

  if (m.dst == n) {
    if (rec.status == FrameRecord::Status::InFlight) {
      rec.status = FrameRecord::Status::Delivered;
      auto& c = counts[index_of(m.cls)];
      ++c.delivered;
      latencies.push_back(metrics::LatencySample{m.cls, now() - m.created_at});
      delivered_bits += static_cast<std::uint64_t>(m.payload_bytes) * 8;
    }
    if (m.payload_digest != rec.digest || m.cls != rec.cls) ++transparency_violations;
    if (route_ctx.in_body.contains(m.src) || route_ctx.in_body.contains(m.dst)) {
      const bool bridged = std::any_of(m.hop_trace.begin(), m.hop_trace.end(), [&](const bridge::Hop& h) {
        return h.node == bnc && h.node != m.src && h.node != m.dst;
      });
      if (!bridged && m.src != bnc && m.dst != bnc) ++missing_bridge_hops;
    }
    if (recording) deliveries.push_back(Delivery{m, now()});
    return true;
  }

  if (n != bnc || !bridge) throw std::logic_error("frame reached a node that cannot relay it");
  const int dst_port = nodes[static_cast<std::size_t>(m.dst)].port;
  const ChannelId egress = cell_of(dst_port).channel().id;
  int out = -1;
  for (int p : node.ports) {
    if (cell_of(p).channel().id == egress) out = p;
  }
  if (out < 0) throw std::logic_error("bridge has no egress interface");
  if (!bridge->relay(m, cell_of(rx).channel().id)) {
    drop_record(m, DropReason::BridgeOverflow, true);
    return true;
  }
  QueuedFrame q{bridge->store().back(), dst_port, 0, SimTime{}};
  insert_by_priority(port(out).queue, std::move(q));
  cell_of(out).frame_queued(out);
  return true;
}

void Net::pop_success(int p) {
  auto& q = port(p).queue;
  QueuedFrame f = std::move(q.front());
  q.pop_front();
  if (is_bnc_port(p) && bridge) bridge->complete(f.mpdu.src, f.mpdu.seq, true);
  if (f.mpdu.cls == TrafficClass::Emergency && !is_bnc_port(p)) emergency_access.push_back(f.last_tx_start - f.mpdu.created_at);
}

void Net::pop_unacked(int p, bool received) {
  auto& q = port(p).queue;
  QueuedFrame f = std::move(q.front());
  q.pop_front();
  if (is_bnc_port(p) && bridge) bridge->complete(f.mpdu.src, f.mpdu.seq, true);
  if (!received) drop_record(f.mpdu, DropReason::ChannelLoss);
}

void Net::pop_drop(int p, DropReason reason) {
  auto& q = port(p).queue;
  QueuedFrame f = std::move(q.front());
  q.pop_front();
  if (is_bnc_port(p) && bridge) bridge->complete(f.mpdu.src, f.mpdu.seq, false);
  drop_record(f.mpdu, reason);
}

void Net::drop_record(const bridge::Mpdu& m, DropReason reason, bool force) {
  auto& rec = records.at(frame_key(m.src, m.seq));
  if (rec.status != FrameRecord::Status::InFlight) return;
  if (!force && rec.received_hops > static_cast<int>(m.hop_trace.size())) return;
  rec.status = FrameRecord::Status::Dropped;
  ++counts[index_of(m.cls)].dropped;
  switch (reason) {
    case DropReason::QueueOverflow: ++queue_drops; break;
    case DropReason::ChannelAccess: ++caf; break;
    case DropReason::RetryLimit: ++retry_drops; break;
    case DropReason::ChannelLoss: ++channel_losses; break;
    case DropReason::BridgeOverflow: ++bridge_drops; break;
    case DropReason::NodeDeath: ++death_drops; break;
    case DropReason::EmergencyFailure: ++emergency_failures; break;
  }
}

void Net::generate(int n, TrafficClass cls, int dst, std::int64_t payload) {
  Node& node = nodes[static_cast<std::size_t>(n)];
  if (!node.alive) return;
  bridge::Mpdu m;
  m.seq = node.next_seq++;
  m.src = n;
  m.dst = dst;
  m.cls = cls;
  m.payload_bytes = payload;
  m.payload_digest = mix64(seed ^ mix64(frame_key(n, m.seq)));
  m.created_at = now();
  records.emplace(frame_key(n, m.seq), FrameRecord{cls, m.payload_digest});
  if (recording) generated_frames.push_back(m);
  ++counts[index_of(cls)].generated;
  const int src_port = node.port;
  const int next = cell_of(src_port).bnc_port;
  enqueue_at_source(n, QueuedFrame{std::move(m), next, 0, SimTime{}});
}

void Net::enqueue_at_source(int n, QueuedFrame f) {
  const int p = nodes[static_cast<std::size_t>(n)].port;
  auto& q = port(p).queue;
  if (q.size() >= sc.mac.queue_capacity) {
    // Evict the newest lowest-priority frame that is not on the air, if the
    // arrival outranks it; otherwise the arrival is dropped.
    auto victim = q.end();
    for (auto it = q.begin(); it != q.end(); ++it) {
      if (it->attempts > 0) continue;
      if (victim == q.end() || priority(it->mpdu.cls) <= priority(victim->mpdu.cls)) victim = it;
    }
    if (victim == q.end() || priority(victim->mpdu.cls) >= priority(f.mpdu.cls)) {
      drop_record(f.mpdu, DropReason::QueueOverflow);
      return;
    }
    const bridge::Mpdu evicted = victim->mpdu;
    q.erase(victim);
    drop_record(evicted, DropReason::QueueOverflow);
  }
  insert_by_priority(q, std::move(f));
  cell_of(p).frame_queued(p);
}

void Net::start_traffic() {
  for (std::size_t i = 0; i < sc.traffic.size(); ++i) {
    const auto& e = sc.traffic[i];
    const int src = sc.node_index(e.node);
    const int dst = e.dst.empty() ? bnc : sc.node_index(e.dst);
    TrafficSpec spec{src, dst, e.cls, e.period, e.rate_per_s, e.payload_bytes, e.start_offset};
    if (e.cls == TrafficClass::Emergency) {
      auto rng = std::make_shared<RngStream>(seed, fmt::format("traffic/{}/{}", i, e.node));
      auto fire = std::make_shared<std::function<void()>>();
      *fire = [this, spec, rng, fire] {
        generate(spec.node, spec.cls, spec.dst, spec.payload_bytes);
        if (!nodes[static_cast<std::size_t>(spec.node)].alive) return;
        const SimTime next = next_emergency(spec.rate_per_s, *rng, now());
        if (!next.is_never()) engine.schedule(next, "generate", spec.node, [fire] { (*fire)(); });
      };
      const SimTime first = next_emergency(spec.rate_per_s, *rng, spec.start_offset);
      if (!first.is_never()) engine.schedule(first, "generate", src, [fire] { (*fire)(); });
    } else {
      auto fire = std::make_shared<std::function<void()>>();
      *fire = [this, spec, fire] {
        generate(spec.node, spec.cls, spec.dst, spec.payload_bytes);
        if (!nodes[static_cast<std::size_t>(spec.node)].alive) return;
        engine.schedule(next_normal_arrival(spec, now()), "generate", spec.node, [fire] { (*fire)(); });
      };
      engine.schedule(spec.start_offset, "generate", src, [fire] { (*fire)(); });
    }
  }

  if (!scenario::uses_wakeup_radio(protocol)) {
    // Without a wakeup channel the request rides on the regular downlink;
    // responses appear at the target at the request instants.
    for (const auto& od : sc.on_demand) {
      const int target = sc.node_index(od.target);
      const auto req = issue_on_demand(target, static_cast<int>(nodes.size()), od.mode, od.duration, od.stream_period);
      for (SimTime off : req.response_offsets()) {
        engine.schedule(od.at + off, "on_demand", target,
                        [this, target, cls = req.response_class()] { generate(target, cls, bnc, 128); });
      }
    }
  }
}

void Net::start() {
  start_traffic();
  for (auto& c : cells) c->start();
}

metrics::RunMetrics Net::snapshot() {
  for (std::size_t n = 0; n < nodes.size(); ++n) settle_node(static_cast<int>(n));
  metrics::RunMetrics r;
  r.protocol = std::string(scenario::to_string(protocol));
  r.seed = seed;
  r.horizon = now();
  r.per_class = counts;
  for (auto& c : r.per_class) c.in_flight = 0;
  for (const auto& [key, rec] : records) {
    (void)key;
    if (rec.status == FrameRecord::Status::InFlight) ++r.per_class[index_of(rec.cls)].in_flight;
  }
  r.latency_samples = latencies;
  r.emergency_access_delays = emergency_access;
  for (const auto& c : cells) {
    r.collisions += c->medium().collisions();
    r.control_collisions += c->medium().control_collisions();
  }
  if (wake_medium) r.control_collisions += wake_medium->collisions() + wake_medium->control_collisions();
  r.bridge_drops = bridge_drops;
  r.queue_drops = queue_drops;
  r.channel_access_failures = caf;
  r.retry_drops = retry_drops;
  r.channel_losses = channel_losses;
  r.emergency_failures = emergency_failures;
  r.delivered_bits = delivered_bits;
  r.events = engine.dispatched();
  for (const auto& node : nodes) {
    metrics::NodeReport nr;
    nr.name = node.name;
    nr.initial_j = node.battery->initial();
    nr.consumed_j = node.battery->consumed();
    nr.death_time = node.died_at;
    nr.lifetime_ticks = node.battery->accounted_until().ticks();
    for (std::size_t i = 0; i < node.battery->radios(); ++i) {
      const auto& led = node.battery->ledger(i);
      metrics::RadioEnergy re;
      re.radio = (i == node.wake_radio) ? std::string("wakeup") : std::string();
      for (int p : node.ports) {
        if (ports[static_cast<std::size_t>(p)].radio == i) re.radio = to_string(cells[static_cast<std::size_t>(ports[static_cast<std::size_t>(p)].cell)]->channel().id);
      }
      re.consumed_j = led.consumed();
      re.recomputed_j = led.recomputed_j();
      for (std::size_t s = 0; s < kRadioStateCount; ++s) re.state_ticks[s] = led.ticks_in(static_cast<RadioState>(s));
      nr.radios.push_back(std::move(re));
    }
    r.nodes.push_back(std::move(nr));
  }
  return r;
}

Conservation Net::conservation() const {
  Conservation c;
  std::array<std::uint64_t, kTrafficClassCount> in_flight{};
  std::uint64_t total_in_flight = 0;
  for (const auto& [key, rec] : records) {
    (void)key;
    if (rec.status == FrameRecord::Status::InFlight) {
      ++in_flight[index_of(rec.cls)];
      ++total_in_flight;
    }
  }
  c.holds = true;
  for (std::size_t i = 0; i < kTrafficClassCount; ++i) {
    const auto& k = counts[i];
    if (k.delivered + k.dropped + in_flight[i] != k.generated) c.holds = false;
  }
  // A frame whose ack was lost can sit in a queue after its delivery, so
  // only distinct frames still recorded as in flight are counted.
  std::set<std::uint64_t> held;
  auto hold = [&](const bridge::Mpdu& m) {
    const auto key = frame_key(m.src, m.seq);
    const auto it = records.find(key);
    if (it != records.end() && it->second.status == FrameRecord::Status::InFlight) held.insert(key);
  };
  if (bridge) {
    for (const auto& m : bridge->store()) hold(m);
  }
  for (std::size_t p = 0; p < ports.size(); ++p) {
    if (ports[p].node == bnc) continue;
    for (const auto& f : ports[p].queue) hold(f.mpdu);
  }
  c.in_flight_matches = held.size() == total_in_flight;
  c.bridge_conserved = !bridge || bridge->conserved();
  return c;
}

}  // namespace bsn::net::detail
