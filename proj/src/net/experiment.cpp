#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "net.hpp"

namespace bsn::net {

Network::Network(const scenario::Scenario& s, scenario::Protocol protocol, std::uint64_t seed)
    : net_(std::make_unique<detail::Net>(s, protocol, seed)) {
  net_->start();
}

Network::~Network() = default;

void Network::set_trace(std::ostream* sink) { net_->engine.set_trace(sink); }
void Network::record_deliveries(bool on) { net_->recording = on; }

void Network::run(SimTime until) {
  if (until < net_->now()) throw std::invalid_argument("cannot run backwards");
  net_->run_until = until;
  for (std::size_t n = 0; n < net_->nodes.size(); ++n) {
    net_->settle_node(static_cast<int>(n));
    net_->refresh_death(static_cast<int>(n));
  }
  net_->engine.run(until);
}

SimTime Network::now() const { return net_->now(); }
metrics::RunMetrics Network::metrics() { return net_->snapshot(); }
const std::vector<Delivery>& Network::deliveries() const { return net_->deliveries; }
const std::vector<bridge::Mpdu>& Network::generated() const { return net_->generated_frames; }
Conservation Network::conservation() const { return net_->conservation(); }
const bridge::BridgeState* Network::bridge() const { return net_->bridge.get(); }
const tbw::WakeupTable& Network::wakeup_table() const { return net_->table; }

tbw::BncPattern Network::bnc_pattern() const {
  return net_->pattern_fn ? net_->pattern_fn() : tbw::BncPattern{};
}

std::uint64_t Network::known_revision(const std::string& node) const {
  return net_->known_revision.at(static_cast<std::size_t>(net_->sc.node_index(node)));
}

const std::vector<SimTime>& Network::window_starts(const std::string& node) const {
  return net_->window_starts.at(static_cast<std::size_t>(net_->sc.node_index(node)));
}

metrics::RunMetrics run_once(const scenario::Scenario& s, scenario::Protocol protocol, std::uint64_t seed,
                             std::optional<SimTime> until, std::ostream* trace) {
  Network n(s, protocol, seed);
  n.set_trace(trace);
  n.run(until.value_or(s.horizon));
  return n.metrics();
}

std::vector<metrics::RunMetrics> run_replications(const scenario::Scenario& s, scenario::Protocol protocol,
                                                  std::optional<int> reps, std::optional<SimTime> until) {
  auto seeds = s.replication_seeds();
  if (reps) {
    if (*reps < 1) throw std::invalid_argument("replications must be positive");
    if (static_cast<std::size_t>(*reps) < seeds.size()) {
      seeds.resize(static_cast<std::size_t>(*reps));
    } else {
      for (auto next = seeds.empty() ? 1 : seeds.back() + 1; seeds.size() < static_cast<std::size_t>(*reps); ++next) {
        seeds.push_back(next);
      }
    }
  }
  std::vector<metrics::RunMetrics> runs;
  runs.reserve(seeds.size());
  for (auto seed : seeds) runs.push_back(run_once(s, protocol, seed, until));
  return runs;
}

std::vector<std::pair<std::string, metrics::Aggregate>> compare_protocols(const scenario::Scenario& s,
                                                                          const std::vector<scenario::Protocol>& protocols,
                                                                          std::optional<int> reps,
                                                                          std::optional<SimTime> until) {
  if (protocols.size() < 2) throw std::invalid_argument("comparison needs at least two protocols");
  std::vector<std::pair<std::string, metrics::Aggregate>> out;
  for (auto p : protocols) {
    const auto runs = run_replications(s, p, reps, until);
    out.emplace_back(std::string(scenario::to_string(p)), metrics::aggregate(runs));
  }
  return out;
}

std::vector<LinkProbe> probe_links(const scenario::Scenario& s, std::uint64_t seed, std::uint64_t frames) {
  std::vector<LinkProbe> out;
  const std::size_t n = s.nodes.size();
  // The probe uses the default profiles; only the geometry and the link model matter.
  const auto& profiles = s.power_profiles;
  for (const auto& ch : s.channels) {
    std::vector<int> members;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ifs = s.nodes[i].interfaces;
      if (std::find(ifs.begin(), ifs.end(), ch.id) != ifs.end()) members.push_back(static_cast<int>(i));
    }
    if (members.size() < 2) continue;
    Medium m(ch.id, s.propagation.medium, seed);
    std::vector<int> port(n, -1);
    for (int i : members) {
      const auto& nc = s.nodes[static_cast<std::size_t>(i)];
      port[static_cast<std::size_t>(i)] = m.attach(
          PortInfo{i, nc.position, nc.site, nc.role == scenario::Role::InBody, profiles.of(nc.role).sensitivity_dbm});
      m.set_listening(port[static_cast<std::size_t>(i)], true, SimTime::zero());
    }
    const SimTime air = airtime(ch.mtu_bytes, ch.data_rate_bps);
    SimTime t = SimTime::from_ms(1);
    for (int a : members) {
      for (int b : members) {
        if (a == b) continue;
        const auto& na = s.nodes[static_cast<std::size_t>(a)];
        LinkProbe probe{na.site, s.nodes[static_cast<std::size_t>(b)].site, 0, 0};
        const double tx_dbm = profiles.of(na.role).tx_dbm;
        const int src = port[static_cast<std::size_t>(a)];
        const int dst = port[static_cast<std::size_t>(b)];
        // The sender's own transmission interrupts its reception, so it
        // rejoins the channel before the next frame.
        for (std::uint64_t k = 0; k < frames; ++k) {
          const TxId tx = m.begin(src, tx_dbm, t, air, true);
          if (m.resolve(tx, dst) == DeliveryOutcome::Delivered) ++probe.delivered;
          ++probe.sent;
          t += air;
          m.finish(tx, t);
          m.set_listening(src, true, t);
          t += SimTime::from_us(100);
        }
        out.push_back(std::move(probe));
      }
    }
  }
  return out;
}

void write_routes(std::ostream& out, const scenario::Scenario& s) {
  const auto table = scenario::build_channel_map(s);
  const auto ctx = scenario::route_context(s);
  out << "src,dst,route_kind,ingress,bridge,egress\n";
  for (std::size_t a = 0; a < s.nodes.size(); ++a) {
    for (std::size_t b = 0; b < s.nodes.size(); ++b) {
      if (a == b) continue;
      const auto r = bridge::lookup_route(table, ctx, static_cast<int>(a), static_cast<int>(b));
      std::string ingress, via, egress;
      if (r.kind != bridge::RouteKind::NoRoute) ingress = to_string(r.ingress);
      if (r.kind == bridge::RouteKind::ViaBridge) {
        via = s.nodes[static_cast<std::size_t>(r.bridge)].id;
        egress = to_string(r.egress);
      }
      out << fmt::format("{},{},{},{},{},{}\n", s.nodes[a].id, s.nodes[b].id, bridge::to_string(r.kind), ingress, via,
                         egress);
    }
  }
}

}  // namespace bsn::net
