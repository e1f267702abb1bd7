#include "bsn/bridge/bridge.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace bsn::bridge {

std::string_view to_string(ConnectionType t) {
  switch (t) {
    case ConnectionType::Scheduled: return "Scheduled";
    case ConnectionType::Contention: return "Contention";
    case ConnectionType::WakeupServed: return "WakeupServed";
  }
  return "?";
}

ConnectionType connection_type_from_string(std::string_view s) {
  for (auto t : {ConnectionType::Scheduled, ConnectionType::Contention, ConnectionType::WakeupServed}) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown connection type '" + std::string(s) + "'");
}

std::string_view to_string(RouteKind k) {
  switch (k) {
    case RouteKind::Direct: return "Direct";
    case RouteKind::ViaBridge: return "ViaBridge";
    case RouteKind::NoRoute: return "NoRoute";
  }
  return "?";
}

std::set<ChannelId> ChannelMapTable::channels_of(int node) const {
  std::set<ChannelId> out;
  for (const auto& r : records_) {
    if (std::find(r.node_ids.begin(), r.node_ids.end(), node) != r.node_ids.end()) out.insert(r.channel);
  }
  return out;
}

bool ChannelMapTable::on_any_channel(int node) const { return !channels_of(node).empty(); }

ChannelMapTable register_record(const ChannelMapTable& table, ChannelMapRecord record) {
  for (const auto& r : table.records_) {
    if (r.connection_id == record.connection_id) throw std::invalid_argument("duplicate connection_id");
  }
  ChannelMapTable next = table;
  next.records_.push_back(std::move(record));
  const auto& added = next.records_.back();
  if (!next.on_any_channel(added.src) || !next.on_any_channel(added.dst)) {
    throw std::invalid_argument("unmapped endpoint");
  }
  return next;
}

Route lookup_route(const ChannelMapTable& table, const RouteContext& ctx, int src, int dst) {
  const auto src_ch = table.channels_of(src);
  const auto dst_ch = table.channels_of(dst);
  const bool src_in = ctx.in_body.contains(src);
  const bool dst_in = ctx.in_body.contains(dst);
  const bool src_bridge = std::find(ctx.bridges.begin(), ctx.bridges.end(), src) != ctx.bridges.end();
  const bool dst_bridge = std::find(ctx.bridges.begin(), ctx.bridges.end(), dst) != ctx.bridges.end();

  // A bridge endpoint talks to anyone it shares a channel with.
  const bool peer_allowed = (!src_in && !dst_in) || src_bridge || dst_bridge;
  if (peer_allowed) {
    for (const auto& c : src_ch) {
      if (dst_ch.contains(c)) return Route{RouteKind::Direct, c, -1, c};
    }
  }
  for (int b : ctx.bridges) {
    if (b == src || b == dst) continue;
    const auto b_ch = table.channels_of(b);
    std::optional<ChannelId> in, out;
    for (const auto& c : src_ch) {
      if (b_ch.contains(c)) {
        in = c;
        break;
      }
    }
    for (const auto& c : dst_ch) {
      if (b_ch.contains(c)) {
        out = c;
        break;
      }
    }
    if (in && out) return Route{RouteKind::ViaBridge, *in, b, *out};
  }
  return Route{};
}

void validate_bridge(std::span<const ChannelId> interfaces) {
  std::set<ChannelId> distinct(interfaces.begin(), interfaces.end());
  if (distinct.size() < 2) throw std::invalid_argument("bridge needs at least two distinct channel interfaces");
}

BridgeState::BridgeState(int node, std::vector<ChannelId> interfaces, std::size_t capacity)
    : node_(node), interfaces_(std::move(interfaces)), capacity_(capacity) {
  validate_bridge(interfaces_);
  if (capacity_ == 0) throw std::invalid_argument("bridge store capacity must be positive");
}

bool BridgeState::relay(Mpdu mpdu, const ChannelId& ingress) {
  ++in_;
  if (store_.size() >= capacity_) {
    ++dropped_;
    ++overflow_;
    return false;
  }
  if (mpdu.hop_trace.empty() || mpdu.hop_trace.back().node != node_) {
    mpdu.hop_trace.push_back(Hop{node_, ingress});
  }
  store_.push_back(std::move(mpdu));
  return true;
}

bool BridgeState::has_for(const ChannelId& egress, const std::function<ChannelId(const Mpdu&)>& egress_of) const {
  return peek_for(egress, egress_of) != nullptr;
}

const Mpdu* BridgeState::peek_for(const ChannelId& egress,
                                  const std::function<ChannelId(const Mpdu&)>& egress_of) const {
  for (const auto& m : store_) {
    if (egress_of(m) == egress) return &m;
  }
  return nullptr;
}

void BridgeState::complete(int src, std::uint64_t seq, bool delivered) {
  auto it = std::find_if(store_.begin(), store_.end(), [&](const Mpdu& m) { return m.src == src && m.seq == seq; });
  if (it == store_.end()) throw std::logic_error("frame not in bridge store");
  store_.erase(it);
  if (delivered) {
    ++forwarded_;
  } else {
    ++dropped_;
  }
}

}  // namespace bsn::bridge
