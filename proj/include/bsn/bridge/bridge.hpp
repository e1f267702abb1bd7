#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "bsn/phy/channel.hpp"
#include "bsn/sim/time.hpp"
#include "bsn/traffic/traffic.hpp"

namespace bsn::bridge {

struct Hop {
  int node = -1;
  ChannelId channel;

  bool operator==(const Hop&) const = default;
};

/// Link-layer frame exchanged by every MAC and relayed by bridges.
struct Mpdu {
  std::uint64_t seq = 0;  // unique per source
  int src = -1;
  int dst = -1;
  TrafficClass cls = TrafficClass::NormalMedium;
  std::int64_t payload_bytes = 128;
  /// Stand-in for the payload contents; relays must never alter it.
  std::uint64_t payload_digest = 0;
  SimTime created_at{};
  std::vector<Hop> hop_trace;  // one entry per link traversal, appended by the receiver

  bool operator==(const Mpdu&) const = default;
};

enum class ConnectionType : std::uint8_t { Scheduled, Contention, WakeupServed };

std::string_view to_string(ConnectionType t);
ConnectionType connection_type_from_string(std::string_view s);

/// One row of the bridging table.
struct ChannelMapRecord {
  int network_info = 0;  // opaque network id, used only for grouping
  ChannelId channel;
  std::vector<int> node_ids;
  int connection_id = 0;
  ConnectionType connection_type = ConnectionType::Contention;
  int src = -1;
  int dst = -1;

  bool operator==(const ChannelMapRecord&) const = default;
};

class ChannelMapTable {
 public:
  const std::vector<ChannelMapRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  /// Channels on which `node` is a registered member.
  std::set<ChannelId> channels_of(int node) const;
  bool on_any_channel(int node) const;

  bool operator==(const ChannelMapTable&) const = default;

 private:
  friend ChannelMapTable register_record(const ChannelMapTable&, ChannelMapRecord);
  std::vector<ChannelMapRecord> records_;
};

/// Adds a record. Errors: duplicate connection_id; "unmapped endpoint" when
/// src or dst is not a member of any channel (including this record's).
ChannelMapTable register_record(const ChannelMapTable& table, ChannelMapRecord record);

enum class RouteKind : std::uint8_t { Direct, ViaBridge, NoRoute };

std::string_view to_string(RouteKind k);

struct Route {
  RouteKind kind = RouteKind::NoRoute;
  ChannelId ingress;  // Direct: the shared channel
  int bridge = -1;
  ChannelId egress;

  bool operator==(const Route&) const = default;
};

/// Who is implanted and who may bridge.
struct RouteContext {
  std::set<int> in_body;
  std::vector<int> bridges;
};

/// Direct when both ends share a channel and no in-body node talks to a
/// non-bridge peer; otherwise through the first bridge that shares a channel
/// with each end. Implanted peers are relayed even when they share a channel.
Route lookup_route(const ChannelMapTable& table, const RouteContext& ctx, int src, int dst);

/// ok iff the interface list holds at least two distinct channels.
/// Throws std::invalid_argument otherwise.
void validate_bridge(std::span<const ChannelId> interfaces);

/// Store-and-forward relay state of one bridge node.
class BridgeState {
 public:
  BridgeState(int node, std::vector<ChannelId> interfaces, std::size_t capacity = 16);

  int node() const { return node_; }
  const std::vector<ChannelId>& interfaces() const { return interfaces_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t stored() const { return store_.size(); }

  /// Accepts a frame received on `ingress`; appends the bridge hop and
  /// queues it. Returns false (and counts a drop) when the store is full.
  bool relay(Mpdu mpdu, const ChannelId& ingress);

  /// Whether a frame is waiting for `egress`.
  bool has_for(const ChannelId& egress, const std::function<ChannelId(const Mpdu&)>& egress_of) const;
  /// Oldest frame waiting for `egress`, still counted as stored.
  const Mpdu* peek_for(const ChannelId& egress, const std::function<ChannelId(const Mpdu&)>& egress_of) const;
  /// Removes the frame with (src, seq) after its egress transmission is settled.
  /// `delivered` selects the forwarded vs dropped counter.
  void complete(int src, std::uint64_t seq, bool delivered);

  std::uint64_t frames_in() const { return in_; }
  std::uint64_t forwarded() const { return forwarded_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t overflow_drops() const { return overflow_; }
  const std::deque<Mpdu>& store() const { return store_; }

  /// frames_in == forwarded + dropped + stored.
  bool conserved() const { return in_ == forwarded_ + dropped_ + store_.size(); }

 private:
  int node_;
  std::vector<ChannelId> interfaces_;
  std::size_t capacity_;
  std::deque<Mpdu> store_;
  std::uint64_t in_ = 0;
  std::uint64_t forwarded_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t overflow_ = 0;
};

}  // namespace bsn::bridge
