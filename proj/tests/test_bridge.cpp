#include <gtest/gtest.h>

#include "bsn/bridge/bridge.hpp"

using namespace bsn;
using namespace bsn::bridge;

namespace {

const ChannelId kMics{Band::MICS_402_405, 0};
const ChannelId kIsm{Band::ISM_2_4, 0};

ChannelMapRecord rec(int conn, ChannelId ch, std::vector<int> nodes, int src, int dst) {
  ChannelMapRecord r;
  r.channel = ch;
  r.node_ids = std::move(nodes);
  r.connection_id = conn;
  r.src = src;
  r.dst = dst;
  return r;
}

// Node 0: BNC on both bands; 1, 2 on-body on ISM; 3, 4 in-body on MICS.
ChannelMapTable sample_table() {
  ChannelMapTable t;
  t = register_record(t, rec(1, kIsm, {0, 1, 2}, 1, 0));
  t = register_record(t, rec(2, kMics, {0, 3, 4}, 3, 0));
  return t;
}

RouteContext sample_ctx() { return RouteContext{{3, 4}, {0}}; }

Mpdu frame(int src, std::uint64_t seq) {
  Mpdu m;
  m.src = src;
  m.dst = 1;
  m.seq = seq;
  m.payload_digest = 0xabcdef00 + seq;
  return m;
}

}  // namespace

TEST(ChannelMap, Register) {
  ChannelMapTable t;
  t = register_record(t, rec(1, kIsm, {0, 1}, 1, 0));
  EXPECT_EQ(t.size(), 1u);
  EXPECT_THROW(register_record(t, rec(1, kIsm, {0, 2}, 2, 0)), std::invalid_argument);
  try {
    register_record(t, rec(2, kIsm, {0, 1}, 9, 0));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "unmapped endpoint");
  }
}

TEST(ChannelMap, PacemakerOnMics) {
  ChannelMapTable t;
  t = register_record(t, rec(7, kMics, {0, 5}, 5, 0));
  EXPECT_EQ(t.records()[0].channel, (ChannelId{Band::MICS_402_405, 0}));
  EXPECT_EQ(t.channels_of(5), (std::set<ChannelId>{kMics}));
  EXPECT_TRUE(t.on_any_channel(0));
  EXPECT_FALSE(t.on_any_channel(9));
}

TEST(Routes, OnBodyPeersDirect) {
  const auto r = lookup_route(sample_table(), sample_ctx(), 1, 2);
  EXPECT_EQ(r.kind, RouteKind::Direct);
  EXPECT_EQ(r.ingress, kIsm);
}

TEST(Routes, InBodyToOnBodyViaBnc) {
  const auto r = lookup_route(sample_table(), sample_ctx(), 3, 1);
  EXPECT_EQ(r, (Route{RouteKind::ViaBridge, kMics, 0, kIsm}));
}

TEST(Routes, InBodyPeersRelayedOnSameChannel) {
  const auto r = lookup_route(sample_table(), sample_ctx(), 3, 4);
  EXPECT_EQ(r, (Route{RouteKind::ViaBridge, kMics, 0, kMics}));
}

TEST(Routes, InBodyToBncIsDirect) {
  const auto r = lookup_route(sample_table(), sample_ctx(), 3, 0);
  EXPECT_EQ(r.kind, RouteKind::Direct);
  EXPECT_EQ(r.ingress, kMics);
}

TEST(Routes, NoRouteWithoutBridge) {
  const auto r = lookup_route(sample_table(), RouteContext{{3, 4}, {}}, 3, 1);
  EXPECT_EQ(r.kind, RouteKind::NoRoute);
}

TEST(BridgeValidation, Interfaces) {
  const std::vector<ChannelId> dual{kMics, kIsm};
  EXPECT_NO_THROW(validate_bridge(dual));
  const std::vector<ChannelId> single{kIsm};
  EXPECT_THROW(validate_bridge(single), std::invalid_argument);
  const std::vector<ChannelId> same_band{{Band::ISM_2_4, 1}, {Band::ISM_2_4, 2}};
  EXPECT_NO_THROW(validate_bridge(same_band));
  const std::vector<ChannelId> dup{kIsm, kIsm};
  EXPECT_THROW(validate_bridge(dup), std::invalid_argument);
}

TEST(BridgeState, RelayAppendsHopAndKeepsPayload) {
  BridgeState b(0, {kMics, kIsm}, 16);
  const Mpdu in = frame(3, 1);
  ASSERT_TRUE(b.relay(in, kMics));
  const auto egress = [](const Mpdu&) { return kIsm; };
  ASSERT_TRUE(b.has_for(kIsm, egress));
  const Mpdu* out = b.peek_for(kIsm, egress);
  ASSERT_NE(out, nullptr);
  EXPECT_EQ(out->payload_digest, in.payload_digest);
  EXPECT_EQ(out->cls, in.cls);
  EXPECT_EQ(out->payload_bytes, in.payload_bytes);
  ASSERT_FALSE(out->hop_trace.empty());
  EXPECT_EQ(out->hop_trace.back().node, 0);
  b.complete(3, 1, true);
  EXPECT_EQ(b.forwarded(), 1u);
  EXPECT_EQ(b.stored(), 0u);
  EXPECT_TRUE(b.conserved());
}

TEST(BridgeState, SeventeenthArrivalDropped) {
  BridgeState b(0, {kMics, kIsm}, 16);
  for (std::uint64_t i = 0; i < 16; ++i) ASSERT_TRUE(b.relay(frame(3, i), kMics));
  EXPECT_FALSE(b.relay(frame(3, 16), kMics));
  EXPECT_EQ(b.overflow_drops(), 1u);
  EXPECT_EQ(b.stored(), 16u);
  EXPECT_TRUE(b.conserved());
}

TEST(BridgeState, RejectsSingleInterface) {
  EXPECT_THROW(BridgeState(0, {kIsm}, 16), std::invalid_argument);
}

TEST(BridgeState, LossyHopsMultiply) {
  // Two independent Bernoulli hops without retries.
  RngStream h1(1, "hop1");
  RngStream h2(1, "hop2");
  BridgeState b(0, {kMics, kIsm}, 16);
  const auto egress = [](const Mpdu&) { return kIsm; };
  const int n = 100'000;
  int delivered = 0;
  for (int i = 0; i < n; ++i) {
    if (!h1.bernoulli(0.9)) continue;
    ASSERT_TRUE(b.relay(frame(3, static_cast<std::uint64_t>(i)), kMics));
    const Mpdu* m = b.peek_for(kIsm, egress);
    const bool ok = h2.bernoulli(0.8);
    b.complete(m->src, m->seq, ok);
    delivered += ok;
  }
  EXPECT_NEAR(static_cast<double>(delivered) / n, 0.9 * 0.8, 0.02);
  EXPECT_TRUE(b.conserved());
  EXPECT_EQ(b.forwarded(), static_cast<std::uint64_t>(delivered));
}
