#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "bsn/net/network.hpp"
#include "support.hpp"

using namespace bsn;
using namespace bsn::scenario;
namespace bt = bsn::testing;
using nlohmann::json;

namespace {

const metrics::RadioEnergy* radio(const metrics::RunMetrics& m, const std::string& node, const std::string& label) {
  const auto* n = m.node(node);
  if (n == nullptr) return nullptr;
  for (const auto& r : n->radios) {
    if (r.radio == label) return &r;
  }
  return nullptr;
}

std::int64_t awake_ticks(const metrics::RadioEnergy& r) {
  return r.state_ticks[static_cast<std::size_t>(RadioState::Idle)] + r.state_ticks[static_cast<std::size_t>(RadioState::Rx)] +
         r.state_ticks[static_cast<std::size_t>(RadioState::Tx)];
}

const metrics::ClassCounts& counts(const metrics::RunMetrics& m, TrafficClass c) { return m.per_class[index_of(c)]; }

json periodic(const std::string& node, double period_s, double offset_s, const char* cls = "NormalLow", int bytes = 128) {
  return {{"node", node}, {"class", cls}, {"period_s", period_s}, {"start_offset_s", offset_s}, {"payload_bytes", bytes}};
}

}  // namespace

TEST(Network, TdmaNeverCollides) {
  auto s = bt::bundled("paper_fig2");
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto m = net::run_once(s, Protocol::PbTdma, seed, SimTime::from_seconds(120));
    EXPECT_EQ(m.collisions, 0u);
    EXPECT_GT(m.totals().delivered, 0u);
  }
}

TEST(Network, ConservationForEveryProtocol) {
  const auto s = bt::bundled("paper_fig2");
  for (auto p : kAllProtocols) {
    net::Network n(s, p, 5);
    for (int k = 1; k <= 3; ++k) {
      n.run(SimTime::from_seconds(20.0 * k));
      const auto c = n.conservation();
      EXPECT_TRUE(c.holds) << to_string(p);
      EXPECT_TRUE(c.in_flight_matches) << to_string(p);
    }
    const auto m = n.metrics();
    for (const auto& cc : m.per_class) EXPECT_EQ(cc.generated, cc.delivered + cc.dropped + cc.in_flight) << to_string(p);
  }
}

TEST(Network, ReplicationsAreDeterministic) {
  const auto s = bt::bundled("paper_fig2");
  const auto a = net::run_replications(s, Protocol::Csma802154, 3, SimTime::from_seconds(30));
  const auto b = net::run_replications(s, Protocol::Csma802154, 3, SimTime::from_seconds(30));
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(net::run_replications(s, Protocol::Smac, 1, SimTime::from_seconds(10)).size(), 1u);
}

TEST(Network, StochasticChannelSpreadsResults) {
  const auto s = bt::bundled("paper_fig2");
  const auto runs = net::run_replications(s, Protocol::Csma802154, 20, SimTime::from_seconds(60));
  ASSERT_EQ(runs.size(), 20u);
  const auto agg = metrics::aggregate(runs);
  ASSERT_NE(agg.find("pdr", "all"), nullptr);
  EXPECT_GT(agg.find("pdr", "all")->stddev, 0.0);
}

TEST(Network, TraceIsReproducible) {
  const auto s = bt::bundled("tbw_emergency");
  std::ostringstream a, b;
  net::run_once(s, Protocol::Tbw, 9, SimTime::from_seconds(120), &a);
  net::run_once(s, Protocol::Tbw, 9, SimTime::from_seconds(120), &b);
  EXPECT_GT(a.str().size(), 1000u);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Network, CompareNeedsTwoProtocols) {
  const auto s = bt::bundled("paper_fig2");
  EXPECT_THROW(net::compare_protocols(s, {Protocol::Smac}), std::invalid_argument);
}

TEST(Network, TbwLeadsEmergencyAccess) {
  const auto s = bt::bundled("tbw_emergency");
  const auto agg = net::compare_protocols(s, {Protocol::Csma802154, Protocol::Tbw}, 2, SimTime::from_seconds(900));
  const auto lines = metrics::ordering_lines(agg);
  const auto it = std::find_if(lines.begin(), lines.end(),
                               [](const std::string& l) { return l.rfind("emergency_access_p50_s/Emergency:", 0) == 0; });
  ASSERT_NE(it, lines.end());
  EXPECT_EQ(*it, "emergency_access_p50_s/Emergency: tbw < csma802154");
}

TEST(Network, SmacHoldsFramesUntilListenWindow) {
  auto j = bt::star(1);
  j["horizon_s"] = 100;
  j["traffic"].push_back(periodic("n1", 10.0, 0.5));
  const auto m = net::run_once(bt::make(j), Protocol::Smac, 1);
  ASSERT_EQ(m.latency_samples.size(), 10u);
  // Generated mid-sleep; the next listen window opens 0.5 s later.
  for (const auto& l : m.latency_samples) {
    EXPECT_GE(l.latency, SimTime::from_ms(500));
    EXPECT_LT(l.latency, SimTime::from_ms(600));
  }
}

namespace {

// One node, a fixed window of `window_ms` every 10 s starting at 0.5 s.
json tbw_window_scenario(double window_ms) {
  auto j = bt::star(1);
  j["horizon_s"] = 1;
  j["wakeup_table"] = json::array({{{"node", "n1"}, {"class", "NormalLow"}, {"period_s", 10.0}, {"offset_s", 0.5},
                                    {"window_s", window_ms / 1000.0}}});
  return j;
}

}  // namespace

TEST(TbwWindow, CarriesOverWhatDoesNotFit) {
  const auto base = bt::make(tbw_window_scenario(15));
  const std::int64_t rate = base.channels[0].data_rate_bps;
  const SimTime t = base.mac.turnaround;
  const SimTime poll = airtime(base.mac.beacon_bytes, rate);
  const SimTime data = airtime(128, rate);
  const SimTime ack = airtime(base.mac.ack_bytes, rate);
  const SimTime window = SimTime::from_ms(15);
  // Each frame costs a poll, the data and its ack, each after a turnaround;
  // a frame is sent only when data plus the ack wait ends inside the window.
  const SimTime cycle = t + poll + t + data + t + ack + t;
  int fit = 0;
  while (t + cycle * fit + poll + t + data + base.mac.ack_wait <= window) ++fit;
  ASSERT_EQ(fit, 2);

  auto j = tbw_window_scenario(15);
  j["traffic"] = json::array({periodic("n1", 10.0, 0.1), periodic("n1", 10.0, 0.2), periodic("n1", 10.0, 0.3)});
  net::Network n(bt::make(j), Protocol::Tbw, 1);
  n.run(SimTime::from_seconds(1));
  const auto m = n.metrics();
  EXPECT_EQ(counts(m, TrafficClass::NormalLow).generated, 3u);
  EXPECT_EQ(counts(m, TrafficClass::NormalLow).delivered, static_cast<std::uint64_t>(fit));
  EXPECT_EQ(counts(m, TrafficClass::NormalLow).in_flight, 3u - static_cast<std::uint64_t>(fit));
  // The next window also serves `fit` frames: the carried-over one first.
  n.run(SimTime::from_seconds(10.6));
  EXPECT_EQ(counts(n.metrics(), TrafficClass::NormalLow).generated, 6u);
  EXPECT_EQ(counts(n.metrics(), TrafficClass::NormalLow).delivered, 2u * static_cast<std::uint64_t>(fit));
}

TEST(TbwWindow, SleepsAfterAck) {
  auto j = tbw_window_scenario(100);
  j["traffic"] = json::array({periodic("n1", 10.0, 0.1)});
  const auto m = net::run_once(bt::make(j), Protocol::Tbw, 1);
  EXPECT_EQ(counts(m, TrafficClass::NormalLow).delivered, 1u);
  const auto* r = radio(m, "n1", "ISM_2_4/0");
  ASSERT_NE(r, nullptr);
  EXPECT_GT(awake_ticks(*r), 0);
  EXPECT_LT(awake_ticks(*r), SimTime::from_ms(10).ticks());
}

TEST(TbwWindow, EmptyQueueSendsNoData) {
  const auto s = bt::make(tbw_window_scenario(20));
  const auto m = net::run_once(s, Protocol::Tbw, 1);
  EXPECT_EQ(m.totals().generated, 0u);
  const auto* r = radio(m, "n1", "ISM_2_4/0");
  ASSERT_NE(r, nullptr);
  // Only the reply to one poll.
  EXPECT_EQ(r->state_ticks[static_cast<std::size_t>(RadioState::Tx)], airtime(s.mac.ack_bytes, 250'000).ticks());
  EXPECT_LE(awake_ticks(*r), SimTime::from_ms(20).ticks());
}

TEST(TbwTable, ModifiedPeriodFollowedAfterNextPoll) {
  auto j = bt::star(1);
  j["horizon_s"] = 90;
  j["wakeup_table"] = json::array({{{"node", "n1"}, {"class", "NormalLow"}, {"period_s", 10.0}, {"offset_s", 0.0},
                                    {"window_s", 0.05}}});
  j["table_updates"] = json::array({{{"at_s", 5.0}, {"action", "modify"},
                                     {"entry", {{"node", "n1"}, {"class", "NormalLow"}, {"period_s", 20.0},
                                                {"offset_s", 0.0}, {"window_s", 0.05}}}}});
  net::Network n(bt::make(j), Protocol::Tbw, 1);
  n.run(SimTime::from_seconds(90));
  std::vector<SimTime> expect;
  for (double s : {0.0, 10.0, 20.0, 40.0, 60.0, 80.0}) expect.push_back(SimTime::from_seconds(s));
  EXPECT_EQ(n.window_starts("n1"), expect);
  EXPECT_EQ(n.known_revision("n1"), n.wakeup_table().revision());
}

namespace {

json emergency_scenario(double signal_loss) {
  auto j = bt::star(1);
  j["horizon_s"] = 1200;
  j["traffic"] = json::array({{{"node", "n1"}, {"class", "Emergency"}, {"rate_per_s", 0.05}, {"payload_bytes", 64}}});
  j["protocols"] = {{"tbw", {{"wakeup", {{"signal_loss", signal_loss}}}}}};
  return j;
}

}  // namespace

TEST(TbwEmergency, CleanChannelDelay) {
  const auto s = bt::make(emergency_scenario(0.0));
  const auto m = net::run_once(s, Protocol::Tbw, 3);
  ASSERT_GT(m.emergency_access_delays.size(), 20u);
  // signal, turnaround, poll, turnaround
  const SimTime expected = s.protocols.tbw.wakeup.signal_duration + s.mac.turnaround +
                           airtime(s.mac.beacon_bytes, 250'000) + s.mac.turnaround;
  EXPECT_EQ(expected.ticks(), 10'000 + 192 + 768 + 192);
  for (const auto& d : m.emergency_access_delays) EXPECT_EQ(d, expected);
  EXPECT_EQ(m.emergency_failures, 0u);
}

TEST(TbwEmergency, LostSignalsRetryThenFail) {
  const auto s = bt::make(emergency_scenario(1.0));
  const auto m = net::run_once(s, Protocol::Tbw, 3);
  const auto& em = counts(m, TrafficClass::Emergency);
  ASSERT_GT(em.generated, 20u);
  EXPECT_EQ(em.delivered, 0u);
  EXPECT_GT(m.emergency_failures, 0u);
  EXPECT_EQ(m.emergency_failures + em.in_flight, em.generated);
}

TEST(TbwEmergency, PartialLossStaysUnderOneSecond) {
  const auto s = bt::make(emergency_scenario(0.3));
  const auto m = net::run_once(s, Protocol::Tbw, 3);
  ASSERT_FALSE(m.emergency_access_delays.empty());
  const SimTime clean = SimTime{10'000 + 192 + 768 + 192};
  bool retried = false;
  for (const auto& d : m.emergency_access_delays) {
    EXPECT_GE(d, clean);
    EXPECT_LT(d, SimTime::from_seconds(1));
    if (d > clean) {
      retried = true;
      EXPECT_GE(d - clean, SimTime::from_ms(50));
    }
  }
  EXPECT_TRUE(retried);
}

namespace {

json on_demand_scenario(const char* addressing, const char* mode, double duration_s) {
  auto j = bt::star(9);
  j["horizon_s"] = 30;
  j["on_demand"] = json::array({{{"at_s", 1.0}, {"target", "n3"}, {"mode", mode}, {"duration_s", duration_s},
                                 {"stream_period_s", 1.0}, {"addressing", addressing}}});
  return j;
}

}  // namespace

TEST(TbwOnDemand, ToneWakesOnlyTarget) {
  const auto m = net::run_once(bt::make(on_demand_scenario("Tone", "NonContinuous", 0)), Protocol::Tbw, 1);
  int woken = 0;
  for (int i = 1; i <= 9; ++i) {
    const auto* r = radio(m, "n" + std::to_string(i), "ISM_2_4/0");
    ASSERT_NE(r, nullptr);
    if (awake_ticks(*r) > 0) {
      ++woken;
      EXPECT_EQ(i, 3);
    }
  }
  EXPECT_EQ(woken, 1);
  EXPECT_EQ(counts(m, TrafficClass::OnDemandNonContinuous).generated, 1u);
  EXPECT_EQ(counts(m, TrafficClass::OnDemandNonContinuous).delivered, 1u);
}

TEST(TbwOnDemand, BroadcastWakesEveryone) {
  const auto m = net::run_once(bt::make(on_demand_scenario("Broadcast", "NonContinuous", 0)), Protocol::Tbw, 1);
  std::int64_t target_awake = 0;
  for (int i = 1; i <= 9; ++i) {
    const auto* r = radio(m, "n" + std::to_string(i), "ISM_2_4/0");
    ASSERT_NE(r, nullptr);
    EXPECT_GT(awake_ticks(*r), 0) << i;
    if (i == 3) target_awake = awake_ticks(*r);
  }
  for (int i = 1; i <= 9; ++i) {
    if (i != 3) {
      EXPECT_LE(awake_ticks(*radio(m, "n" + std::to_string(i), "ISM_2_4/0")), target_awake);
      EXPECT_EQ(radio(m, "n" + std::to_string(i), "ISM_2_4/0")->state_ticks[static_cast<std::size_t>(RadioState::Tx)], 0);
    }
  }
  EXPECT_EQ(counts(m, TrafficClass::OnDemandNonContinuous).delivered, 1u);
}

TEST(TbwOnDemand, ContinuousStreamCount) {
  const auto m = net::run_once(bt::make(on_demand_scenario("Tone", "Continuous", 10)), Protocol::Tbw, 1);
  EXPECT_EQ(counts(m, TrafficClass::OnDemandContinuous).generated, 10u);
  EXPECT_EQ(counts(m, TrafficClass::OnDemandContinuous).delivered, 10u);
  EXPECT_THROW(bt::make(on_demand_scenario("Tone", "Continuous", 0)), ScenarioError);
}

TEST(TbwEnergy, BncSavesAgainstAlwaysOn) {
  const auto s = bt::bundled("tbw_emergency");
  for (std::uint64_t seed : {1, 2}) {
    const auto a = net::run_once(s, Protocol::Tbw, seed, SimTime::from_seconds(600));
    const auto b = net::run_once(s, Protocol::TbwAlwaysOn, seed, SimTime::from_seconds(600));
    const auto da = a.totals().delivered, db = b.totals().delivered;
    EXPECT_LE(da > db ? da - db : db - da, 1u);
    EXPECT_LT(a.node("bnc")->consumed_j, b.node("bnc")->consumed_j);
  }
}

TEST(Energy, ClosureInNetworkRuns) {
  const auto s = bt::bundled("paper_fig2");
  for (auto p : {Protocol::Csma802154, Protocol::PbTdma, Protocol::Smac, Protocol::Tbw}) {
    const auto m = net::run_once(s, p, 4, SimTime::from_seconds(60));
    for (const auto& n : m.nodes) {
      double sum = 0;
      for (const auto& r : n.radios) {
        sum += r.recomputed_j;
        std::int64_t ticks = 0;
        for (auto t : r.state_ticks) ticks += t;
        EXPECT_EQ(ticks, n.lifetime_ticks) << n.name << " " << r.radio;
      }
      ASSERT_GT(n.consumed_j, 0.0);
      EXPECT_LT(std::abs(n.consumed_j - sum) / n.consumed_j, 1e-9) << n.name;
    }
  }
}

TEST(Energy, DeadNodeDeliversNothingAfterDeath) {
  auto j = bt::star(2);
  j["horizon_s"] = 200;
  j["energy"]["on_body_j"] = 0.05;
  j["traffic"] = json::array({periodic("n1", 0.05, 0.0, "NormalHigh"), periodic("n2", 0.05, 0.025, "NormalHigh")});
  net::Network n(bt::make(j), Protocol::PbTdma, 1);
  n.record_deliveries(true);
  n.run(SimTime::from_seconds(200));
  const auto m = n.metrics();
  const auto* n1 = m.node("n1");
  ASSERT_TRUE(n1->death_time.has_value());
  EXPECT_EQ(n1->lifetime_ticks, n1->death_time->ticks());
  EXPECT_NEAR(n1->consumed_j, 0.05, 1e-6);
  const int src = bt::make(j).node_index("n1");
  std::size_t from_n1 = 0;
  for (const auto& d : n.deliveries()) {
    if (d.mpdu.src != src) continue;
    ++from_n1;
    EXPECT_LE(d.at, *n1->death_time);
  }
  EXPECT_GT(from_n1, 0u);
}
