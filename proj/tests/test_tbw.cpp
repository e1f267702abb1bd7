#include <gtest/gtest.h>

#include <numeric>

#include "bsn/tbw/wakeup.hpp"

using namespace bsn;
using namespace bsn::tbw;

namespace {

WakeupEntry entry(int node, double period_s, double offset_s, double window_s,
                  TrafficClass cls = TrafficClass::NormalMedium) {
  return WakeupEntry{node, SimTime::from_seconds(period_s), SimTime::from_seconds(offset_s),
                     SimTime::from_seconds(window_s), cls};
}

WakeupTable table_of(const std::vector<WakeupEntry>& es) {
  WakeupTable t;
  for (const auto& e : es) t = table_update(t, e, TableAction::Insert);
  return t;
}

}  // namespace

TEST(WakeupTable, InsertEcgEntry) {
  const auto t = table_update(WakeupTable{}, entry(3, 900, 0, 0.2), TableAction::Insert);
  EXPECT_EQ(t.entries().size(), 1u);
  EXPECT_EQ(t.revision(), 1u);
  ASSERT_NE(t.find(3, TrafficClass::NormalMedium), nullptr);
  EXPECT_EQ(t.find(3, TrafficClass::NormalMedium)->period, SimTime::from_seconds(900));
}

TEST(WakeupTable, Errors) {
  const auto t = table_update(WakeupTable{}, entry(3, 900, 0, 0.2), TableAction::Insert);
  auto expect_error = [](auto fn, const char* msg) {
    try {
      fn();
      FAIL() << "expected " << msg;
    } catch (const std::exception& e) {
      EXPECT_STREQ(e.what(), msg);
    }
  };
  expect_error([&] { table_update(t, entry(4, 10, 0, 1), TableAction::Remove); }, "no such entry");
  expect_error([&] { table_update(t, entry(4, 10, 0, 1), TableAction::Modify); }, "no such entry");
  expect_error([&] { table_update(t, entry(3, 900, 0, 0.2), TableAction::Insert); }, "duplicate entry");
  expect_error([&] { table_update(t, entry(5, 10, 0, 1), TableAction::Insert, false); }, "BNC only");
  EXPECT_THROW(table_update(t, entry(5, 10, 0, 11), TableAction::Insert), std::invalid_argument);
}

TEST(WakeupTable, ModifyAndRemove) {
  auto t = table_update(WakeupTable{}, entry(3, 900, 0, 0.2), TableAction::Insert);
  t = table_update(t, entry(3, 1800, 0, 0.2), TableAction::Modify);
  EXPECT_EQ(t.revision(), 2u);
  EXPECT_EQ(t.find(3, TrafficClass::NormalMedium)->period, SimTime::from_seconds(1800));
  EXPECT_EQ(t.find(3, TrafficClass::NormalMedium)->next_window_start(SimTime::from_seconds(1)),
            SimTime::from_seconds(1800));
  t = table_update(t, entry(3, 1800, 0, 0.2), TableAction::Remove);
  EXPECT_TRUE(t.empty());
  EXPECT_EQ(t.revision(), 3u);
}

TEST(WakeupEntry, NextWindowStart) {
  const auto e = entry(1, 10, 2, 1);
  EXPECT_EQ(e.next_window_start(SimTime::zero()), SimTime::from_seconds(2));
  EXPECT_EQ(e.next_window_start(SimTime::from_seconds(2)), SimTime::from_seconds(2));
  EXPECT_EQ(e.next_window_start(SimTime::from_seconds(2) + SimTime{1}), SimTime::from_seconds(12));
}

TEST(BncPattern, EmptyTableNeverWakes) {
  const auto p = derive_bnc_pattern(WakeupTable{}, SimTime::from_ms(2));
  EXPECT_TRUE(p.intervals.empty());
  EXPECT_EQ(p.awake_measure(), SimTime::zero());
  EXPECT_FALSE(p.awake_at(SimTime::from_seconds(3)));
}

TEST(BncPattern, OverlappingWindowsMerge) {
  const auto t = table_of({entry(1, 10, 0, 1), entry(2, 10, 0.5, 1)});
  const auto p = derive_bnc_pattern(t, SimTime::zero());
  EXPECT_EQ(p.hyperperiod, SimTime::from_seconds(10));
  ASSERT_EQ(p.intervals.size(), 1u);
  EXPECT_EQ(p.intervals[0], (Interval{SimTime::zero(), SimTime::from_seconds(1.5)}));
}

TEST(BncPattern, DisjointWindows) {
  const auto t = table_of({entry(1, 10, 0, 1), entry(2, 10, 5, 1)});
  const auto p = derive_bnc_pattern(t, SimTime::zero());
  ASSERT_EQ(p.intervals.size(), 2u);
  EXPECT_EQ(p.awake_measure(), SimTime::from_seconds(2));
  EXPECT_TRUE(p.awake_at(SimTime::from_seconds(25.5)));
  EXPECT_FALSE(p.awake_at(SimTime::from_seconds(27)));
  EXPECT_EQ(p.next_interval_start(SimTime::from_seconds(21)), SimTime::from_seconds(25));
}

TEST(BncPattern, GuardWrapsAroundHyperperiod) {
  const auto t = table_of({entry(1, 4, 0, 1), entry(2, 6, 3, 1)});
  const auto p = derive_bnc_pattern(t, SimTime::from_ms(100));
  EXPECT_EQ(p.hyperperiod, SimTime::from_seconds(12));
  // The guard before the window at 0 wraps to the end of the hyperperiod.
  EXPECT_TRUE(p.awake_at(SimTime::from_seconds(11.95)));
  EXPECT_TRUE(p.awake_at(SimTime::from_seconds(12) + SimTime::from_ms(1050)));
  EXPECT_FALSE(p.awake_at(SimTime::from_seconds(12) + SimTime::from_ms(1150)));
}

TEST(BncPattern, NegativeTimesFoldIntoPreviousHyperperiod) {
  const auto t = table_of({entry(1, 4, 0, 1), entry(2, 6, 3, 1)});
  const auto p = derive_bnc_pattern(t, SimTime::from_ms(100));
  EXPECT_TRUE(p.awake_at(SimTime::from_ms(-50)));
  EXPECT_FALSE(p.awake_at(SimTime::from_ms(-500)));
  EXPECT_EQ(p.next_interval_start(SimTime::from_ms(-500)), SimTime::from_ms(-100));
}

TEST(BncPattern, FallbackWhenHyperperiodTooLong) {
  const auto t = table_of({WakeupEntry{1, SimTime{999'983}, SimTime{}, SimTime{1000}, TrafficClass::NormalLow},
                           WakeupEntry{2, SimTime{999'979}, SimTime{}, SimTime{1000}, TrafficClass::NormalLow}});
  const auto p = derive_bnc_pattern(t, SimTime::zero(), SimTime::from_seconds(100));
  EXPECT_TRUE(p.fallback);
}

// Brute-force oracle: walk the hyperperiod tick by tick.
TEST(BncPattern, RandomTablesAgainstTickOracle) {
  RngStream rng(77, "pattern-unit");
  for (int c = 0; c < 60; ++c) {
    const std::int64_t periods[] = {100, 200, 300, 400, 600};
    std::vector<WakeupEntry> es;
    const int n = static_cast<int>(rng.uniform_int(1, 4));
    for (int i = 0; i < n; ++i) {
      const std::int64_t per = periods[rng.uniform_int(0, 4)];
      const std::int64_t win = rng.uniform_int(1, per);
      es.push_back(WakeupEntry{i, SimTime{per}, SimTime{rng.uniform_int(0, per - 1)}, SimTime{win}, TrafficClass::NormalLow});
    }
    const SimTime guard{rng.uniform_int(0, 20)};
    const auto p = derive_bnc_pattern(table_of(es), guard);
    std::int64_t hyper = 1;
    for (const auto& e : es) hyper = std::lcm(hyper, e.period.ticks());
    ASSERT_EQ(p.hyperperiod.ticks(), hyper);
    std::int64_t awake = 0;
    for (std::int64_t t = 0; t < hyper; ++t) {
      bool want = false;
      for (const auto& e : es) {
        const std::int64_t rel = ((t - e.offset.ticks() + guard.ticks()) % e.period.ticks() + e.period.ticks()) % e.period.ticks();
        if (rel < e.window.ticks() + 2 * guard.ticks()) want = true;
      }
      ASSERT_EQ(p.awake_at(SimTime{t}), want) << "case " << c << " tick " << t;
      awake += want;
    }
    EXPECT_EQ(p.awake_measure().ticks(), awake);
  }
}

TEST(MergeIntervals, SortsAndJoins) {
  const auto m = merge_intervals({{SimTime{5}, SimTime{8}}, {SimTime{0}, SimTime{2}}, {SimTime{2}, SimTime{3}}, {SimTime{7}, SimTime{9}}});
  EXPECT_EQ(m, (std::vector<Interval>{{SimTime{0}, SimTime{3}}, {SimTime{5}, SimTime{9}}}));
}

TEST(WakeupSignal, ToneWakesOnlyTarget) {
  const std::vector<int> all{1, 2, 3, 4, 5, 6, 7, 8, 9};
  WakeupSignal s{SignalDirection::BncToNode, Addressing::Tone, 3, SimTime::from_ms(10), SignalPurpose::OnDemand};
  EXPECT_EQ(woken_nodes(s, all), (std::vector<int>{3}));
  s.addressing = Addressing::Broadcast;
  EXPECT_EQ(woken_nodes(s, all), all);
}

TEST(WakeupSignal, DirectionMatchesPurpose) {
  EXPECT_NO_THROW(validate(WakeupSignal{SignalDirection::NodeToBnc, Addressing::Tone, 0, SimTime::from_ms(10),
                                        SignalPurpose::Emergency}));
  EXPECT_THROW(validate(WakeupSignal{SignalDirection::BncToNode, Addressing::Tone, 1, SimTime::from_ms(10),
                                     SignalPurpose::Emergency}),
               std::invalid_argument);
  EXPECT_THROW(validate(WakeupSignal{SignalDirection::NodeToBnc, Addressing::Tone, 1, SimTime::from_ms(10),
                                     SignalPurpose::OnDemand}),
               std::invalid_argument);
}

TEST(EmergencyDelay, CleanChannel) {
  const WakeupRadioConfig cfg;
  const SimTime ta = SimTime::from_us(192);
  const SimTime grant = airtime(24, 250'000);
  const auto d = emergency_access_delay(cfg, 0, ta, grant);
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->ticks(), 10'000 + 192 + 768 + 192);
  EXPECT_LT(*d, SimTime::from_seconds(1));
}

TEST(EmergencyDelay, OneLostSignalAddsOneTimeout) {
  const WakeupRadioConfig cfg;
  const SimTime ta = SimTime::from_us(192);
  const SimTime grant = airtime(24, 250'000);
  const SimTime jitter = SimTime::from_ms(4);
  const auto clean = *emergency_access_delay(cfg, 0, ta, grant);
  const auto once = *emergency_access_delay(cfg, 1, ta, grant, jitter);
  EXPECT_EQ(once - clean, SimTime::from_ms(50) + jitter);
  EXPECT_LT(once, SimTime::from_seconds(1));
}

TEST(EmergencyDelay, AllSignalsLost) {
  const WakeupRadioConfig cfg;
  EXPECT_FALSE(emergency_access_delay(cfg, 10, SimTime{192}, SimTime{768}).has_value());
  EXPECT_TRUE(emergency_access_delay(cfg, 9, SimTime{192}, SimTime{768}).has_value());
}
