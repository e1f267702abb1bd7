#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <vector>

#include "bsn/sim/engine.hpp"
#include "bsn/sim/rng.hpp"
#include "bsn/sim/time.hpp"

using namespace bsn;

TEST(SimTime, AirtimeOfFullFrame) {
  // 128 bytes = 1024 bits at 250 kb/s.
  EXPECT_EQ(airtime(128, 250'000).ticks(), 1024LL * 1'000'000 / 250'000);
  EXPECT_EQ(airtime(128, 250'000).ticks(), 4096);
  // Partial microseconds round up.
  EXPECT_EQ(airtime(1, 3'000'000).ticks(), 3);
}

TEST(SimTime, SecondConversions) {
  EXPECT_EQ(SimTime::from_seconds(900.0).ticks(), 900'000'000);
  EXPECT_EQ(SimTime::ceil_seconds(1.0000001).ticks(), 1'000'001);
  EXPECT_EQ(SimTime::ceil_seconds(0.5).ticks(), 500'000);
  EXPECT_TRUE(SimTime::never().is_never());
}

TEST(Engine, ZeroDelayFiresBeforeLaterEvents) {
  Engine e;
  std::vector<int> order;
  e.schedule(SimTime{5}, "later", 0, [&] { order.push_back(2); });
  e.schedule(SimTime{0}, "now", 0, [&] { order.push_back(1); });
  e.run(SimTime{10});
  EXPECT_EQ(order, (std::vector<int>{1, 2}));
}

TEST(Engine, EqualTimesDispatchInInsertionOrder) {
  Engine e;
  std::vector<int> order;
  for (int i = 0; i < 5; ++i) e.schedule(SimTime{7}, "tie", i, [&order, i] { order.push_back(i); });
  e.run(SimTime{7});
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Engine, PastEventIsRejected) {
  Engine e;
  e.run(SimTime{100});
  try {
    e.schedule(SimTime{99}, "late", 0, [] {});
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& ex) {
    EXPECT_STREQ(ex.what(), "past event");
  }
  EXPECT_NO_THROW(e.schedule(SimTime{100}, "ok", 0, [] {}));
}

TEST(Engine, CancelSemantics) {
  Engine e;
  bool fired = false;
  auto h = e.schedule(SimTime{10}, "x", 0, [&] { fired = true; });
  EXPECT_TRUE(e.cancel(h));
  EXPECT_FALSE(e.cancel(h));
  e.run(SimTime{20});
  EXPECT_FALSE(fired);

  auto g = e.schedule(SimTime{30}, "y", 0, [] {});
  e.run(SimTime{40});
  EXPECT_FALSE(e.cancel(g));
}

TEST(Engine, EmptyRunAdvancesClock) {
  Engine e;
  EXPECT_EQ(e.run(SimTime{1'000'000}), 0u);
  EXPECT_EQ(e.now(), SimTime{1'000'000});
}

TEST(Engine, ThreeEventsCountedInOrder) {
  Engine e;
  std::vector<int> order;
  e.schedule(SimTime{1}, "a", 0, [&] { order.push_back(0); });
  e.schedule(SimTime{1}, "b", 0, [&] { order.push_back(1); });
  e.schedule(SimTime{2}, "c", 0, [&] { order.push_back(2); });
  EXPECT_EQ(e.run(SimTime{3}), 3u);
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2}));
}

TEST(Engine, EventsScheduledDuringDispatchRunInOrder) {
  Engine e;
  std::vector<std::int64_t> seen;
  std::function<void()> tick = [&] {
    seen.push_back(e.now().ticks());
    if (seen.size() < 4) e.schedule_in(SimTime{10}, "tick", 0, tick);
  };
  e.schedule(SimTime{0}, "tick", 0, tick);
  e.run(SimTime{25});
  EXPECT_EQ(seen, (std::vector<std::int64_t>{0, 10, 20}));
  e.run(SimTime{100});
  EXPECT_EQ(seen.size(), 4u);
}

namespace {

std::string traced_run(std::uint64_t seed) {
  Engine e;
  std::ostringstream log;
  e.set_trace(&log);
  RngStream rng(seed, "engine-test");
  std::function<void()> spawn = [&] {
    if (e.dispatched() > 200) return;
    const auto delay = SimTime{rng.uniform_int(0, 50)};
    e.schedule_in(delay, "spawn", static_cast<int>(rng.uniform_int(0, 9)), spawn);
    if (rng.bernoulli(0.3)) e.schedule_in(delay, "side", 3, [] {});
  };
  e.schedule(SimTime{0}, "spawn", 0, spawn);
  e.run(SimTime{100'000});
  return log.str();
}

}  // namespace

TEST(Engine, IdenticalSeedGivesIdenticalTrace) {
  const auto a = traced_run(42);
  const auto b = traced_run(42);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_NE(a, traced_run(43));
}

TEST(Engine, TraceLineFormat) {
  Engine e;
  std::ostringstream log;
  e.set_trace(&log);
  e.schedule(SimTime{12}, "hello", 4, [] {});
  e.run(SimTime{20});
  EXPECT_EQ(log.str(), "12,1,hello,4\n");
}

TEST(Engine, ManyCancellationsKeepOrder) {
  Engine e;
  std::vector<EventHandle> hs;
  std::vector<std::int64_t> fired;
  for (int i = 0; i < 1000; ++i) {
    hs.push_back(e.schedule(SimTime{1000 - i}, "x", 0, [&fired, i] { fired.push_back(1000 - i); }));
  }
  for (int i = 0; i < 1000; i += 2) EXPECT_TRUE(e.cancel(hs[static_cast<std::size_t>(i)]));
  EXPECT_EQ(e.queued(), 500u);
  e.run(SimTime{2000});
  ASSERT_EQ(fired.size(), 500u);
  EXPECT_TRUE(std::is_sorted(fired.begin(), fired.end()));
}

TEST(Rng, StreamsAreReproducibleAndIndependent) {
  RngStream a(7, "shadowing/1");
  RngStream b(7, "shadowing/1");
  RngStream c(7, "shadowing/2");
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    if (x != c.next_u64()) differs = true;
  }
  EXPECT_TRUE(differs);
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
}

TEST(Rng, UniformIntCoversRange) {
  RngStream r(1, "u");
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = r.uniform_int(0, 7);
    ASSERT_GE(v, 0);
    ASSERT_LE(v, 7);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 8u);
  EXPECT_THROW(r.uniform_int(3, 2), std::invalid_argument);
}

TEST(Rng, DistributionMoments) {
  RngStream r(3, "moments");
  const int n = 200'000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    su += r.uniform01();
    const double x = r.normal(1.0, 2.0);
    sn += x;
    sn2 += x * x;
    se += r.exponential(0.5);
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 1.0, 0.02);
  EXPECT_NEAR(sn2 / n - (sn / n) * (sn / n), 4.0, 0.06);
  EXPECT_NEAR(se / n, 2.0, 0.03);
}
