// Acceptance harness: one PASS/FAIL line per criterion, non-zero exit when
// any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "bsn/net/network.hpp"
#include "bsn/phy/medium.hpp"
#include "support.hpp"

using namespace bsn;
using namespace bsn::scenario;
namespace bt = bsn::testing;
using nlohmann::json;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every run produced by the harness, for the energy closure criterion.
std::vector<metrics::RunMetrics> all_runs;

void keep(const std::vector<metrics::RunMetrics>& runs) { all_runs.insert(all_runs.end(), runs.begin(), runs.end()); }

double mean_of(const metrics::Aggregate& a, const char* metric, const char* cls) {
  const auto* s = a.find(metric, cls);
  return s ? s->mean : std::nan("");
}

// 1 and 5 --------------------------------------------------------------------

void protocol_ordering() {
  const auto s = bt::bundled("paper_fig2");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, metrics::Aggregate>> per;
  std::uint64_t tdma_collisions = 0;
  std::size_t tdma_runs = 0;
  for (auto p : {Protocol::Csma802154, Protocol::PbTdma, Protocol::Smac}) {
    const auto runs = net::run_replications(s, p);
    keep(runs);
    per.emplace_back(std::string(to_string(p)), metrics::aggregate(runs));
    if (p == Protocol::PbTdma) {
      for (const auto& r : runs) tdma_collisions += r.collisions;
      tdma_runs = runs.size();
    }
  }
  const double wall = seconds_since(t0);
  const double csma = mean_of(per[0].second, "pdr", "all");
  const double tdma = mean_of(per[1].second, "pdr", "all");
  const double smac = mean_of(per[2].second, "pdr", "all");
  const auto lines = metrics::ordering_lines(per);
  const auto line = std::find_if(lines.begin(), lines.end(), [](const std::string& l) { return l.rfind("pdr/all:", 0) == 0; });
  const bool ok = per[0].second.replications == 20 && s.horizon >= SimTime::from_seconds(600) && csma > tdma &&
                  csma > smac && line != lines.end() && line->rfind("pdr/all: csma802154 >", 0) == 0 && wall < 60.0;
  report(1, "Protocol ordering", ok,
         fmt::format("20 seeds x {} s; mean PDR csma802154 {:.5f}, pbtdma {:.5f}, smac {:.5f}; '{}'; {:.1f} s wall",
                     s.horizon.seconds(), csma, tdma, smac, line == lines.end() ? "" : *line, wall));
  report(5, "TDMA collision-freedom", tdma_runs == 20 && tdma_collisions == 0,
         fmt::format("{} data-frame collisions over {} full pbtdma runs", tdma_collisions, tdma_runs));
}

// 2 and 9 ----------------------------------------------------------------------

void emergency_and_energy() {
  const auto s = bt::bundled("tbw_emergency");
  auto t0 = std::chrono::steady_clock::now();
  const auto tbw = net::run_replications(s, Protocol::Tbw);
  const double wall = seconds_since(t0);
  keep(tbw);
  std::vector<SimTime> delays;
  std::uint64_t em_delivered = 0;
  for (const auto& r : tbw) {
    delays.insert(delays.end(), r.emergency_access_delays.begin(), r.emergency_access_delays.end());
    em_delivered += r.per_class[index_of(TrafficClass::Emergency)].delivered;
  }
  const bool all_under = std::all_of(delays.begin(), delays.end(), [](SimTime d) { return d < SimTime::from_seconds(1); });
  const SimTime median = delays.empty() ? SimTime::never() : metrics::percentile(delays, 50);
  const SimTime worst = delays.empty() ? SimTime::never() : metrics::percentile(delays, 100);
  const bool ok2 = tbw.size() == 20 && !delays.empty() && delays.size() == em_delivered && all_under &&
                   median < SimTime::from_ms(50) && wall < 30.0;
  report(2, "Emergency latency bound", ok2,
         fmt::format("{} emergency frames delivered over {} seeds; median {:.3f} ms, max {:.3f} ms; {:.1f} s wall",
                     delays.size(), tbw.size(), median.seconds() * 1e3, worst.seconds() * 1e3, wall));

  const auto always = net::run_replications(s, Protocol::TbwAlwaysOn);
  keep(always);
  bool ok9 = always.size() == tbw.size();
  double worst_ratio = 0;
  std::uint64_t worst_gap = 0;
  for (std::size_t i = 0; i < tbw.size() && i < always.size(); ++i) {
    const double a = tbw[i].node("bnc")->consumed_j, b = always[i].node("bnc")->consumed_j;
    const auto da = tbw[i].totals().delivered, db = always[i].totals().delivered;
    const auto gap = da > db ? da - db : db - da;
    ok9 = ok9 && tbw[i].seed == always[i].seed && a < b && gap <= 1;
    worst_ratio = std::max(worst_ratio, a / b);
    worst_gap = std::max(worst_gap, gap);
  }
  report(9, "TBW energy saving", ok9,
         fmt::format("{} paired seeds; BNC energy TBW/always-on at most {:.4f}; delivered-frame gap at most {}",
                     tbw.size(), worst_ratio, worst_gap));
}

// 3 ---------------------------------------------------------------------------

void link_table() {
  auto s = bt::bundled("table1_links");
  const std::map<std::pair<std::string, std::string>, std::pair<double, double>> table{
      {{"chest", "waist"}, {0.99, 0.99}}, {{"chest", "ankle"}, {0.84, 0.81}}, {{"waist", "chest"}, {1.00, 0.99}},
      {{"waist", "ankle"}, {0.50, 0.47}}, {{"ankle", "chest"}, {0.72, 0.77}}, {{"ankle", "waist"}, {0.76, 0.27}}};
  bool ok = true;
  double worst = 0;
  std::size_t links = 0;
  std::string detail;
  for (auto posture : {Posture::Standing, Posture::Sitting}) {
    s.propagation.medium.posture = posture;
    for (const auto& probe : net::probe_links(s, 1, 100'000)) {
      const auto it = table.find({probe.src_site, probe.dst_site});
      if (it == table.end()) continue;
      const double want = posture == Posture::Standing ? it->second.first : it->second.second;
      const double err = std::abs(probe.rate() - want);
      worst = std::max(worst, err);
      ok = ok && probe.sent == 100'000 && err <= 0.01;
      ++links;
      if (probe.src_site == "ankle" && probe.dst_site == "waist" && posture == Posture::Sitting) {
        detail = fmt::format("ankle->waist sitting {:.4f}", probe.rate());
      }
    }
  }
  report(3, "Link table reproduction", ok && links == 12,
         fmt::format("{} directed links x 1e5 frames; max |error| {:.4f}; {}", links, worst, detail));
}

// 4 ---------------------------------------------------------------------------

void interference_gate() {
  auto j = bt::star(1);
  auto on = j;
  on["propagation"]["interference"] = {{"enabled", true}, {"pass_probability", 0.9685}};
  auto rate = [](const Scenario& s) {
    std::uint64_t sent = 0, ok = 0;
    for (const auto& p : net::probe_links(s, 7, 100'000)) {
      sent += p.sent;
      ok += p.delivered;
    }
    return static_cast<double>(ok) / static_cast<double>(sent);
  };
  const double r_on = rate(bt::make(on));
  const double r_off = rate(bt::make(j));
  report(4, "Interference gate reproduction", std::abs(r_on - 0.9685) <= 0.005 && r_off == 1.0,
         fmt::format("gate on: {:.4f} (target 0.9685 +- 0.005); gate off: {}", r_on, metrics::format_number(r_off)));
}

// 6 ---------------------------------------------------------------------------

void cca_blindness() {
  PropagationConfig cfg;
  cfg.on_body.shadow_sigma_db = 0.0;
  cfg.through_body.shadow_sigma_db = 0.0;
  const double threshold = -85.0;
  Medium m(ChannelId{Band::ISM_2_4, 0}, cfg, 1);
  const int implant = m.attach({0, {0, 0, 0}, "abdomen", true, -95});
  const int far = m.attach({1, {3, 0, 0}, "visitor", false, -95});
  const int chest = m.attach({2, {0, 0.5, 0}, "chest", false, -95});
  const int waist = m.attach({3, {0, 0, 0.1}, "waist", false, -95});
  const auto t1 = m.begin(implant, -5.0, SimTime{0}, SimTime{4096}, true);
  const auto far_result = m.cca_at(far, threshold, SimTime{10});
  const double far_dbm = m.rx_dbm(t1, far);
  m.finish(t1, SimTime{4096});
  const auto t2 = m.begin(chest, -5.0, SimTime{5000}, SimTime{4096}, true);
  const auto near_result = m.cca_at(waist, threshold, SimTime{5010});
  const double near_dbm = m.rx_dbm(t2, waist);
  m.finish(t2, SimTime{9096});
  report(6, "CCA blindness", far_result == CcaResult::Idle && near_result == CcaResult::Busy,
         fmt::format("in-body tx seen at 3 m: {:.1f} dBm -> {}; same-piconet tx at 0.5 m: {:.1f} dBm -> {}", far_dbm,
                     far_result == CcaResult::Idle ? "Idle" : "Busy", near_dbm,
                     near_result == CcaResult::Idle ? "Idle" : "Busy"));
}

// 8 ---------------------------------------------------------------------------

std::vector<tbw::Interval> union_of(std::vector<tbw::Interval> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  std::vector<tbw::Interval> out;
  for (const auto& x : v) {
    if (!out.empty() && x.start <= out.back().end) {
      out.back().end = std::max(out.back().end, x.end);
    } else {
      out.push_back(x);
    }
  }
  return out;
}

void pattern_property() {
  RngStream rng(2024, "acceptance/pattern");
  const int cases = 1200;
  int bad = 0;
  std::int64_t tick_checked = 0;
  std::string first_failure;
  auto fail = [&](const std::string& why) {
    if (bad++ == 0) first_failure = why;
  };
  for (int c = 0; c < cases && bad == 0; ++c) {
    const bool small = c % 2 == 0;  // small cases are also walked tick by tick
    const std::vector<std::int64_t> periods =
        small ? std::vector<std::int64_t>{60, 90, 120, 180, 360}
              : std::vector<std::int64_t>{40'000, 200'000, 1'000'000, 2'000'000, 10'000'000};
    tbw::WakeupTable table;
    std::vector<tbw::WakeupEntry> entries;
    const int n = static_cast<int>(rng.uniform_int(1, 6));
    for (int i = 0; i < n; ++i) {
      const std::int64_t per = periods[static_cast<std::size_t>(rng.uniform_int(0, 4))];
      tbw::WakeupEntry e{i, SimTime{per}, SimTime{rng.uniform_int(0, per - 1)}, SimTime{rng.uniform_int(1, per / 3)},
                         TrafficClass::NormalLow};
      table = tbw::table_update(table, e, tbw::TableAction::Insert);
      entries.push_back(e);
    }
    const SimTime guard{rng.uniform_int(0, small ? 10 : 5000)};
    const auto p = tbw::derive_bnc_pattern(table, guard);
    std::int64_t hyper = 1;
    for (const auto& e : entries) hyper = std::lcm(hyper, e.period.ticks());
    if (p.hyperperiod.ticks() != hyper) {
      fail(fmt::format("case {}: hyperperiod {} != {}", c, p.hyperperiod.ticks(), hyper));
      break;
    }
    // Unroll every guarded window over two hyperperiods, then fold into one.
    std::vector<tbw::Interval> raw;
    for (const auto& e : entries) {
      for (std::int64_t k = -1; k * e.period.ticks() < hyper; ++k) {
        const std::int64_t s0 = e.offset.ticks() + k * e.period.ticks() - guard.ticks();
        const std::int64_t s1 = s0 + e.window.ticks() + 2 * guard.ticks();
        for (const std::int64_t shift : {-hyper, std::int64_t{0}, hyper}) {
          const std::int64_t a = std::max<std::int64_t>(s0 + shift, 0);
          const std::int64_t b = std::min<std::int64_t>(s1 + shift, hyper);
          if (a < b) raw.push_back({SimTime{a}, SimTime{b}});
        }
      }
    }
    const auto want = union_of(raw);
    std::int64_t want_measure = 0;
    for (const auto& x : want) want_measure += x.length().ticks();
    // Superset: every window lies in the awake set.
    for (const auto& e : entries) {
      for (std::int64_t k = 0; k * e.period.ticks() < 2 * hyper; ++k) {
        const SimTime st = e.offset + e.period * k;
        if (!p.awake_at(st - guard) || !p.awake_at(st + e.window + guard - SimTime{1})) {
          fail(fmt::format("case {}: window of entry {} at {} not covered", c, e.node, st.ticks()));
        }
      }
    }
    if (p.awake_measure().ticks() != want_measure) {
      fail(fmt::format("case {}: awake measure {} != {} (hyper {}, guard {})", c, p.awake_measure().ticks(), want_measure,
                       hyper, guard.ticks()));
    }
    if (small) {
      for (std::int64_t t = 0; t < hyper; ++t) {
        const bool in_want = std::any_of(want.begin(), want.end(), [t](const auto& x) { return x.start.ticks() <= t && t < x.end.ticks(); });
        if (p.awake_at(SimTime{t}) != in_want) {
          fail(fmt::format("case {}: tick {} awake {} expected {}", c, t, p.awake_at(SimTime{t}), in_want));
          break;
        }
        ++tick_checked;
      }
    }
  }
  report(8, "BNC pattern optimality", bad == 0,
         fmt::format("{} random tables, {} mismatches; {} ticks walked against the oracle{}", cases, bad, tick_checked,
                     first_failure.empty() ? "" : "; first: " + first_failure));
}

// 10 --------------------------------------------------------------------------

void bridging() {
  const auto s = bt::bundled("bridge_inbody");
  net::Network n(s, Protocol::PbTdma, 1);
  n.record_deliveries(true);
  n.run(s.horizon);
  const auto m = n.metrics();
  keep({m});
  std::set<int> in_body;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    if (s.nodes[i].role == Role::InBody) in_body.insert(static_cast<int>(i));
  }
  const int bnc = s.bnc_index();
  std::size_t inbody_deliveries = 0, unbridged = 0, altered = 0, unmatched = 0;
  std::map<std::pair<int, std::uint64_t>, const bridge::Mpdu*> born;
  for (const auto& g : n.generated()) born[{g.src, g.seq}] = &g;
  for (const auto& d : n.deliveries()) {
    const auto& mp = d.mpdu;
    if (in_body.count(mp.src) || in_body.count(mp.dst)) {
      ++inbody_deliveries;
      const bool via_bridge = mp.dst != bnc && mp.src != bnc &&
                              std::any_of(mp.hop_trace.begin(), mp.hop_trace.end(), [bnc](const bridge::Hop& h) { return h.node == bnc; });
      if (!via_bridge) ++unbridged;
    }
    const auto it = born.find({mp.src, mp.seq});
    if (it == born.end()) {
      ++unmatched;
      continue;
    }
    const auto& o = *it->second;
    if (o.payload_digest != mp.payload_digest || o.cls != mp.cls || o.payload_bytes != mp.payload_bytes ||
        o.dst != mp.dst || o.created_at != mp.created_at) {
      ++altered;
    }
  }
  const auto tot = m.totals();
  const double pdr = metrics::pdr(m).value_or(0.0);
  report(10, "Bridging invariants", inbody_deliveries > 0 && unbridged == 0 && altered == 0 && unmatched == 0 &&
                                        tot.generated >= 100'000 && std::abs(pdr - 0.9 * 0.8) <= 0.02 &&
                                        n.conservation().bridge_conserved,
         fmt::format("(a) {} in-body deliveries, {} without a bridge hop; (b) PDR {:.4f} over {} frames (0.72 +- 0.02); "
                     "(c) {} altered, {} unmatched",
                     inbody_deliveries, unbridged, pdr, tot.generated, altered, unmatched));
}

// 11 --------------------------------------------------------------------------

void determinism() {
  bool ok = true;
  std::size_t bytes = 0;
  for (const char* name : {"paper_fig2", "tbw_emergency", "bridge_inbody"}) {
    const auto s = bt::bundled(name);
    const auto p = std::string(name) == "tbw_emergency" ? Protocol::Tbw
                                                          : (std::string(name) == "paper_fig2" ? Protocol::Csma802154 : Protocol::PbTdma);
    std::string trace[2], csv[2];
    for (int k = 0; k < 2; ++k) {
      std::ostringstream t, c;
      const auto r = net::run_once(s, p, 11, SimTime::from_seconds(120), &t);
      metrics::write_run_csv(c, r);
      trace[k] = t.str();
      csv[k] = c.str();
    }
    ok = ok && !trace[0].empty() && trace[0] == trace[1] && csv[0] == csv[1];
    bytes += trace[0].size() + csv[0].size();
  }
  report(11, "Determinism", ok, fmt::format("traces and run CSVs byte-identical across repeated runs ({} bytes compared)", bytes));
}

// 12 --------------------------------------------------------------------------

void backoff_oracle() {
  // Two-node, simultaneous-start contention: both nodes generate at the same
  // tick once per beacon interval, with no retries.
  const std::int64_t trials = 100'000;
  auto j = bt::star(2);
  const double bi = mac::SuperframeConfig{3, 3}.beacon_interval().seconds();
  j["horizon_s"] = bi * static_cast<double>(trials);
  j["protocols"] = {{"csma802154", {{"beacon_order", 3}, {"superframe_order", 3}, {"mac_max_frame_retries", 0}}}};
  j["traffic"] = json::array({{{"node", "n1"}, {"class", "NormalHigh"}, {"period_s", bi}, {"start_offset_s", 0.01}},
                              {{"node", "n2"}, {"class", "NormalHigh"}, {"period_s", bi}, {"start_offset_s", 0.01}}});
  const auto s = bt::make(j);
  const auto m = net::run_once(s, Protocol::Csma802154, 1);
  int equal = 0;
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) equal += a == b;
  }
  const double oracle = equal / 64.0;
  const auto gen = m.totals().generated;
  const double freq = static_cast<double>(m.collisions) / 2.0 / static_cast<double>(trials);
  report(12, "Backoff oracle", gen == 2 * static_cast<std::uint64_t>(trials) && std::abs(freq - oracle) <= 0.01,
         fmt::format("{} trials, {} frames generated, collision frequency {:.4f}; 8x8 enumeration gives {:.4f}", trials, gen, freq, oracle));
}

// 7 ---------------------------------------------------------------------------

void energy_closure() {
  std::size_t nodes = 0, bad_j = 0, bad_ticks = 0;
  double worst = 0;
  for (const auto& r : all_runs) {
    for (const auto& n : r.nodes) {
      ++nodes;
      double sum = 0;
      for (const auto& radio : n.radios) {
        sum += radio.recomputed_j;
        std::int64_t t = 0;
        for (auto x : radio.state_ticks) t += x;
        if (t != n.lifetime_ticks) ++bad_ticks;
      }
      const double rel = n.consumed_j > 0 ? std::abs(n.consumed_j - sum) / n.consumed_j : (sum == 0 ? 0.0 : 1.0);
      worst = std::max(worst, rel);
      if (!(rel < 1e-9)) ++bad_j;
    }
  }
  report(7, "Energy ledger closure", nodes > 0 && bad_j == 0 && bad_ticks == 0,
         fmt::format("{} node reports over {} runs; worst relative error {:.3g}; {} tick mismatches", nodes, all_runs.size(),
                     worst, bad_ticks));
}

}  // namespace

int main() {
  try {
    protocol_ordering();
    emergency_and_energy();
    link_table();
    interference_gate();
    cca_blindness();
    pattern_property();
    bridging();
    determinism();
    backoff_oracle();
    energy_closure();
  } catch (const std::exception& e) {
    std::cout << "FAIL harness: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : fmt::format("{} criteria failed", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
