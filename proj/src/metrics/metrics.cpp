#include "bsn/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace bsn::metrics {

ClassCounts RunMetrics::totals() const {
  ClassCounts t;
  for (const auto& c : per_class) {
    t.generated += c.generated;
    t.delivered += c.delivered;
    t.dropped += c.dropped;
    t.in_flight += c.in_flight;
  }
  return t;
}

const NodeReport* RunMetrics::node(const std::string& name) const {
  for (const auto& n : nodes) {
    if (n.name == name) return &n;
  }
  return nullptr;
}

std::optional<double> pdr(const RunMetrics& m, std::span<const TrafficClass> classes) {
  std::uint64_t gen = 0;
  std::uint64_t del = 0;
  auto add = [&](TrafficClass c) {
    gen += m.per_class[index_of(c)].generated;
    del += m.per_class[index_of(c)].delivered;
  };
  if (classes.empty()) {
    for (auto c : kAllTrafficClasses) add(c);
  } else {
    for (auto c : classes) add(c);
  }
  if (gen == 0) return std::nullopt;
  return static_cast<double>(del) / static_cast<double>(gen);
}

SimTime percentile(std::span<const SimTime> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile outside [0, 100]");
  std::vector<SimTime> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Stats summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summary of an empty sample");
  Stats s;
  s.n = values.size();
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.min == s.max) {
    s.mean = s.min;  // identical samples: no rounding residue in mean or spread
    return s;
  }
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

const Stats* Aggregate::find(const std::string& metric, const std::string& cls) const {
  auto it = metrics.find({metric, cls});
  return it == metrics.end() ? nullptr : &it->second;
}

std::vector<MetricRow> scalar_rows(const RunMetrics& m) {
  std::vector<MetricRow> rows;
  auto put = [&](std::string metric, std::string cls, double v) { rows.push_back({std::move(metric), std::move(cls), v}); };

  const auto tot = m.totals();
  put("generated", "all", static_cast<double>(tot.generated));
  put("delivered", "all", static_cast<double>(tot.delivered));
  put("dropped", "all", static_cast<double>(tot.dropped));
  put("in_flight", "all", static_cast<double>(tot.in_flight));
  if (auto v = pdr(m)) put("pdr", "all", *v);
  for (auto c : kAllTrafficClasses) {
    const auto& cc = m.per_class[index_of(c)];
    if (cc.generated == 0) continue;
    const std::string name(to_string(c));
    put("generated", name, static_cast<double>(cc.generated));
    put("delivered", name, static_cast<double>(cc.delivered));
    put("dropped", name, static_cast<double>(cc.dropped));
    const TrafficClass one[] = {c};
    put("pdr", name, *pdr(m, one));
  }

  std::vector<SimTime> all;
  all.reserve(m.latency_samples.size());
  for (const auto& s : m.latency_samples) all.push_back(s.latency);
  if (!all.empty()) {
    double sum = 0.0;
    for (auto t : all) sum += t.seconds();
    put("latency_mean_s", "all", sum / static_cast<double>(all.size()));
    put("latency_p50_s", "all", percentile(all, 50).seconds());
    put("latency_p95_s", "all", percentile(all, 95).seconds());
    put("latency_max_s", "all", percentile(all, 100).seconds());
  }
  for (auto c : kAllTrafficClasses) {
    std::vector<SimTime> v;
    for (const auto& s : m.latency_samples) {
      if (s.cls == c) v.push_back(s.latency);
    }
    if (v.empty()) continue;
    const std::string name(to_string(c));
    put("latency_p50_s", name, percentile(v, 50).seconds());
    put("latency_p95_s", name, percentile(v, 95).seconds());
  }
  if (!m.emergency_access_delays.empty()) {
    put("emergency_access_p50_s", "Emergency", percentile(m.emergency_access_delays, 50).seconds());
    put("emergency_access_max_s", "Emergency", percentile(m.emergency_access_delays, 100).seconds());
  }

  put("collisions", "all", static_cast<double>(m.collisions));
  put("queue_drops", "all", static_cast<double>(m.queue_drops));
  put("channel_access_failures", "all", static_cast<double>(m.channel_access_failures));
  put("retry_drops", "all", static_cast<double>(m.retry_drops));
  put("channel_losses", "all", static_cast<double>(m.channel_losses));
  put("bridge_drops", "all", static_cast<double>(m.bridge_drops));
  put("emergency_failures", "all", static_cast<double>(m.emergency_failures));

  double consumed = 0.0;
  for (const auto& n : m.nodes) {
    consumed += n.consumed_j;
    put("energy_j", n.name, n.consumed_j);
  }
  put("energy_total_j", "all", consumed);
  if (m.delivered_bits > 0) put("energy_per_bit_j", "all", consumed / static_cast<double>(m.delivered_bits));
  return rows;
}

Aggregate aggregate(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate over zero runs");
  std::map<std::pair<std::string, std::string>, std::vector<double>> samples;
  for (const auto& r : runs) {
    for (auto& row : scalar_rows(r)) samples[{row.metric, row.cls}].push_back(row.value);
  }
  Aggregate a;
  a.replications = runs.size();
  for (const auto& [key, v] : samples) a.metrics.emplace(key, summarize(v));
  return a;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

void write_run_csv(std::ostream& out, const RunMetrics& m) {
  out << "metric,class,value\n";
  for (const auto& row : scalar_rows(m)) {
    out << row.metric << ',' << row.cls << ',' << format_number(row.value) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<std::pair<std::string, Aggregate>>& per_protocol) {
  out << "protocol,metric,class,mean,std,min,max,n\n";
  for (const auto& [proto, agg] : per_protocol) {
    for (const auto& [key, s] : agg.metrics) {
      out << proto << ',' << key.first << ',' << key.second << ',' << format_number(s.mean) << ','
          << format_number(s.stddev) << ',' << format_number(s.min) << ',' << format_number(s.max) << ',' << s.n
          << '\n';
    }
  }
}

void write_aggregate_report(std::ostream& out, const std::vector<std::pair<std::string, Aggregate>>& per_protocol) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& [proto, agg] : per_protocol) {
    nlohmann::ordered_json block = nlohmann::ordered_json::object();
    block["replications"] = agg.replications;
    nlohmann::ordered_json ms = nlohmann::ordered_json::object();
    for (const auto& [key, s] : agg.metrics) {
      ms[key.first][key.second] = {{"mean", s.mean}, {"std", s.stddev}, {"min", s.min}, {"max", s.max}, {"n", s.n}};
    }
    block["metrics"] = std::move(ms);
    root[proto] = std::move(block);
  }
  root["ordering"] = ordering_lines(per_protocol);
  out << root.dump(2) << '\n';
}

bool higher_is_better(const std::string& metric) { return metric == "pdr" || metric == "delivered"; }

std::vector<std::string> ordering_lines(const std::vector<std::pair<std::string, Aggregate>>& per_protocol) {
  std::vector<std::string> lines;
  if (per_protocol.empty()) return lines;
  const auto& first = per_protocol.front().second;
  for (const auto& [key, unused] : first.metrics) {
    (void)unused;
    const auto& metric = key.first;
    if (metric != "pdr" && metric.rfind("latency_", 0) != 0 &&
        metric.rfind("emergency_access_", 0) != 0 && metric != "energy_total_j" &&
        metric != "energy_per_bit_j" && metric != "collisions") {
      continue;
    }
    std::vector<std::pair<std::string, double>> ranked;
    for (const auto& [proto, agg] : per_protocol) {
      if (const auto* s = agg.find(key.first, key.second)) ranked.emplace_back(proto, s->mean);
    }
    if (ranked.size() < 2) continue;
    const bool up = higher_is_better(metric);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [up](const auto& a, const auto& b) { return up ? a.second > b.second : a.second < b.second; });
    std::string line = metric + "/" + key.second + ":";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (i > 0) line += (ranked[i].second == ranked[i - 1].second) ? " =" : (up ? " >" : " <");
      line += " " + ranked[i].first;
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace bsn::metrics
