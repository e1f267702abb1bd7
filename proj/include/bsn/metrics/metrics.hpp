#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bsn/sim/time.hpp"
#include "bsn/traffic/traffic.hpp"

namespace bsn::metrics {

struct ClassCounts {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;  // held somewhere in the network at the horizon

  bool operator==(const ClassCounts&) const = default;
};

struct LatencySample {
  TrafficClass cls = TrafficClass::NormalMedium;
  SimTime latency{};

  bool operator==(const LatencySample&) const = default;
};

struct RadioEnergy {
  std::string radio;  // interface label, e.g. "ISM_2_4/0" or "wakeup"
  double consumed_j = 0.0;
  double recomputed_j = 0.0;  // sum of ticks x power
  std::array<std::int64_t, 4> state_ticks{};

  bool operator==(const RadioEnergy&) const = default;
};

struct NodeReport {
  std::string name;
  double initial_j = 0.0;
  double consumed_j = 0.0;
  std::optional<SimTime> death_time;
  std::int64_t lifetime_ticks = 0;
  std::vector<RadioEnergy> radios;

  bool operator==(const NodeReport&) const = default;
};

/// Everything measured in one seeded run of one protocol.
struct RunMetrics {
  std::string protocol;
  std::uint64_t seed = 0;
  SimTime horizon{};
  std::array<ClassCounts, kTrafficClassCount> per_class{};
  std::vector<LatencySample> latency_samples;
  std::vector<SimTime> emergency_access_delays;
  std::uint64_t collisions = 0;       // data frames lost to overlap, per receiver
  std::uint64_t control_collisions = 0;
  std::uint64_t bridge_drops = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t channel_access_failures = 0;
  std::uint64_t retry_drops = 0;
  std::uint64_t channel_losses = 0;
  std::uint64_t emergency_failures = 0;
  std::uint64_t delivered_bits = 0;
  std::uint64_t events = 0;
  std::vector<NodeReport> nodes;

  bool operator==(const RunMetrics&) const = default;

  ClassCounts totals() const;
  const NodeReport* node(const std::string& name) const;
};

/// delivered / generated over the selected classes (all when empty);
/// std::nullopt when nothing was generated.
std::optional<double> pdr(const RunMetrics& m, std::span<const TrafficClass> classes = {});

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample, rank
/// clamped to [1, n]. Throws std::invalid_argument on empty input or p
/// outside [0, 100].
SimTime percentile(std::span<const SimTime> samples, double p);

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1) deviation, 0 for n = 1
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;

  bool operator==(const Stats&) const = default;
};

/// Throws std::invalid_argument on empty input.
Stats summarize(std::span<const double> values);

/// (metric, class) keyed summaries across replications.
struct Aggregate {
  std::map<std::pair<std::string, std::string>, Stats> metrics;
  std::size_t replications = 0;

  const Stats* find(const std::string& metric, const std::string& cls) const;
};

/// Scalar (metric, class, value) rows of one run; absent values are omitted.
struct MetricRow {
  std::string metric;
  std::string cls;
  double value = 0.0;
};
std::vector<MetricRow> scalar_rows(const RunMetrics& m);

/// Throws std::invalid_argument on an empty run list.
Aggregate aggregate(std::span<const RunMetrics> runs);

/// `metric,class,value`
void write_run_csv(std::ostream& out, const RunMetrics& m);
/// `protocol,metric,class,mean,std,min,max,n`
void write_aggregate_csv(std::ostream& out, const std::vector<std::pair<std::string, Aggregate>>& per_protocol);
/// Key-value tree (JSON) with one block per protocol.
void write_aggregate_report(std::ostream& out, const std::vector<std::pair<std::string, Aggregate>>& per_protocol);

/// True when larger values of `metric` are better (delivery ratios).
bool higher_is_better(const std::string& metric);

/// "metric/class: a > b > c" ranking lines over the protocols' means,
/// best first; ties keep the input order.
std::vector<std::string> ordering_lines(const std::vector<std::pair<std::string, Aggregate>>& per_protocol);

/// Shortest round-trip decimal rendering used in every CSV.
std::string format_number(double v);

}  // namespace bsn::metrics
