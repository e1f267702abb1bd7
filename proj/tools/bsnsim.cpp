#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "bsn/metrics/metrics.hpp"
#include "bsn/net/network.hpp"
#include "bsn/scenario/scenario.hpp"

namespace fs = std::filesystem;
using namespace bsn;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

std::vector<scenario::Protocol> parse_protocols(const std::vector<std::string>& names) {
  std::vector<scenario::Protocol> out;
  for (const auto& n : names) out.push_back(scenario::protocol_from_string(n));
  return out;
}

std::optional<SimTime> until_of(const std::optional<double>& s) {
  if (!s) return std::nullopt;
  if (*s <= 0) throw std::invalid_argument("--until must be positive");
  return SimTime::from_seconds(*s);
}

void write_comparison(const fs::path& dir, const std::vector<std::pair<std::string, metrics::Aggregate>>& agg) {
  {
    auto f = open_out(dir / "aggregate.csv");
    metrics::write_aggregate_csv(f, agg);
  }
  {
    auto f = open_out(dir / "report.json");
    metrics::write_aggregate_report(f, agg);
  }
  auto f = open_out(dir / "ordering.txt");
  for (const auto& line : metrics::ordering_lines(agg)) {
    f << line << '\n';
    std::cout << line << '\n';
  }
}

int cmd_run(const std::string& path, const std::string& proto, std::optional<std::uint64_t> seed,
            std::optional<int> reps, std::optional<double> until_s, const std::string& out) {
  const auto sc = scenario::load(path);
  const auto p = scenario::protocol_from_string(proto);
  const auto until = until_of(until_s);
  std::vector<metrics::RunMetrics> runs;
  if (seed) {
    runs.push_back(net::run_once(sc, p, *seed, until));
  } else {
    runs = net::run_replications(sc, p, reps, until);
  }
  const fs::path dir(out);
  for (const auto& r : runs) {
    auto f = open_out(dir / fmt::format("run_{}_seed{}.csv", r.protocol, r.seed));
    metrics::write_run_csv(f, r);
    const auto pdr = metrics::pdr(r, kAllTrafficClasses);
    std::cout << fmt::format("{} seed {}: generated {} delivered {} pdr {}\n", r.protocol, r.seed, r.totals().generated,
                             r.totals().delivered, pdr ? metrics::format_number(*pdr) : std::string("n/a"));
  }
  const std::vector<std::pair<std::string, metrics::Aggregate>> agg{{std::string(scenario::to_string(p)),
                                                                     metrics::aggregate(runs)}};
  auto f = open_out(dir / "aggregate.csv");
  metrics::write_aggregate_csv(f, agg);
  auto j = open_out(dir / "report.json");
  metrics::write_aggregate_report(j, agg);
  return 0;
}

int cmd_compare(const std::string& path, const std::vector<std::string>& protos, std::optional<int> reps,
                std::optional<double> until_s, const std::string& out) {
  if (protos.size() < 2) throw std::invalid_argument("need >= 2 protocols");
  const auto sc = scenario::load(path);
  const auto agg = net::compare_protocols(sc, parse_protocols(protos), reps, until_of(until_s));
  write_comparison(out, agg);
  return 0;
}

int cmd_sweep(const std::string& path, const std::vector<std::string>& protos, std::optional<int> reps,
              std::optional<double> until_s, const std::string& out) {
  if (protos.size() < 2) throw std::invalid_argument("need >= 2 protocols");
  const auto sc = scenario::load(path);
  if (sc.load_sweep.empty()) throw std::invalid_argument("scenario has no load_sweep");
  auto f = open_out(fs::path(out) / "sweep.csv");
  f << "load,protocol,metric,class,mean,std,min,max,n\n";
  for (double factor : sc.load_sweep) {
    const auto scaled = scenario::scale_load(sc, factor);
    const auto agg = net::compare_protocols(scaled, parse_protocols(protos), reps, until_of(until_s));
    std::ostringstream csv;
    metrics::write_aggregate_csv(csv, agg);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) f << metrics::format_number(factor) << ',' << line << '\n';
    for (const auto& l : metrics::ordering_lines(agg)) {
      if (l.rfind("pdr/all", 0) == 0) std::cout << "load " << metrics::format_number(factor) << ": " << l << '\n';
    }
  }
  return 0;
}

int cmd_trace(const std::string& path, const std::string& proto, std::uint64_t seed, std::optional<double> until_s,
              const std::string& out) {
  const auto sc = scenario::load(path);
  const auto p = scenario::protocol_from_string(proto);
  const auto until = until_of(until_s);
  if (out.empty()) {
    net::run_once(sc, p, seed, until, &std::cout);
    return 0;
  }
  const fs::path dir(out);
  metrics::RunMetrics r;
  {
    auto f = open_out(dir / "trace.csv");
    f << "tick,seq,kind,target\n";
    r = net::run_once(sc, p, seed, until, &f);
  }
  auto m = open_out(dir / "metrics.csv");
  metrics::write_run_csv(m, r);
  return 0;
}

int cmd_probe(const std::string& path, std::uint64_t seed, std::uint64_t frames) {
  const auto sc = scenario::load(path);
  std::cout << "src,dst,sent,delivered,rate\n";
  for (const auto& l : net::probe_links(sc, seed, frames)) {
    std::cout << fmt::format("{},{},{},{},{:.4f}\n", l.src_site, l.dst_site, l.sent, l.delivered, l.rate());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Body sensor network MAC simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string protocol = "csma802154";
  std::vector<std::string> protocols;
  std::optional<std::uint64_t> seed;
  std::uint64_t trace_seed = 1;
  std::optional<int> reps;
  std::optional<double> until;
  std::string out = "out";
  std::string trace_out;
  std::uint64_t frames = 10000;
  bool dump_routes = false;

  auto* run = app.add_subcommand("run", "Run one protocol over seeded replications");
  run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--protocol", protocol, "csma802154, pbtdma, smac, tbw or tbw-always-on");
  run->add_option("--seed", seed, "Single seed (default: the scenario's replication seeds)");
  run->add_option("--reps", reps, "Number of replications");
  run->add_option("--until", until, "Simulated seconds (default: scenario horizon)");
  run->add_option("--out", out, "Output directory");
  run->add_flag("--dump-routes", dump_routes, "Print the route table before running");

  auto* compare = app.add_subcommand("compare", "Paired comparison of several protocols");
  compare->add_option("--scenario", scenario_path)->required();
  compare->add_option("--protocols", protocols, "Comma-separated list")->delimiter(',')->required();
  compare->add_option("--reps", reps);
  compare->add_option("--until", until);
  compare->add_option("--out", out);

  auto* sweep = app.add_subcommand("sweep", "Compare protocols at every load multiplier of the scenario");
  sweep->add_option("--scenario", scenario_path)->required();
  sweep->add_option("--protocols", protocols)->delimiter(',')->required();
  sweep->add_option("--reps", reps);
  sweep->add_option("--until", until);
  sweep->add_option("--out", out);

  auto* routes = app.add_subcommand("dump-routes", "Print the resolved route of every node pair");
  routes->add_option("--scenario", scenario_path)->required();

  auto* trace = app.add_subcommand("trace", "Dump the event trace of one run");
  trace->add_option("--scenario", scenario_path)->required();
  trace->add_option("--protocol", protocol);
  trace->add_option("--seed", trace_seed);
  trace->add_option("--until", until);
  trace->add_option("--out", trace_out, "Directory for trace.csv and metrics.csv (default: stdout)");

  auto* probe = app.add_subcommand("probe-links", "Measure the success rate of every directed link");
  probe->add_option("--scenario", scenario_path)->required();
  probe->add_option("--seed", trace_seed);
  probe->add_option("--frames", frames);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (dump_routes) net::write_routes(std::cout, scenario::load(scenario_path));
      return cmd_run(scenario_path, protocol, seed, reps, until, out);
    }
    if (compare->parsed()) return cmd_compare(scenario_path, protocols, reps, until, out);
    if (sweep->parsed()) return cmd_sweep(scenario_path, protocols, reps, until, out);
    if (routes->parsed()) {
      net::write_routes(std::cout, scenario::load(scenario_path));
      return 0;
    }
    if (trace->parsed()) return cmd_trace(scenario_path, protocol, trace_seed, until, trace_out);
    if (probe->parsed()) return cmd_probe(scenario_path, trace_seed, frames);
  } catch (const scenario::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
