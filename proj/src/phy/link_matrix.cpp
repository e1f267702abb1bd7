#include "bsn/phy/link_matrix.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace bsn {

std::string_view to_string(Posture p) { return p == Posture::Standing ? "Standing" : "Sitting"; }

Posture posture_from_string(std::string_view s) {
  if (s == "Standing") return Posture::Standing;
  if (s == "Sitting") return Posture::Sitting;
  throw std::invalid_argument("unknown posture '" + std::string(s) + "'");
}

void LinkMatrix::set(Posture posture, std::string src_site, std::string dst_site, double probability) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw std::invalid_argument("link probability outside [0,1]");
  }
  entries_[Key{posture, std::move(src_site), std::move(dst_site)}] = probability;
}

double LinkMatrix::probability(Posture posture, std::string_view src_site, std::string_view dst_site) const {
  auto it = entries_.find(Key{posture, std::string(src_site), std::string(dst_site)});
  return it == entries_.end() ? 0.0 : it->second;
}

bool LinkMatrix::contains(Posture posture, std::string_view src_site, std::string_view dst_site) const {
  return entries_.contains(Key{posture, std::string(src_site), std::string(dst_site)});
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

LinkMatrix LinkMatrix::from_csv(std::istream& in) {
  LinkMatrix m;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv(line);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"posture", "src", "dst", "success_rate"}) {
        throw std::runtime_error("link matrix: expected header 'posture,src,dst,success_rate'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw std::runtime_error(fmt::format("link matrix line {}: expected 4 fields", line_no));
    }
    try {
      std::size_t used = 0;
      const double p = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing characters");
      m.set(posture_from_string(fields[0]), fields[1], fields[2], p);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("link matrix line {}: {}", line_no, e.what()));
    }
  }
  if (!header_seen) throw std::runtime_error("link matrix: empty file");
  return m;
}

LinkMatrix LinkMatrix::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open link matrix '" + path + "'");
  return from_csv(in);
}

void LinkMatrix::write_csv(std::ostream& out) const {
  out << "posture,src,dst,success_rate\n";
  for (const auto& [key, p] : entries_) {
    out << to_string(std::get<0>(key)) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
        << fmt::format("{}", p) << '\n';
  }
}

LinkOutcome empirical_outcome(std::string_view src_site, std::string_view dst_site, Posture posture,
                              const LinkMatrix& matrix, RngStream& rng) {
  return rng.bernoulli(matrix.probability(posture, src_site, dst_site)) ? LinkOutcome::Success
                                                                         : LinkOutcome::Loss;
}

GateOutcome interference_gate(const InterferenceGate& gate, RngStream& rng) {
  if (!gate.enabled) return GateOutcome::Pass;
  return rng.bernoulli(gate.pass_probability) ? GateOutcome::Pass : GateOutcome::Corrupt;
}

}  // namespace bsn
