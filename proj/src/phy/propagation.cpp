#include "bsn/phy/propagation.hpp"

#include <cmath>
#include <stdexcept>

#include "bsn/phy/channel.hpp"

namespace bsn {

namespace {

void check(double distance_m, const PathLossParams& p, double min_distance_m) {
  if (!(p.d0_m > 0.0) || p.exponent < 0.0 || p.shadow_sigma_db < 0.0) {
    throw std::invalid_argument("invalid path-loss parameters");
  }
  if (!std::isfinite(distance_m) || distance_m < min_distance_m) {
    throw std::domain_error("degenerate geometry");
  }
}

}  // namespace

double median_path_loss_db(double distance_m, const PathLossParams& params, double min_distance_m) {
  check(distance_m, params, min_distance_m);
  return params.pl_d0_db + 10.0 * params.exponent * std::log10(distance_m / params.d0_m);
}

double path_loss_db(double distance_m, const PathLossParams& params, RngStream& rng, double min_distance_m) {
  const double median = median_path_loss_db(distance_m, params, min_distance_m);
  if (params.shadow_sigma_db == 0.0) return median;
  return median + rng.normal(0.0, params.shadow_sigma_db);
}

std::string_view to_string(Band b) {
  switch (b) {
    case Band::MICS_402_405: return "MICS_402_405";
    case Band::ISM_2_4: return "ISM_2_4";
    case Band::WMTS: return "WMTS";
    case Band::UWB: return "UWB";
  }
  return "?";
}

Band band_from_string(std::string_view s) {
  for (Band b : {Band::MICS_402_405, Band::ISM_2_4, Band::WMTS, Band::UWB}) {
    if (to_string(b) == s) return b;
  }
  throw std::invalid_argument("unknown band '" + std::string(s) + "'");
}

std::string to_string(const ChannelId& c) {
  return std::string(to_string(c.band)) + "/" + std::to_string(c.phy_technique);
}

}  // namespace bsn
