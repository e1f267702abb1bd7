#pragma once

#include "bsn/sim/rng.hpp"

namespace bsn {

/// Log-distance path loss with log-normal shadowing:
///   PL(d) = pl_d0 + 10 * exponent * log10(d / d0) + X,  X ~ N(0, shadow_sigma^2)
struct PathLossParams {
  double pl_d0_db = 40.0;
  double d0_m = 0.1;
  double exponent = 3.38;
  double shadow_sigma_db = 4.0;

  bool operator==(const PathLossParams&) const = default;

  static PathLossParams on_body_default() { return {40.0, 0.1, 3.38, 4.0}; }
  static PathLossParams through_body_default() { return {47.0, 0.05, 4.0, 7.0}; }
};

inline constexpr double kDefaultMinDistanceM = 0.01;

/// Throws std::invalid_argument on invalid parameters and
/// std::domain_error("degenerate geometry") when distance < min_distance.
/// Draws from `rng` only when shadow_sigma_db > 0.
double path_loss_db(double distance_m, const PathLossParams& params, RngStream& rng,
                    double min_distance_m = kDefaultMinDistanceM);

/// Deterministic median loss (no shadowing term).
double median_path_loss_db(double distance_m, const PathLossParams& params,
                           double min_distance_m = kDefaultMinDistanceM);

constexpr double rx_power_dbm(double tx_dbm, double loss_db) { return tx_dbm - loss_db; }

}  // namespace bsn
