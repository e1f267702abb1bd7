#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace bsn {

/// One deterministic random substream.
///
/// A stream is identified by the run's master seed and a stable label such
/// as "shadowing/7". Streams with different labels are seeded independently,
/// so adding a node never perturbs the draws of existing nodes.
///
/// Only the engine (std::mt19937_64) comes from the standard library; the
/// distributions below are written out so that draw sequences do not depend
/// on the standard library implementation.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view label);

  std::uint64_t master_seed() const { return master_seed_; }
  const std::string& label() const { return label_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform01();
  /// Uniform integer in [lo, hi], unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal(double mean, double stddev);
  /// Exponential with the given rate (events per unit); rate must be > 0.
  double exponential(double rate);
  bool bernoulli(double p);

 private:
  std::uint64_t master_seed_;
  std::string label_;
  std::mt19937_64 engine_;
};

/// Seed for a (master seed, label) pair. Exposed for tests.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label);

}  // namespace bsn
