#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace cpr {

/// Standard normal sampler: Box-Muller over std::mt19937_64. The standard
/// library's normal_distribution is implementation-defined, so it is not used;
/// this sampler is bit-reproducible for a given seed on any conforming
/// toolchain.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double normal();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound).
  std::size_t index(std::size_t bound);
  std::uint64_t bits() { return engine_(); }

  void fill_normal(std::vector<double>& out) {
    for (double& v : out) v = normal();
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Per-task seed derived from a base seed and a task index, independent of
/// scheduling order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// k distinct indices from [0, n), returned sorted.
std::vector<std::size_t> random_subset(NormalSampler& rng, std::size_t n, std::size_t k);

}  // namespace cpr
