#pragma once

#include <cstdint>
#include <random>

namespace cflux {

/// Deterministic pseudorandom source. Wraps std::mt19937_64 (whose output
/// sequence is fixed by the standard) and converts raw draws to doubles and
/// bounded integers itself, so results are identical across platforms and
/// standard-library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1), 53 bits of precision.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t n) {
    if (n <= 1) {
      return 0;
    }
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = next_u64();
    while (draw >= limit) {
      draw = next_u64();
    }
    return static_cast<std::size_t>(draw % bound);
  }

private:
  std::mt19937_64 gen_;
};

} // namespace cflux
