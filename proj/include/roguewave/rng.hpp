#pragma once

// Per-sample random streams keyed by (master_seed, stream index, purpose).
// Each draw depends only on its key, so Monte Carlo loops give identical
// results in any order and on any number of workers. Variate generation is
// written out explicitly (no std:: distributions) so values are identical
// across standard library implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace roguewave {

enum class StreamPurpose : std::uint32_t {
  sea = 1,
  phases = 2,
  tilted = 3,
  probe = 4,
  test = 5,
};

class Stream {
 public:
  Stream(std::uint64_t master_seed, std::uint64_t index, StreamPurpose purpose = StreamPurpose::sea) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(purpose)};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  /// Uniform phase on [0, 2 pi).
  double phase() { return 2.0 * std::numbers::pi * uniform(); }

  /// Rayleigh with scale 1/sqrt(2): P(R > x) = exp(-x^2).
  double rayleigh() { return std::sqrt(-std::log(uniform_open0())); }

  /// Standard normal by Box-Muller (the second variate is discarded).
  double gaussian() {
    const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace roguewave
