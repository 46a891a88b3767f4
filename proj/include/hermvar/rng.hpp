#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace hermvar {

/// Identifies one reproducible random stream: every sample drawn for a
/// replication is a pure function of (master_seed, stream_index).
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

/// Standard normal generator for one stream.
///
/// mt19937_64 seeded through seed_seq over the 32-bit halves of the seed pair;
/// both are specified bit-exactly by the standard. Uniforms take the top 53 bits,
/// normals come from the Box-Muller transform (cosine branch first).
class GaussianStream {
 public:
  explicit GaussianStream(SeedSpec seed) : engine_(make_engine(seed)) {}

  double uniform_open() {
    // (k + 0.5) / 2^53 lies strictly inside (0, 1)
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  template <typename It>
  void fill_normal(It first, It last) {
    for (; first != last; ++first) *first = normal();
  }

 private:
  static std::mt19937_64 make_engine(SeedSpec s) {
    std::seed_seq seq{static_cast<std::uint32_t>(s.master_seed),
                      static_cast<std::uint32_t>(s.master_seed >> 32),
                      static_cast<std::uint32_t>(s.stream_index),
                      static_cast<std::uint32_t>(s.stream_index >> 32)};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hermvar
