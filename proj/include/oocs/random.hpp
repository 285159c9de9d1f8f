#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC'11). Output is a pure function of
// (key, counter), so streams are identical across platforms and thread
// counts. Normals use the Box-Muller transform on pairs of 53-bit uniforms.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace oocs {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

  /// Raw 10-round bijection of a full counter under an explicit key.
  static Block bijection(Block ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

  Block block(std::uint64_t counter) const {
    return bijection({static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                     key_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  static double to_unit(std::uint32_t a, std::uint32_t b) {
    return ((a >> 5) * 67108864.0 + (b >> 6)) * (1.0 / 9007199254740992.0);
  }

  /// Two independent standard normals from block `counter`.
  std::array<double, 2> normal_pair(std::uint64_t counter) const {
    const Block r = block(counter);
    const double u1 = 1.0 - to_unit(r[0], r[1]);  // (0, 1]
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  /// The i-th standard normal of this stream.
  double normal_at(std::uint64_t i) const { return normal_pair(i / 2)[i % 2]; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
};

/// Sequential draws over a Philox stream.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) : gen_(seed, stream) {}

  double uniform() {
    if (cached_ == 0) {
      buffer_ = gen_.block(counter_++);
      cached_ = 2;
    }
    const int slot = 2 - cached_--;
    return Philox4x32::to_unit(buffer_[2 * slot], buffer_[2 * slot + 1]);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  Philox4x32 gen_;
  std::uint64_t counter_ = 0;
  Philox4x32::Block buffer_{};
  int cached_ = 0;
};

}  // namespace oocs
