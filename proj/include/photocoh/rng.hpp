#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "photocoh/constants.hpp"

namespace photocoh {

/// Philox4x32-10 block function (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Fixed purposes of the per-photon substreams. Each purpose owns its own
/// counter space, so skipping draws in one never shifts another.
enum class Substream : std::uint32_t {
  kPacket = 0,
  kEnergy = 1,
  kPosition = 2,
  kEfficiency = 3,
  kFilter = 4,
  kTest = 15,
};

/// Deterministic random stream keyed by (seed, photon index, substream).
/// Counter layout: {index lo, index hi, substream, block}.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t index, Substream purpose)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_lo_(static_cast<std::uint32_t>(index)),
        index_hi_(static_cast<std::uint32_t>(index >> 32)),
        purpose_(static_cast<std::uint32_t>(purpose)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      buffer_ = philox4x32({index_lo_, index_hi_, purpose_, block_++}, key_);
      pos_ = 0;
    }
    return buffer_[pos_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t a = next_u32() >> 5;
    const std::uint64_t b = next_u32() >> 6;
    return static_cast<double>(a * 67108864u + b) * 0x1.0p-53;
  }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    const std::uint64_t a = next_u32() >> 5;
    const std::uint64_t b = next_u32() >> 6;
    return (static_cast<double>(a * 67108864u + b) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t index_lo_;
  std::uint32_t index_hi_;
  std::uint32_t purpose_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int pos_ = 4;
};

}  // namespace photocoh
