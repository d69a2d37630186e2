/**
 * @file rng.hpp
 * @brief Counter-based random numbers (Philox4x32-10).
 *
 * Every draw is a pure function of (seed, stream, substream, block), so any
 * path or sample can be regenerated independently of evaluation order or
 * thread count.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace kolmo {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Ten-round Philox 4x32 bijection (Salmon et al., SC'11).
[[nodiscard]] inline Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed for a named purpose (path noise, sample placement, ...) and index.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose,
                                                  std::uint64_t index = 0) {
  return mix64(mix64(seed ^ mix64(purpose)) + index);
}

/// Sequential draws from the Philox stream keyed by @p seed at counter
/// (stream, substream, block++).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        substream_(substream) {}

  /// Uniform in (0, 1), 53-bit resolution, never 0 or 1.
  [[nodiscard]] double uniform() {
    if (cursor_ == 2) {
      refill();
    }
    const std::uint64_t bits = buffer_[cursor_++] >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  [[nodiscard]] double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by Box-Muller; pairs are cached.
  [[nodiscard]] double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  void refill() {
    const Philox4x32Counter out = philox4x32(
        {static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32), substream_,
         block_++},
        key_);
    buffer_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    buffer_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    cursor_ = 0;
  }

  Philox4x32Key key_;
  std::uint64_t stream_;
  std::uint32_t substream_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int cursor_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Purpose tags for derive_seed.
namespace rng_purpose {
inline constexpr std::uint64_t kPathNoise = 1;
inline constexpr std::uint64_t kHolderSamples = 2;
inline constexpr std::uint64_t kQuadratureNode = 3;
inline constexpr std::uint64_t kSupSamples = 4;
inline constexpr std::uint64_t kCheck = 5;
}  // namespace rng_purpose

}  // namespace kolmo
