#pragma once

#include <cstdint>

namespace aoilab {

/// SplitMix64: 64-bit state advanced by the
/// golden-ratio increment, output through a two-round xor-multiply mix.
/// The algorithm is fixed so that seeded runs are bit-identical on every
/// platform; do not swap it for a std:: engine.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Independent stream seed for sweep cell `index`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  SplitMix64 mix(base ^ (index * 0xD1B54A32D192ED03ULL));
  mix.next();
  return mix.next();
}

}  // namespace aoilab
