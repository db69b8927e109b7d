#pragma once

// Counter-based, splittable random stream.
//
//   mix(x)          = SplitMix64 finalizer (Stafford "Mix13" constants)
//   key(seed, i)    = mix(seed ^ mix(i + 0x9E3779B97F4A7C15))
//   output j (>= 1) = mix(key + j * 0x9E3779B97F4A7C15)
//
// Each output is a pure function of (key, j), so streams can be split by
// index without coordination and reproduce bit-for-bit on any platform.
// Bounded integers use Lemire's multiply-and-reject method, never the
// implementation-defined std:: distributions.

#include <cstdint>
#include <limits>

namespace regadj {

__extension__ typedef unsigned __int128 uint128_t;

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  /// Independent stream number `index` derived from a master seed.
  static constexpr CounterRng stream(std::uint64_t seed, std::uint64_t index) noexcept {
    return CounterRng(mix64(seed ^ mix64(index + kGamma)));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  /// Uniform integer in [0, range). `range` must be positive.
  constexpr std::uint64_t bounded(std::uint64_t range) noexcept {
    uint128_t m = static_cast<uint128_t>((*this)()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        m = static_cast<uint128_t>((*this)()) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace regadj
