#pragma once

#include <cstdint>

namespace percweb {

// SplitMix64 (Steele, Lea, Flood 2014). Counter mode: the n-th output is
// mix64(key + n * kGamma), so the stream is a pure function of (key, n) and
// bit-identical on every platform.
inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t operator()() noexcept {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

 private:
  std::uint64_t state_;
};

struct SeedSchedule {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

// derive_seed(m, i) = mix64(mix64(m) + (i + 1) * kGamma).
// For fixed m the map i -> seed is a bijection (odd multiplier, bijective
// mixer); for fixed i the map m -> seed is a bijection as well.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed,
                                    std::uint64_t stream_index) noexcept {
  return mix64(mix64(master_seed) + (stream_index + 1) * kGamma);
}

constexpr std::uint64_t derive_seed(const SeedSchedule& schedule) noexcept {
  return derive_seed(schedule.master_seed, schedule.stream_index);
}

}  // namespace percweb
