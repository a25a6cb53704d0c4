#pragma once

#include <cstdint>

namespace liner {

// SplitMix64 (Steele, Lea & Flood). Each simulated path owns one stream
// seeded from base_seed + run index; split() derives an independent child.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits; platform independent.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  SplitMix64 split() { return SplitMix64((*this)()); }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

 private:
  std::uint64_t state_;
};

}  // namespace liner
