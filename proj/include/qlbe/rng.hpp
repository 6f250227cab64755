// qlbe/rng.hpp — counter-seeded xoshiro256++ streams for reproducible sampling
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qlbe {

// Deterministic stream family: Rng(seed, k) always yields the same sequence,
// independent of how many other streams exist or in which order they run.
// This is what makes ensemble results reproducible under any scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    // SplitMix64 expansion of (seed, stream) into the xoshiro256++ state.
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    bool any_nonzero = false;
    for (auto& word : state_) {
      x += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      word = z ^ (z >> 31);
      any_nonzero |= word != 0;
    }
    if (!any_nonzero) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Standard normal via Box–Muller (cosine branch only, to keep the state a
  // pure function of the draw count).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0,1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t state_[4];
};

}  // namespace qlbe
