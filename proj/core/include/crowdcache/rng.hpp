#pragma once

#include <cstdint>

namespace crowdcache {

/// Seedable pseudo-random generator used for *all* randomness in the project.
///
/// The generator is xoshiro256** (Blackman/Vigna), seeded through splitmix64.
/// Both algorithms are tiny, well studied, and trivially portable, so runs
/// reproduce bit-for-bit across platforms and across reimplementations in
/// other languages. Distributions are hand-rolled here for the same reason:
/// standard-library distributions are not specified bit-exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  /// Next raw 64-bit value.
  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  /// Uniform integer in [0, n), n >= 1. Unbiased via rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Deterministic child generator for stream `id`; used to give replications
  /// and components independent, reproducible streams.
  Rng derive(std::uint64_t id) const {
    std::uint64_t x = state_[0] ^ rotl(state_[3], 13);
    // Fold the stream id through splitmix so nearby ids decorrelate.
    std::uint64_t s = x + 0x9e3779b97f4a7c15ULL * (id + 1);
    return Rng(splitmix64(s));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t state_[4];
};

}  // namespace crowdcache
