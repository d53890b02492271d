// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace specsim {

// splitmix64 finalizer. Used to expand seeds and for keyed one-shot draws.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double unit_from_bits(std::uint64_t bits) {
  // 53 high bits -> [0,1). Identical on every IEEE-754 platform.
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// xoshiro256++ by Blackman & Vigna (public domain). All stochastic draws in a
// simulation flow through one instance so runs are reproducible bit-for-bit.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x = mix64(x);
      w = x;
    }
    has_spare_ = false;
    spare_ = 0.0;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1).
  double next_unit() { return unit_from_bits(next_u64()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Box-Muller with cached spare; fully deterministic draw order.
  double gaussian(double mean, double sd) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + sd * spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + sd * (r * std::cos(theta));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4] = {};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Order-independent uniform draw keyed by (seed, k1, k2). Verification
// outcomes use this so that results do not depend on the order in which
// batches happen to be verified.
inline double keyed_unit(std::uint64_t seed, std::uint64_t k1,
                         std::uint64_t k2) {
  return unit_from_bits(mix64(seed ^ mix64(k1 ^ mix64(k2))));
}

}  // namespace specsim
