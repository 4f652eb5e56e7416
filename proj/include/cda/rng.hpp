// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace cda {

// Counter-based 64-bit generator (splitmix64 update). Every derived draw is
// built from integer ops and IEEE +,-,*,/ only, so streams are bit-identical
// across platforms and languages.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo,hi).
  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0,n). Modulo bias is irrelevant at 64 bits.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  // Approximate standard normal via the 12-uniform Irwin-Hall sum. Chosen
  // over Box-Muller so no libm call enters the generated-byte stream.
  double next_gaussian() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += next_double();
    return s - 6.0;
  }

 private:
  uint64_t state_;
};

// splitmix64 finalizer, usable as a standalone hash.
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Per-scene seed derivation: hash of (dataset_seed, index).
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
  return mix64(seed + 0x9e3779b97f4a7c15ull * (index + 1));
}

}  // namespace cda
