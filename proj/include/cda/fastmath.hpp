// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace cda {

// Polynomial sine, |err| < 2e-9 over the range scenegen uses. IEEE basic ops
// only, so generated image bytes do not depend on the platform's libm.
double portable_sin(double x);

// exp() via 2^k * exp(r) splitting, relative error < 1e-12. Inlines cleanly
// into softmax loops (no libm call) and is bit-deterministic everywhere.
inline double fast_exp(double x) {
  constexpr double kLog2e = 1.4426950408889634074;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  if (x > 709.0) return std::numeric_limits<double>::infinity();
  if (x < -745.0) return 0.0;

  const double kd = std::floor(x * kLog2e + 0.5);
  const int64_t k = static_cast<int64_t>(kd);
  const double r = (x - kd * kLn2Hi) - kd * kLn2Lo;  // |r| <= 0.3466

  double p = 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;

  const int64_t biased = k + 1023;
  if (biased <= 0) return 0.0;
  if (biased >= 2047) return std::numeric_limits<double>::infinity();
  const double two_k = std::bit_cast<double>(static_cast<uint64_t>(biased) << 52);
  return p * two_k;
}

// Branch-free variant for softmax inputs (x <= 0 after max subtraction):
// clamps to -700 so adding k into the exponent bits cannot underflow.
inline double fast_exp_clamped(double x) {
  constexpr double kLog2e = 1.4426950408889634074;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  x = x < -700.0 ? -700.0 : (x > 700.0 ? 700.0 : x);
  const double kd = std::floor(x * kLog2e + 0.5);
  const double r = (x - kd * kLn2Hi) - kd * kLn2Lo;
  double p = 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  // p is in [0.7, 1.42]; folding k into its exponent bits stays normal.
  return std::bit_cast<double>(std::bit_cast<int64_t>(p) +
                               (static_cast<int64_t>(kd) << 52));
}

// log(x) for normal positive doubles, relative error < 1e-12; vectorizes.
inline double fast_log(double x) {
  const uint64_t bits = std::bit_cast<uint64_t>(x);
  int64_t e = static_cast<int64_t>((bits >> 52) & 0x7ff) - 1023;
  double m = std::bit_cast<double>((bits & 0xfffffffffffffull) | 0x3ff0000000000000ull);
  // Normalize m into [sqrt(1/2), sqrt(2)) so |t| stays small.
  const bool big = m > 1.4142135623730951;
  m = big ? 0.5 * m : m;
  e = big ? e + 1 : e;
  const double t = (m - 1.0) / (m + 1.0);
  const double t2 = t * t;
  double p = 1.0 / 13.0;
  p = p * t2 + 1.0 / 11.0;
  p = p * t2 + 1.0 / 9.0;
  p = p * t2 + 1.0 / 7.0;
  p = p * t2 + 1.0 / 5.0;
  p = p * t2 + 1.0 / 3.0;
  p = p * t2 + 1.0;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  const double ed = static_cast<double>(e);
  return (ed * kLn2Hi + 2.0 * t * p) + ed * kLn2Lo;
}

// r^k for the sharpening exponent: repeated squaring when k is a small
// integer (the default K=6), std::pow otherwise.
inline double pow_sharpen(double r, double k) {
  const double kr = std::floor(k + 0.5);
  if (kr == k && k >= 1.0 && k <= 64.0) {
    int n = static_cast<int>(kr);
    double acc = 1.0, base = r;
    while (n > 0) {
      if (n & 1) acc *= base;
      base *= base;
      n >>= 1;
    }
    return acc;
  }
  return std::pow(r, k);
}

}  // namespace cda
