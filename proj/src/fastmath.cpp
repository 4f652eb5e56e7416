// SPDX-License-Identifier: Apache-2.0
#include "cda/fastmath.hpp"

#include <cmath>

namespace cda {

double portable_sin(double x) {
  // Reduce to r in [-pi, pi]. floor() is exact for doubles, and the two-part
  // pi constant keeps the reduction error below 1e-13 for |x| < 1e6, far
  // more than the texture synthesis needs.
  constexpr double kTwoPiHi = 6.283185307179586;
  constexpr double kTwoPiLo = 2.447921e-16;
  double k = std::floor(x / kTwoPiHi + 0.5);
  double r = (x - k * kTwoPiHi) - k * kTwoPiLo;

  constexpr double kPi = 3.141592653589793;
  constexpr double kHalfPi = 1.5707963267948966;
  if (r > kHalfPi) r = kPi - r;
  if (r < -kHalfPi) r = -kPi - r;

  // Minimax odd polynomial on [-pi/2, pi/2].
  const double r2 = r * r;
  double p = 1.58962301576546568060e-10;
  p = p * r2 - 2.50507477628578072866e-8;
  p = p * r2 + 2.75573136213857245213e-6;
  p = p * r2 - 1.98412698295895385996e-4;
  p = p * r2 + 8.33333333332211858878e-3;
  p = p * r2 - 1.66666666666666307295e-1;
  return r + r * r2 * p;
}

}  // namespace cda
