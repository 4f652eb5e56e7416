// SPDX-License-Identifier: Apache-2.0
//
// Straight-line serial versions of the hot kernels. They stay deliberately
// naive (scatter-style backward, no chunking, libm exp) and act as the
// oracle for tests and the baseline in cda_bench.
#include <algorithm>
#include <cmath>

#include "cda/kernels.hpp"

namespace cda::ref {
namespace {
inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }
}  // namespace

void conv3x3_forward(const double* in, int w, int h, int cin, const double* wgt,
                     const double* bias, int cout, double* out) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int co = 0; co < cout; ++co) {
        double acc = bias[co];
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int iy = clampi(y + dy, 0, h - 1);
            const int ix = clampi(x + dx, 0, w - 1);
            for (int ci = 0; ci < cin; ++ci)
              acc += in[(static_cast<size_t>(iy) * w + ix) * cin + ci] *
                     wgt[(((static_cast<size_t>(dy + 1) * 3 + (dx + 1)) * cin) + ci) * cout + co];
          }
        out[(static_cast<size_t>(y) * w + x) * cout + co] = acc;
      }
}

void conv3x3_backward_data(const double* dout, int w, int h, int cout, const double* wgt,
                           int cin, double* din) {
  std::fill(din, din + static_cast<size_t>(w) * h * cin, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int iy = clampi(y + dy, 0, h - 1);
          const int ix = clampi(x + dx, 0, w - 1);
          for (int ci = 0; ci < cin; ++ci) {
            double s = 0.0;
            for (int co = 0; co < cout; ++co)
              s += dout[(static_cast<size_t>(y) * w + x) * cout + co] *
                   wgt[(((static_cast<size_t>(dy + 1) * 3 + (dx + 1)) * cin) + ci) * cout + co];
            din[(static_cast<size_t>(iy) * w + ix) * cin + ci] += s;
          }
        }
}

void conv3x3_backward_weights(const double* in, const double* dout, int w, int h, int cin,
                              int cout, double* dwgt, double* dbias) {
  std::fill(dwgt, dwgt + 9 * static_cast<size_t>(cin) * cout, 0.0);
  std::fill(dbias, dbias + cout, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int iy = clampi(y + dy, 0, h - 1);
          const int ix = clampi(x + dx, 0, w - 1);
          for (int ci = 0; ci < cin; ++ci)
            for (int co = 0; co < cout; ++co)
              dwgt[(((static_cast<size_t>(dy + 1) * 3 + (dx + 1)) * cin) + ci) * cout + co] +=
                  in[(static_cast<size_t>(iy) * w + ix) * cin + ci] *
                  dout[(static_cast<size_t>(y) * w + x) * cout + co];
        }
      for (int co = 0; co < cout; ++co)
        dbias[co] += dout[(static_cast<size_t>(y) * w + x) * cout + co];
    }
}

void conv1x1_forward(const double* in, int npx, int cin, const double* wgt, const double* bias,
                     int cout, double* out) {
  for (int px = 0; px < npx; ++px)
    for (int co = 0; co < cout; ++co) {
      double acc = bias[co];
      for (int ci = 0; ci < cin; ++ci)
        acc += in[static_cast<size_t>(px) * cin + ci] * wgt[static_cast<size_t>(ci) * cout + co];
      out[static_cast<size_t>(px) * cout + co] = acc;
    }
}

void softmax_pixels(const double* logits, size_t npx, int ch, double* out) {
  for (size_t px = 0; px < npx; ++px) {
    const double* l = logits + px * ch;
    double* o = out + px * ch;
    double m = *std::max_element(l, l + ch);
    double s = 0.0;
    for (int c = 0; c < ch; ++c) {
      o[c] = std::exp(l[c] - m);
      s += o[c];
    }
    for (int c = 0; c < ch; ++c) o[c] /= s;
  }
}

}  // namespace cda::ref
