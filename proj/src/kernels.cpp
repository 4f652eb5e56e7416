// SPDX-License-Identifier: Apache-2.0
#include "cda/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "cda/common.hpp"
#include "cda/fastmath.hpp"

namespace cda::kern {
namespace {

constexpr int kMaxCh = 64;

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Rows y with clamp(y+dy, 0, h-1) == yi; at most two. Same helper serves
// columns. This is the exact adjoint of replicate padding.
inline int inverse_lines(int yi, int dy, int h, int ys[2]) {
  int n = 0;
  const int base = yi - dy;
  if (base >= 0 && base < h) ys[n++] = base;
  if (yi == 0 && dy < 0 && base != 0) ys[n++] = 0;
  if (yi == h - 1 && dy > 0 && base != h - 1) ys[n++] = h - 1;
  return n;
}

// COUT known at compile time keeps the accumulators in registers; four
// independent chains hide the FMA latency. That is what makes the
// single-core experiment budget hold.
template <int CIN, int COUT>
void conv3x3_forward_t(const double* in, int w, int h, const double* wgt,
                       const double* bias, double* out) {
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const double* rows[3] = {in + static_cast<size_t>(clampi(y - 1, 0, h - 1)) * w * CIN,
                             in + static_cast<size_t>(y) * w * CIN,
                             in + static_cast<size_t>(clampi(y + 1, 0, h - 1)) * w * CIN};
    double* orow = out + static_cast<size_t>(y) * w * COUT;
    for (int x = 0; x < w; ++x) {
      double acc0[COUT], acc1[COUT], acc2[COUT], acc3[COUT];
#pragma omp simd
      for (int co = 0; co < COUT; ++co) {
        acc0[co] = bias[co];
        acc1[co] = 0.0;
        acc2[co] = 0.0;
        acc3[co] = 0.0;
      }
      if (x > 0 && x < w - 1) {
        for (int dy = 0; dy < 3; ++dy) {
          const double* p = rows[dy] + static_cast<size_t>(x - 1) * CIN;
          const double* wp = wgt + static_cast<size_t>(dy) * 3 * CIN * COUT;
          constexpr int kTaps = 3 * CIN;
          int k = 0;
          for (; k + 4 <= kTaps; k += 4) {
            const double v0 = p[k], v1 = p[k + 1], v2 = p[k + 2], v3 = p[k + 3];
            const double* w0 = wp + static_cast<size_t>(k) * COUT;
            const double* w1 = w0 + COUT;
            const double* w2 = w1 + COUT;
            const double* w3 = w2 + COUT;
#pragma omp simd
            for (int co = 0; co < COUT; ++co) {
              acc0[co] += v0 * w0[co];
              acc1[co] += v1 * w1[co];
              acc2[co] += v2 * w2[co];
              acc3[co] += v3 * w3[co];
            }
          }
          for (; k < kTaps; ++k) {
            const double v = p[k];
            const double* wk = wp + static_cast<size_t>(k) * COUT;
#pragma omp simd
            for (int co = 0; co < COUT; ++co) acc0[co] += v * wk[co];
          }
        }
      } else {
        const int xs[3] = {clampi(x - 1, 0, w - 1), x, clampi(x + 1, 0, w - 1)};
        const double* wp = wgt;
        for (int dy = 0; dy < 3; ++dy)
          for (int dx = 0; dx < 3; ++dx) {
            const double* p = rows[dy] + static_cast<size_t>(xs[dx]) * CIN;
            for (int ci = 0; ci < CIN; ++ci) {
              const double v = p[ci];
#pragma omp simd
              for (int co = 0; co < COUT; ++co) acc0[co] += v * wp[co];
              wp += COUT;
            }
          }
      }
      double* o = orow + static_cast<size_t>(x) * COUT;
#pragma omp simd
      for (int co = 0; co < COUT; ++co) o[co] = acc0[co] + acc1[co] + acc2[co] + acc3[co];
    }
  }
}

template <int CIN, int COUT>
void conv3x3_backward_data_t(const double* dout, int w, int h, const double* wgt_t,
                             double* din) {
  // wgt_t layout: [dy][dx][COUT][CIN]
#pragma omp parallel for schedule(static)
  for (int yi = 0; yi < h; ++yi) {
    for (int xi = 0; xi < w; ++xi) {
      double acc0[CIN], acc1[CIN], acc2[CIN], acc3[CIN];
#pragma omp simd
      for (int ci = 0; ci < CIN; ++ci) {
        acc0[ci] = 0.0;
        acc1[ci] = 0.0;
        acc2[ci] = 0.0;
        acc3[ci] = 0.0;
      }
      const auto add_tap = [&](const double* dp, const double* wt) {
        int co = 0;
        for (; co + 4 <= COUT; co += 4) {
          const double v0 = dp[co], v1 = dp[co + 1], v2 = dp[co + 2], v3 = dp[co + 3];
          const double* w0 = wt + static_cast<size_t>(co) * CIN;
          const double* w1 = w0 + CIN;
          const double* w2 = w1 + CIN;
          const double* w3 = w2 + CIN;
#pragma omp simd
          for (int ci = 0; ci < CIN; ++ci) {
            acc0[ci] += v0 * w0[ci];
            acc1[ci] += v1 * w1[ci];
            acc2[ci] += v2 * w2[ci];
            acc3[ci] += v3 * w3[ci];
          }
        }
        for (; co < COUT; ++co) {
          const double v = dp[co];
          const double* wl = wt + static_cast<size_t>(co) * CIN;
#pragma omp simd
          for (int ci = 0; ci < CIN; ++ci) acc0[ci] += v * wl[ci];
        }
      };
      if (yi > 0 && yi < h - 1 && xi > 0 && xi < w - 1) {
        for (int dy = -1; dy <= 1; ++dy) {
          const double* drow = dout + static_cast<size_t>(yi - dy) * w * COUT;
          for (int dx = -1; dx <= 1; ++dx)
            add_tap(drow + static_cast<size_t>(xi - dx) * COUT,
                    wgt_t + (static_cast<size_t>(dy + 1) * 3 + (dx + 1)) * COUT * CIN);
        }
      } else {
        for (int dy = -1; dy <= 1; ++dy) {
          int ys[2];
          const int ny = inverse_lines(yi, dy, h, ys);
          for (int iy = 0; iy < ny; ++iy) {
            const double* drow = dout + static_cast<size_t>(ys[iy]) * w * COUT;
            for (int dx = -1; dx <= 1; ++dx) {
              int xs[2];
              const int nx = inverse_lines(xi, dx, w, xs);
              const double* wt =
                  wgt_t + (static_cast<size_t>(dy + 1) * 3 + (dx + 1)) * COUT * CIN;
              for (int ix = 0; ix < nx; ++ix)
                add_tap(drow + static_cast<size_t>(xs[ix]) * COUT, wt);
            }
          }
        }
      }
      double* o = din + (static_cast<size_t>(yi) * w + xi) * CIN;
#pragma omp simd
      for (int ci = 0; ci < CIN; ++ci) o[ci] = acc0[ci] + acc1[ci] + acc2[ci] + acc3[ci];
    }
  }
}

// One (dy,dx) tap per image sweep with the [CIN][COUT] tile in registers;
// the per-(ci) rows are independent accumulator chains.
template <int CIN, int COUT>
void conv3x3_backward_weights_t(const double* in, const double* dout, int w, int h,
                                double* dwgt, double* dbias) {
  const int nw = 9 * CIN * COUT;
  const int nchunks = std::min(16, h);
  std::vector<double> partial(static_cast<size_t>(nchunks) * (nw + COUT), 0.0);

#pragma omp parallel for schedule(static)
  for (int chunk = 0; chunk < nchunks; ++chunk) {
    const int y0 = static_cast<int>(static_cast<int64_t>(chunk) * h / nchunks);
    const int y1 = static_cast<int>(static_cast<int64_t>(chunk + 1) * h / nchunks);
    double* dw = partial.data() + static_cast<size_t>(chunk) * (nw + COUT);
    double* db = dw + nw;
    for (int dy = 0; dy < 3; ++dy)
      for (int dx = 0; dx < 3; ++dx) {
        double tile[CIN * COUT];
#pragma omp simd
        for (int i = 0; i < CIN * COUT; ++i) tile[i] = 0.0;
        for (int y = y0; y < y1; ++y) {
          const int iy = clampi(y + dy - 1, 0, h - 1);
          const double* irow = in + static_cast<size_t>(iy) * w * CIN;
          const double* drow = dout + static_cast<size_t>(y) * w * COUT;
          for (int x = 0; x < w; ++x) {
            const double* p = irow + static_cast<size_t>(clampi(x + dx - 1, 0, w - 1)) * CIN;
            const double* dp = drow + static_cast<size_t>(x) * COUT;
            for (int ci = 0; ci < CIN; ++ci) {
              const double v = p[ci];
              double* t = tile + static_cast<size_t>(ci) * COUT;
#pragma omp simd
              for (int co = 0; co < COUT; ++co) t[co] += v * dp[co];
            }
          }
        }
        double* dwt = dw + (static_cast<size_t>(dy) * 3 + dx) * CIN * COUT;
#pragma omp simd
        for (int i = 0; i < CIN * COUT; ++i) dwt[i] += tile[i];
      }
    for (int y = y0; y < y1; ++y) {
      const double* drow = dout + static_cast<size_t>(y) * w * COUT;
      for (int x = 0; x < w; ++x) {
        const double* dp = drow + static_cast<size_t>(x) * COUT;
#pragma omp simd
        for (int co = 0; co < COUT; ++co) db[co] += dp[co];
      }
    }
  }

  std::fill(dwgt, dwgt + nw, 0.0);
  std::fill(dbias, dbias + COUT, 0.0);
  for (int chunk = 0; chunk < nchunks; ++chunk) {
    const double* dw = partial.data() + static_cast<size_t>(chunk) * (nw + COUT);
    for (int i = 0; i < nw; ++i) dwgt[i] += dw[i];
    for (int co = 0; co < COUT; ++co) dbias[co] += dw[nw + co];
  }
}

template <int COUT>
void conv1x1_forward_t(const double* in, int npx, int cin, const double* wgt, const double* bias,
                       double* out) {
#pragma omp parallel for schedule(static)
  for (int px = 0; px < npx; ++px) {
    const double* p = in + static_cast<size_t>(px) * cin;
    double acc[COUT];
    for (int co = 0; co < COUT; ++co) acc[co] = bias[co];
    for (int ci = 0; ci < cin; ++ci) {
      const double v = p[ci];
      const double* wr = wgt + static_cast<size_t>(ci) * COUT;
      for (int co = 0; co < COUT; ++co) acc[co] += v * wr[co];
    }
    double* o = out + static_cast<size_t>(px) * COUT;
    for (int co = 0; co < COUT; ++co) o[co] = acc[co];
  }
}

template <int CIN, int COUT>
void conv1x1_backward_data_t(const double* dout, int npx, const double* wgt_t, double* din) {
  // wgt_t: [COUT][CIN]
#pragma omp parallel for schedule(static)
  for (int px = 0; px < npx; ++px) {
    const double* dp = dout + static_cast<size_t>(px) * COUT;
    double acc0[CIN], acc1[CIN];
#pragma omp simd
    for (int ci = 0; ci < CIN; ++ci) {
      acc0[ci] = 0.0;
      acc1[ci] = 0.0;
    }
    int co = 0;
    for (; co + 2 <= COUT; co += 2) {
      const double v0 = dp[co], v1 = dp[co + 1];
      const double* w0 = wgt_t + static_cast<size_t>(co) * CIN;
      const double* w1 = w0 + CIN;
#pragma omp simd
      for (int ci = 0; ci < CIN; ++ci) {
        acc0[ci] += v0 * w0[ci];
        acc1[ci] += v1 * w1[ci];
      }
    }
    for (; co < COUT; ++co) {
      const double v = dp[co];
      const double* wl = wgt_t + static_cast<size_t>(co) * CIN;
#pragma omp simd
      for (int ci = 0; ci < CIN; ++ci) acc0[ci] += v * wl[ci];
    }
    double* o = din + static_cast<size_t>(px) * CIN;
#pragma omp simd
    for (int ci = 0; ci < CIN; ++ci) o[ci] = acc0[ci] + acc1[ci];
  }
}

template <int CIN, int COUT>
void conv1x1_backward_weights_t(const double* in, const double* dout, int npx, double* dwgt,
                                double* dbias) {
  const int nw = CIN * COUT;
  const int nchunks = std::min(16, npx);
  std::vector<double> partial(static_cast<size_t>(nchunks) * (nw + COUT), 0.0);
#pragma omp parallel for schedule(static)
  for (int chunk = 0; chunk < nchunks; ++chunk) {
    const int p0 = static_cast<int>(static_cast<int64_t>(chunk) * npx / nchunks);
    const int p1 = static_cast<int>(static_cast<int64_t>(chunk + 1) * npx / nchunks);
    double tile[CIN * COUT];
    double bias_acc[COUT];
#pragma omp simd
    for (int i = 0; i < CIN * COUT; ++i) tile[i] = 0.0;
#pragma omp simd
    for (int co = 0; co < COUT; ++co) bias_acc[co] = 0.0;
    for (int px = p0; px < p1; ++px) {
      const double* p = in + static_cast<size_t>(px) * CIN;
      const double* dp = dout + static_cast<size_t>(px) * COUT;
      for (int ci = 0; ci < CIN; ++ci) {
        const double v = p[ci];
        double* t = tile + static_cast<size_t>(ci) * COUT;
#pragma omp simd
        for (int co = 0; co < COUT; ++co) t[co] += v * dp[co];
      }
#pragma omp simd
      for (int co = 0; co < COUT; ++co) bias_acc[co] += dp[co];
    }
    double* dw = partial.data() + static_cast<size_t>(chunk) * (nw + COUT);
    for (int i = 0; i < nw; ++i) dw[i] = tile[i];
    for (int co = 0; co < COUT; ++co) dw[nw + co] = bias_acc[co];
  }
  std::fill(dwgt, dwgt + nw, 0.0);
  std::fill(dbias, dbias + COUT, 0.0);
  for (int chunk = 0; chunk < nchunks; ++chunk) {
    const double* dw = partial.data() + static_cast<size_t>(chunk) * (nw + COUT);
    for (int i = 0; i < nw; ++i) dwgt[i] += dw[i];
    for (int co = 0; co < COUT; ++co) dbias[co] += dw[nw + co];
  }
}

// Runtime-channel fallbacks for the uncommon widths.
void conv3x3_forward_gen(const double* in, int w, int h, int cin, const double* wgt,
                         const double* bias, int cout, double* out) {
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const double* rows[3] = {in + static_cast<size_t>(clampi(y - 1, 0, h - 1)) * w * cin,
                             in + static_cast<size_t>(y) * w * cin,
                             in + static_cast<size_t>(clampi(y + 1, 0, h - 1)) * w * cin};
    double* orow = out + static_cast<size_t>(y) * w * cout;
    for (int x = 0; x < w; ++x) {
      const int xs[3] = {clampi(x - 1, 0, w - 1), x, clampi(x + 1, 0, w - 1)};
      double acc[kMaxCh];
      for (int co = 0; co < cout; ++co) acc[co] = bias[co];
      const double* wp = wgt;
      for (int dy = 0; dy < 3; ++dy)
        for (int dx = 0; dx < 3; ++dx) {
          const double* p = rows[dy] + static_cast<size_t>(xs[dx]) * cin;
          for (int ci = 0; ci < cin; ++ci) {
            const double v = p[ci];
            for (int co = 0; co < cout; ++co) acc[co] += v * wp[co];
            wp += cout;
          }
        }
      double* o = orow + static_cast<size_t>(x) * cout;
      for (int co = 0; co < cout; ++co) o[co] = acc[co];
    }
  }
}

void conv3x3_backward_data_gen(const double* dout, int w, int h, int cout, const double* wgt_t,
                               int cin, double* din) {
#pragma omp parallel for schedule(static)
  for (int yi = 0; yi < h; ++yi) {
    for (int xi = 0; xi < w; ++xi) {
      double acc[kMaxCh];
      for (int ci = 0; ci < cin; ++ci) acc[ci] = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        int ys[2];
        const int ny = inverse_lines(yi, dy, h, ys);
        for (int iy = 0; iy < ny; ++iy) {
          const double* drow = dout + static_cast<size_t>(ys[iy]) * w * cout;
          for (int dx = -1; dx <= 1; ++dx) {
            int xs[2];
            const int nx = inverse_lines(xi, dx, w, xs);
            const double* wt = wgt_t + (static_cast<size_t>(dy + 1) * 3 + (dx + 1)) * cout * cin;
            for (int ix = 0; ix < nx; ++ix) {
              const double* dp = drow + static_cast<size_t>(xs[ix]) * cout;
              for (int co = 0; co < cout; ++co) {
                const double v = dp[co];
                const double* wr = wt + static_cast<size_t>(co) * cin;
                for (int ci = 0; ci < cin; ++ci) acc[ci] += v * wr[ci];
              }
            }
          }
        }
      }
      double* o = din + (static_cast<size_t>(yi) * w + xi) * cin;
      for (int ci = 0; ci < cin; ++ci) o[ci] = acc[ci];
    }
  }
}

void conv3x3_backward_weights_gen(const double* in, const double* dout, int w, int h, int cin,
                                  int cout, double* dwgt, double* dbias) {
  const int nw = 9 * cin * cout;
  const int nchunks = std::min(16, h);
  std::vector<double> partial(static_cast<size_t>(nchunks) * (nw + cout), 0.0);
#pragma omp parallel for schedule(static)
  for (int chunk = 0; chunk < nchunks; ++chunk) {
    const int y0 = static_cast<int>(static_cast<int64_t>(chunk) * h / nchunks);
    const int y1 = static_cast<int>(static_cast<int64_t>(chunk + 1) * h / nchunks);
    double* dw = partial.data() + static_cast<size_t>(chunk) * (nw + cout);
    double* db = dw + nw;
    for (int y = y0; y < y1; ++y) {
      const double* rows[3] = {in + static_cast<size_t>(clampi(y - 1, 0, h - 1)) * w * cin,
                               in + static_cast<size_t>(y) * w * cin,
                               in + static_cast<size_t>(clampi(y + 1, 0, h - 1)) * w * cin};
      const double* drow = dout + static_cast<size_t>(y) * w * cout;
      for (int x = 0; x < w; ++x) {
        const int xs[3] = {clampi(x - 1, 0, w - 1), x, clampi(x + 1, 0, w - 1)};
        const double* dp = drow + static_cast<size_t>(x) * cout;
        double* wp = dw;
        for (int dy = 0; dy < 3; ++dy)
          for (int dx = 0; dx < 3; ++dx) {
            const double* p = rows[dy] + static_cast<size_t>(xs[dx]) * cin;
            for (int ci = 0; ci < cin; ++ci) {
              const double v = p[ci];
              for (int co = 0; co < cout; ++co) wp[co] += v * dp[co];
              wp += cout;
            }
          }
        for (int co = 0; co < cout; ++co) db[co] += dp[co];
      }
    }
  }
  std::fill(dwgt, dwgt + nw, 0.0);
  std::fill(dbias, dbias + cout, 0.0);
  for (int chunk = 0; chunk < nchunks; ++chunk) {
    const double* dw = partial.data() + static_cast<size_t>(chunk) * (nw + cout);
    for (int i = 0; i < nw; ++i) dwgt[i] += dw[i];
    for (int co = 0; co < cout; ++co) dbias[co] += dw[nw + co];
  }
}

void conv1x1_forward_gen(const double* in, int npx, int cin, const double* wgt,
                         const double* bias, int cout, double* out) {
#pragma omp parallel for schedule(static)
  for (int px = 0; px < npx; ++px) {
    const double* p = in + static_cast<size_t>(px) * cin;
    double acc[kMaxCh];
    for (int co = 0; co < cout; ++co) acc[co] = bias[co];
    for (int ci = 0; ci < cin; ++ci) {
      const double v = p[ci];
      const double* wr = wgt + static_cast<size_t>(ci) * cout;
      for (int co = 0; co < cout; ++co) acc[co] += v * wr[co];
    }
    double* o = out + static_cast<size_t>(px) * cout;
    for (int co = 0; co < cout; ++co) o[co] = acc[co];
  }
}

void conv1x1_backward_data_gen(const double* dout, int npx, int cout, const double* wgt_t,
                               int cin, double* din) {
#pragma omp parallel for schedule(static)
  for (int px = 0; px < npx; ++px) {
    const double* dp = dout + static_cast<size_t>(px) * cout;
    double acc[kMaxCh];
    for (int ci = 0; ci < cin; ++ci) acc[ci] = 0.0;
    for (int co = 0; co < cout; ++co) {
      const double v = dp[co];
      const double* wr = wgt_t + static_cast<size_t>(co) * cin;
      for (int ci = 0; ci < cin; ++ci) acc[ci] += v * wr[ci];
    }
    double* o = din + static_cast<size_t>(px) * cin;
    for (int ci = 0; ci < cin; ++ci) o[ci] = acc[ci];
  }
}

void conv1x1_backward_weights_gen(const double* in, const double* dout, int npx, int cin,
                                  int cout, double* dwgt, double* dbias) {
  const int nw = cin * cout;
  const int nchunks = std::min(16, npx);
  std::vector<double> partial(static_cast<size_t>(nchunks) * (nw + cout), 0.0);
#pragma omp parallel for schedule(static)
  for (int chunk = 0; chunk < nchunks; ++chunk) {
    const int p0 = static_cast<int>(static_cast<int64_t>(chunk) * npx / nchunks);
    const int p1 = static_cast<int>(static_cast<int64_t>(chunk + 1) * npx / nchunks);
    double* dw = partial.data() + static_cast<size_t>(chunk) * (nw + cout);
    double* db = dw + nw;
    for (int px = p0; px < p1; ++px) {
      const double* p = in + static_cast<size_t>(px) * cin;
      const double* dp = dout + static_cast<size_t>(px) * cout;
      for (int ci = 0; ci < cin; ++ci) {
        const double v = p[ci];
        double* wr = dw + static_cast<size_t>(ci) * cout;
        for (int co = 0; co < cout; ++co) wr[co] += v * dp[co];
      }
      for (int co = 0; co < cout; ++co) db[co] += dp[co];
    }
  }
  std::fill(dwgt, dwgt + nw, 0.0);
  std::fill(dbias, dbias + cout, 0.0);
  for (int chunk = 0; chunk < nchunks; ++chunk) {
    const double* dw = partial.data() + static_cast<size_t>(chunk) * (nw + cout);
    for (int i = 0; i < nw; ++i) dwgt[i] += dw[i];
    for (int co = 0; co < cout; ++co) dbias[co] += dw[nw + co];
  }
}

std::vector<double> transpose_taps(const double* wgt, int taps, int cin, int cout) {
  std::vector<double> wt(static_cast<size_t>(taps) * cin * cout);
  for (int t = 0; t < taps; ++t)
    for (int ci = 0; ci < cin; ++ci)
      for (int co = 0; co < cout; ++co)
        wt[(static_cast<size_t>(t) * cout + co) * cin + ci] =
            wgt[(static_cast<size_t>(t) * cin + ci) * cout + co];
  return wt;
}

}  // namespace

void conv3x3_forward(const double* in, int w, int h, int cin, const double* wgt,
                     const double* bias, int cout, double* out) {
  require(cout <= kMaxCh && cin <= kMaxCh, "conv3x3_forward: channel count too large");
  if (cin == 3 && cout == 4) return conv3x3_forward_t<3, 4>(in, w, h, wgt, bias, out);
  if (cin == 3 && cout == 8) return conv3x3_forward_t<3, 8>(in, w, h, wgt, bias, out);
  if (cin == 3 && cout == 16) return conv3x3_forward_t<3, 16>(in, w, h, wgt, bias, out);
  if (cin == 4 && cout == 4) return conv3x3_forward_t<4, 4>(in, w, h, wgt, bias, out);
  if (cin == 8 && cout == 8) return conv3x3_forward_t<8, 8>(in, w, h, wgt, bias, out);
  if (cin == 16 && cout == 16) return conv3x3_forward_t<16, 16>(in, w, h, wgt, bias, out);
  conv3x3_forward_gen(in, w, h, cin, wgt, bias, cout, out);
}

void conv3x3_backward_data(const double* dout, int w, int h, int cout, const double* wgt,
                           int cin, double* din) {
  require(cout <= kMaxCh && cin <= kMaxCh, "conv3x3_backward_data: channel count too large");
  const std::vector<double> wt = transpose_taps(wgt, 9, cin, cout);
  if (cin == 3 && cout == 4) return conv3x3_backward_data_t<3, 4>(dout, w, h, wt.data(), din);
  if (cin == 3 && cout == 8) return conv3x3_backward_data_t<3, 8>(dout, w, h, wt.data(), din);
  if (cin == 3 && cout == 16) return conv3x3_backward_data_t<3, 16>(dout, w, h, wt.data(), din);
  if (cin == 4 && cout == 4) return conv3x3_backward_data_t<4, 4>(dout, w, h, wt.data(), din);
  if (cin == 8 && cout == 8) return conv3x3_backward_data_t<8, 8>(dout, w, h, wt.data(), din);
  if (cin == 16 && cout == 16) return conv3x3_backward_data_t<16, 16>(dout, w, h, wt.data(), din);
  conv3x3_backward_data_gen(dout, w, h, cout, wt.data(), cin, din);
}

void conv3x3_backward_weights(const double* in, const double* dout, int w, int h, int cin,
                              int cout, double* dwgt, double* dbias) {
  require(cout <= kMaxCh && cin <= kMaxCh, "conv3x3_backward_weights: channel count too large");
  if (cin == 3 && cout == 4) return conv3x3_backward_weights_t<3, 4>(in, dout, w, h, dwgt, dbias);
  if (cin == 3 && cout == 8) return conv3x3_backward_weights_t<3, 8>(in, dout, w, h, dwgt, dbias);
  if (cin == 3 && cout == 16)
    return conv3x3_backward_weights_t<3, 16>(in, dout, w, h, dwgt, dbias);
  if (cin == 4 && cout == 4) return conv3x3_backward_weights_t<4, 4>(in, dout, w, h, dwgt, dbias);
  if (cin == 8 && cout == 8) return conv3x3_backward_weights_t<8, 8>(in, dout, w, h, dwgt, dbias);
  if (cin == 16 && cout == 16)
    return conv3x3_backward_weights_t<16, 16>(in, dout, w, h, dwgt, dbias);
  conv3x3_backward_weights_gen(in, dout, w, h, cin, cout, dwgt, dbias);
}

void conv1x1_forward(const double* in, int npx, int cin, const double* wgt, const double* bias,
                     int cout, double* out) {
  require(cout <= kMaxCh && cin <= kMaxCh, "conv1x1_forward: channel count too large");
  switch (cout) {
    case 4: conv1x1_forward_t<4>(in, npx, cin, wgt, bias, out); break;
    case 8: conv1x1_forward_t<8>(in, npx, cin, wgt, bias, out); break;
    case 16: conv1x1_forward_t<16>(in, npx, cin, wgt, bias, out); break;
    default: conv1x1_forward_gen(in, npx, cin, wgt, bias, cout, out); break;
  }
}

void conv1x1_backward_data(const double* dout, int npx, int cout, const double* wgt, int cin,
                           double* din) {
  require(cout <= kMaxCh && cin <= kMaxCh, "conv1x1_backward_data: channel count too large");
  const std::vector<double> wt = transpose_taps(wgt, 1, cin, cout);
  if (cin == 4 && cout == 4) return conv1x1_backward_data_t<4, 4>(dout, npx, wt.data(), din);
  if (cin == 4 && cout == 8) return conv1x1_backward_data_t<4, 8>(dout, npx, wt.data(), din);
  if (cin == 8 && cout == 8) return conv1x1_backward_data_t<8, 8>(dout, npx, wt.data(), din);
  if (cin == 16 && cout == 16) return conv1x1_backward_data_t<16, 16>(dout, npx, wt.data(), din);
  conv1x1_backward_data_gen(dout, npx, cout, wt.data(), cin, din);
}

void conv1x1_backward_weights(const double* in, const double* dout, int npx, int cin, int cout,
                              double* dwgt, double* dbias) {
  require(cout <= kMaxCh && cin <= kMaxCh, "conv1x1_backward_weights: channel count too large");
  if (cin == 4 && cout == 4) return conv1x1_backward_weights_t<4, 4>(in, dout, npx, dwgt, dbias);
  if (cin == 4 && cout == 8) return conv1x1_backward_weights_t<4, 8>(in, dout, npx, dwgt, dbias);
  if (cin == 8 && cout == 8) return conv1x1_backward_weights_t<8, 8>(in, dout, npx, dwgt, dbias);
  if (cin == 16 && cout == 16)
    return conv1x1_backward_weights_t<16, 16>(in, dout, npx, dwgt, dbias);
  conv1x1_backward_weights_gen(in, dout, npx, cin, cout, dwgt, dbias);
}

void relu_forward(const double* z, size_t n, double* a) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_backward(const double* z, const double* da, size_t n, double* dz) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) dz[i] = z[i] > 0.0 ? da[i] : 0.0;
}

void softmax_pixels(const double* logits, size_t npx, int ch, double* out) {
#pragma omp parallel for schedule(static)
  for (int64_t px = 0; px < static_cast<int64_t>(npx); ++px) {
    const double* l = logits + static_cast<size_t>(px) * ch;
    double* o = out + static_cast<size_t>(px) * ch;
    double m = l[0];
    for (int c = 1; c < ch; ++c) m = std::max(m, l[c]);
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (int c = 0; c < ch; ++c) {
      o[c] = fast_exp_clamped(l[c] - m);
      s += o[c];
    }
    const double inv = 1.0 / s;
#pragma omp simd
    for (int c = 0; c < ch; ++c) o[c] *= inv;
  }
}

void softmax_backward(const double* sm, const double* dsm, size_t npx, int ch, double* dlogits) {
#pragma omp parallel for schedule(static)
  for (int64_t px = 0; px < static_cast<int64_t>(npx); ++px) {
    const double* s = sm + static_cast<size_t>(px) * ch;
    const double* ds = dsm + static_cast<size_t>(px) * ch;
    double* dl = dlogits + static_cast<size_t>(px) * ch;
    double dot = 0.0;
    for (int c = 0; c < ch; ++c) dot += ds[c] * s[c];
    for (int c = 0; c < ch; ++c) dl[c] = s[c] * (ds[c] - dot);
  }
}

bool all_finite(const double* p, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

}  // namespace cda::kern
