// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "cda/common.hpp"

namespace cda {

// RGB image, channels-last row-major: px[(y*w + x)*3 + c], values in [0,1].
struct Image {
  int w = 0;
  int h = 0;
  std::vector<double> px;

  Image() = default;
  Image(int w_, int h_) : w(w_), h(h_), px(static_cast<size_t>(w_) * h_ * 3, 0.0) {}

  double& at(int y, int x, int c) { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
  double at(int y, int x, int c) const { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
  size_t pixels() const { return static_cast<size_t>(w) * h; }
};

// Dense per-pixel class ids in [0,C), row-major: ids[y*w + x].
struct LabelMask {
  int w = 0;
  int h = 0;
  std::vector<int32_t> ids;

  LabelMask() = default;
  LabelMask(int w_, int h_) : w(w_), h(h_), ids(static_cast<size_t>(w_) * h_, 0) {}

  int32_t& at(int y, int x) { return ids[static_cast<size_t>(y) * w + x]; }
  int32_t at(int y, int x) const { return ids[static_cast<size_t>(y) * w + x]; }
  size_t pixels() const { return static_cast<size_t>(w) * h; }
};

// Per-pixel simplex over C classes, channels-last: p[(y*w + x)*c + k].
struct SoftPred {
  int w = 0;
  int h = 0;
  int c = 0;
  std::vector<double> p;

  SoftPred() = default;
  SoftPred(int w_, int h_, int c_)
      : w(w_), h(h_), c(c_), p(static_cast<size_t>(w_) * h_ * c_, 0.0) {}

  double& at(int y, int x, int k) { return p[(static_cast<size_t>(y) * w + x) * c + k]; }
  double at(int y, int x, int k) const { return p[(static_cast<size_t>(y) * w + x) * c + k]; }
  size_t pixels() const { return static_cast<size_t>(w) * h; }
};

}  // namespace cda
