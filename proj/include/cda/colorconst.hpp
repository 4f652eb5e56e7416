// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "cda/tensor.hpp"

namespace cda {

// Diagonal (von Kries) color calibration toward reference statistics,
// the standalone pre-processing step applied to target images.

struct ColorStats {
  std::array<double, 3> mean{};
  std::array<double, 3> p95{};  // 95th percentile, linear interpolation
};

// Pools every pixel of every image; exact per-channel mean and percentile.
ColorStats fit_color_stats(const std::vector<Image>& images);

// Per-channel gain ref_mean/image_mean clamped to [0.25, 4], output clipped
// to [0,1]. Masks are never touched.
Image calibrate(const Image& image, const ColorStats& image_stats, const ColorStats& ref_stats);

void save_color_stats_json(const std::string& path, const ColorStats& stats);
ColorStats load_color_stats_json(const std::string& path);

}  // namespace cda
