// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cda/tensor.hpp"

namespace cda {

// SLIC-style oversegmentation: local k-means in (color, position/S) space
// seeded from a regular grid, followed by connectivity enforcement that
// merges orphan components into the neighbor with the longest shared
// boundary. Colors enter the distance scaled to [0,100].

struct SuperpixelMap {
  int w = 0, h = 0;
  int count = 0;
  std::vector<int32_t> ids;  // [h*w], values in [0,count)
  std::vector<double> cx, cy;
  std::vector<int32_t> sizes;

  std::vector<int32_t> pixels_of(int32_t id) const;
};

SuperpixelMap slic_segment(const Image& image, int n, double compactness = 10.0, int iters = 10);

// 45-D context feature: 9-D local block (mean RGB, std RGB, normalized
// centroid, size fraction) for self, left, right, above, below neighbors.
constexpr int kSuperpixelFeatureDim = 45;
struct SuperpixelFeature {
  std::array<double, kSuperpixelFeatureDim> v{};
};
std::vector<SuperpixelFeature> superpixel_features(const Image& image, const SuperpixelMap& spmap);

// Majority ground-truth class per superpixel, ties to the smaller class id.
std::vector<int32_t> dominant_labels(const SuperpixelMap& spmap, const LabelMask& mask);

// Boundary overlay for visual inspection (PGM, P5).
void write_boundary_pgm(const std::string& path, const Image& image, const SuperpixelMap& spmap);

}  // namespace cda
