// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cda/tensor.hpp"

namespace cda {

// Image- and region-level label distributions, the sharpened predicted
// distribution, the distribution cross-entropy / chi-square losses, and the
// four global-distribution estimators.

// Clamp applied to every probability before a log.
constexpr double kLogClamp = 1e-8;

struct LabelDistribution {
  std::vector<double> p;

  LabelDistribution() = default;
  explicit LabelDistribution(int c) : p(c, 0.0) {}
  int classes() const { return static_cast<int>(p.size()); }
};

// Renormalizes in place so the simplex invariant holds exactly.
void normalize_distribution(LabelDistribution& d);

LabelDistribution gt_label_distribution(const LabelMask& mask, int c);

// Per-class sums of (pred/per-pixel max)^k over `region` (linear pixel
// indices; empty means the whole image). Shared by the loss gradient, which
// needs the sums before normalization.
void sharpened_region_sums(const SoftPred& pred, double k, std::span<const int32_t> region,
                           double* sums);

LabelDistribution predicted_label_distribution(const SoftPred& pred, double k,
                                               std::span<const int32_t> region = {});

// -sum_c p(c) log p_hat(c) == H(p) + KL(p || p_hat).
double dist_cross_entropy(const LabelDistribution& p, const LabelDistribution& p_hat);

// sum_c (p_c - q_c)^2 / (p_c + q_c), empty-support terms contribute 0.
double chi2_distance(const LabelDistribution& p, const LabelDistribution& q);

// 88-D descriptor: three 8-bin per-channel histograms + 8x8 mean-pooled gray.
constexpr int kDescriptorDim = 88;
struct ImageDescriptor {
  std::array<double, kDescriptorDim> v{};
};
ImageDescriptor image_descriptor(const Image& image);

struct LREstimator {
  int c = 0;
  std::vector<double> weights;  // [kDescriptorDim][c]
  std::vector<double> bias;     // [c]
};

// Softmax regression against soft targets, full-batch gradient descent from
// zero init (seed is accepted for interface stability; the fit is
// deterministic without it).
LREstimator fit_lr_estimator(const std::vector<ImageDescriptor>& descriptors,
                             const std::vector<LabelDistribution>& targets, int epochs = 2000,
                             double lr_rate = 0.05, uint64_t seed = 0);

LabelDistribution estimate_lr(const LREstimator& est, const Image& image);
LabelDistribution estimate_lr(const LREstimator& est, const ImageDescriptor& desc);

LabelDistribution estimate_nn(
    const std::vector<std::pair<ImageDescriptor, LabelDistribution>>& source,
    const Image& image, int k = 5);
LabelDistribution estimate_nn(
    const std::vector<std::pair<ImageDescriptor, LabelDistribution>>& source,
    const ImageDescriptor& desc, int k = 5);

LabelDistribution estimate_source_mean(const std::vector<LabelDistribution>& source_dists);
LabelDistribution estimate_uniform(int c);

void save_lr_estimator(const std::string& path, const LREstimator& est);
LREstimator load_lr_estimator(const std::string& path);

}  // namespace cda
