// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cda/landmark.hpp"
#include "cda/rng.hpp"
#include "cda/scenegen.hpp"
#include "cda/segmodel.hpp"

namespace cda {

// Mixed source/target training: gamma-weighted pixel CE on source plus
// distribution-matching terms on target at the image and landmark-superpixel
// levels. Target properties are computed once, before training, and never
// updated by it.

struct LandmarkRegion {
  std::vector<int32_t> pixels;  // linear pixel indices of the superpixel
  LabelDistribution dist;       // one-hot class distribution
};

struct TargetProperties {
  struct PerImage {
    LabelDistribution image_dist;
    std::vector<LandmarkRegion> landmarks;
  };
  std::vector<PerImage> images;
};

using DistEstimator = std::function<LabelDistribution(const Image&)>;

TargetProperties build_target_properties(const Dataset& target_train,
                                         const DistEstimator& estimator,
                                         const LandmarkSet& landmarks,
                                         const std::vector<SuperpixelMap>& spmaps);

struct TrainConfig {
  double gamma = 0.5;     // [0,1]; weight of the source pixel CE
  double sharpen_k = 6.0; // sharpening exponent of the predicted distribution
  int src_batch = 5;
  int tgt_batch = 5;      // NoAdapt mode: src_batch=15, tgt_batch=0
  int steps = 2000;
  uint64_t seed = 0;
  bool use_image_term = true;
  bool use_sp_term = true;
};

void check_train_config(const TrainConfig& cfg);

// Uniform without replacement within a batch, with replacement across steps.
void sample_batch(SplitMix64& rng, size_t n_source, size_t n_target, const TrainConfig& cfg,
                  std::vector<int>& src_idx, std::vector<int>& tgt_idx);

// Assembles the Eq-style composite loss items for one mini-batch. Terms with
// zero coefficient are omitted entirely, so gamma=1 runs are bit-identical
// to a source-only trainer on the same schedule.
std::vector<LossItem> build_loss_items(const TrainConfig& cfg, const Dataset& source,
                                       const std::vector<int>& src_idx, const Dataset& target,
                                       const std::vector<int>& tgt_idx,
                                       const TargetProperties& props);

double total_loss(const ModelParams& params, const TrainConfig& cfg, const Dataset& source,
                  const std::vector<int>& src_idx, const Dataset& target,
                  const std::vector<int>& tgt_idx, const TargetProperties& props,
                  LossBreakdown* breakdown = nullptr);

struct StepStats {
  int step = 0;
  double total = 0.0, src_term = 0.0, img_term = 0.0, sp_term = 0.0;
};
using History = std::vector<StepStats>;

struct TrainResult {
  ModelParams params;
  History history;
};

TrainResult train(const TrainConfig& cfg, const Dataset& source, const Dataset& target,
                  const TargetProperties& props, ModelParams init);

void save_history_csv(const std::string& path, const History& history);

}  // namespace cda
