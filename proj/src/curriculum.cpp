// SPDX-License-Identifier: Apache-2.0
#include "cda/curriculum.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace cda {

TargetProperties build_target_properties(const Dataset& target_train,
                                         const DistEstimator& estimator,
                                         const LandmarkSet& landmarks,
                                         const std::vector<SuperpixelMap>& spmaps) {
  const size_t n = target_train.scenes.size();
  require(landmarks.per_image.empty() || landmarks.per_image.size() == n,
          "build_target_properties: landmark set does not cover the target train split");
  require(spmaps.empty() || spmaps.size() == n,
          "build_target_properties: superpixel maps do not cover the target train split");

  TargetProperties props;
  props.images.resize(n);
  for (size_t i = 0; i < n; ++i) {
    props.images[i].image_dist = estimator(target_train.scenes[i].image);
    if (landmarks.per_image.empty()) continue;
    require(!spmaps.empty(), "build_target_properties: landmarks require superpixel maps");
    for (const Landmark& lm : landmarks.per_image[i]) {
      LandmarkRegion region;
      region.pixels = spmaps[i].pixels_of(lm.sp_id);
      require(!region.pixels.empty(), "build_target_properties: landmark superpixel is empty");
      region.dist = lm.dist;
      props.images[i].landmarks.push_back(std::move(region));
    }
  }
  return props;
}

void check_train_config(const TrainConfig& cfg) {
  require(cfg.gamma >= 0.0 && cfg.gamma <= 1.0, "TrainConfig: gamma must be in [0,1]");
  require(cfg.sharpen_k >= 1.0, "TrainConfig: sharpen_k must be >= 1");
  if (cfg.sharpen_k > 30.0)
    std::fprintf(stderr, "TrainConfig: warning: K=%g is large; sharpening this hard is "
                         "numerically delicate\n",
                 cfg.sharpen_k);
  require(cfg.src_batch >= 0 && cfg.tgt_batch >= 0, "TrainConfig: batch sizes must be >= 0");
  require(cfg.src_batch + cfg.tgt_batch > 0, "TrainConfig: empty mini-batch");
  require(cfg.steps >= 0, "TrainConfig: steps must be >= 0");
}

namespace {

void sample_without_replacement(SplitMix64& rng, size_t n, int k, std::vector<int>& out) {
  require(static_cast<size_t>(k) <= n, "sample_batch: batch size exceeds the dataset size");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  out.resize(k);
  for (int j = 0; j < k; ++j) {
    const size_t r = j + rng.next_below(n - j);
    std::swap(idx[j], idx[r]);
    out[j] = idx[j];
  }
}

}  // namespace

void sample_batch(SplitMix64& rng, size_t n_source, size_t n_target, const TrainConfig& cfg,
                  std::vector<int>& src_idx, std::vector<int>& tgt_idx) {
  src_idx.clear();
  tgt_idx.clear();
  if (cfg.src_batch > 0) sample_without_replacement(rng, n_source, cfg.src_batch, src_idx);
  if (cfg.tgt_batch > 0) sample_without_replacement(rng, n_target, cfg.tgt_batch, tgt_idx);
}

std::vector<LossItem> build_loss_items(const TrainConfig& cfg, const Dataset& source,
                                       const std::vector<int>& src_idx, const Dataset& target,
                                       const std::vector<int>& tgt_idx,
                                       const TargetProperties& props) {
  std::vector<LossItem> items;
  const double src_w = src_idx.empty() ? 0.0 : cfg.gamma / static_cast<double>(src_idx.size());
  if (src_w != 0.0) {
    for (int i : src_idx) {
      LossItem item;
      item.image = &source.scenes[i].image;
      item.mask = &source.scenes[i].mask;
      item.ce_weight = src_w;
      item.sharpen_k = cfg.sharpen_k;
      items.push_back(std::move(item));
    }
  }
  const double tgt_w =
      tgt_idx.empty() ? 0.0 : (1.0 - cfg.gamma) / static_cast<double>(tgt_idx.size());
  if (tgt_w != 0.0 && (cfg.use_image_term || cfg.use_sp_term)) {
    for (int i : tgt_idx) {
      require(static_cast<size_t>(i) < props.images.size(),
              "build_loss_items: target properties missing for a batch image");
      const TargetProperties::PerImage& pi = props.images[i];
      LossItem item;
      item.image = &target.scenes[i].image;
      item.sharpen_k = cfg.sharpen_k;
      if (cfg.use_image_term) {
        RegionTarget rt;
        rt.target = pi.image_dist;
        rt.weight = tgt_w;
        item.dists.push_back(std::move(rt));
      }
      if (cfg.use_sp_term && !pi.landmarks.empty()) {
        // Averaged over the image's landmarks to keep the term on the same
        // scale as the image-level term.
        const double lw = tgt_w / static_cast<double>(pi.landmarks.size());
        for (const LandmarkRegion& lr : pi.landmarks) {
          RegionTarget rt;
          rt.target = lr.dist;
          rt.pixels = lr.pixels;
          rt.weight = lw;
          rt.superpixel_term = true;
          item.dists.push_back(std::move(rt));
        }
      }
      if (!item.dists.empty()) items.push_back(std::move(item));
    }
  }
  return items;
}

double total_loss(const ModelParams& params, const TrainConfig& cfg, const Dataset& source,
                  const std::vector<int>& src_idx, const Dataset& target,
                  const std::vector<int>& tgt_idx, const TargetProperties& props,
                  LossBreakdown* breakdown) {
  const std::vector<LossItem> items =
      build_loss_items(cfg, source, src_idx, target, tgt_idx, props);
  return composite_loss(params, items, breakdown);
}

TrainResult train(const TrainConfig& cfg, const Dataset& source, const Dataset& target,
                  const TargetProperties& props, ModelParams init) {
  check_train_config(cfg);
  if (cfg.tgt_batch > 0 && cfg.gamma < 1.0 && (cfg.use_image_term || cfg.use_sp_term))
    require(props.images.size() == target.scenes.size(),
            "train: target properties must cover the target train split");

  TrainResult result;
  result.params = std::move(init);
  result.history.reserve(cfg.steps);
  AdaDeltaState state(result.params.theta.size());
  SplitMix64 rng(cfg.seed);
  std::vector<int> src_idx, tgt_idx;
  std::vector<double> grad;

  for (int step = 0; step < cfg.steps; ++step) {
    sample_batch(rng, source.scenes.size(), target.scenes.size(), cfg, src_idx, tgt_idx);
    const std::vector<LossItem> items =
        build_loss_items(cfg, source, src_idx, target, tgt_idx, props);
    LossBreakdown bd;
    try {
      backward(result.params, items, grad, &bd);
    } catch (const Error& e) {
      fail("train: diverged at step " + std::to_string(step) + " (src_ce=" +
           std::to_string(bd.src_ce) + ", img=" + std::to_string(bd.img_term) + ", sp=" +
           std::to_string(bd.sp_term) + "): " + e.what());
    }
    adadelta_step(state, result.params, grad);
    result.history.push_back({step, bd.total, bd.src_ce, bd.img_term, bd.sp_term});
  }
  return result;
}

void save_history_csv(const std::string& path, const History& history) {
  FILE* f = std::fopen(path.c_str(), "w");
  require(f != nullptr, "save_history_csv: cannot open '" + path + "'");
  std::fprintf(f, "step,total,src_term,img_term,sp_term\n");
  for (const StepStats& s : history)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g\n", s.step, s.total, s.src_term, s.img_term,
                 s.sp_term);
  std::fclose(f);
}

}  // namespace cda
