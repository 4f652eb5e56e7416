// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cda/labeldist.hpp"
#include "cda/superpix.hpp"

namespace cda {

// One-vs-rest linear SVM over superpixel features, trained with
// Pegasos-style stochastic subgradient descent, plus selection of the
// top-confidence target superpixels as landmarks.

struct SvmModel {
  int c = 0;
  int dim = kSuperpixelFeatureDim;
  double lambda = 1e-3;
  int trained_epochs = 0;
  std::vector<double> feat_mean, feat_std;  // [dim], source standardization
  std::vector<double> weights;              // [c][dim]
  std::vector<double> bias;                 // [c]
};

SvmModel train_sp_svm(const std::vector<SuperpixelFeature>& features,
                      const std::vector<int32_t>& labels, int num_classes, double lambda = 1e-3,
                      int epochs = 200, uint64_t seed = 0);

// (class, confidence): argmax decision value, ties to the smaller class id.
std::pair<int32_t, double> classify_sp(const SvmModel& model, const SuperpixelFeature& feature);

struct ScoredSuperpixel {
  int32_t sp_id = 0;
  int32_t class_id = 0;
  double confidence = 0.0;
};

struct Landmark {
  int32_t sp_id = 0;
  int32_t class_id = 0;
  double confidence = 0.0;
  LabelDistribution dist;  // exact one-hot
};

struct LandmarkSet {
  std::vector<std::vector<Landmark>> per_image;
  size_t total() const {
    size_t n = 0;
    for (const auto& v : per_image) n += v.size();
    return n;
  }
};

// Keeps the ceil(ratio * N) most confident superpixels. The pool is global
// across the target set by default; per_image restricts the cut to each
// image for the ablation. Ties break on (image index, superpixel id).
LandmarkSet select_landmarks(const std::vector<std::vector<ScoredSuperpixel>>& scored,
                             double ratio, int num_classes, bool per_image = false);

void save_svm(const std::string& path, const SvmModel& model);
SvmModel load_svm(const std::string& path);

void save_landmarks_json(const std::string& path, const LandmarkSet& set);
LandmarkSet load_landmarks_json(const std::string& path, int num_classes);

}  // namespace cda
