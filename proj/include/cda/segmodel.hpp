// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cda/labeldist.hpp"
#include "cda/tensor.hpp"

namespace cda {

// Small per-pixel segmentation network: conv3x3(3->F) -> ReLU ->
// conv3x3(F->F) -> ReLU -> conv1x1(F->C) -> per-pixel softmax, with exact
// analytic gradients for the composite training loss and an AdaDelta
// optimizer. All math is double precision.

struct ModelParams {
  int f = 8;
  int c = 8;
  std::vector<double> theta;  // conv1_w | conv1_b | conv2_w | conv2_b | head_w | head_b

  ModelParams() = default;
  ModelParams(int f_, int c_) : f(f_), c(c_), theta(param_count(f_, c_), 0.0) {}

  static size_t param_count(int f, int c) {
    return static_cast<size_t>(27 * f + f + 9 * f * f + f + f * c + c);
  }

  double* conv1_w() { return theta.data(); }
  double* conv1_b() { return theta.data() + 27 * f; }
  double* conv2_w() { return theta.data() + 28 * f; }
  double* conv2_b() { return theta.data() + 28 * f + 9 * f * f; }
  double* head_w() { return theta.data() + 29 * f + 9 * f * f; }
  double* head_b() { return theta.data() + 29 * f + 9 * f * f + f * c; }
  const double* conv1_w() const { return theta.data(); }
  const double* conv1_b() const { return theta.data() + 27 * f; }
  const double* conv2_w() const { return theta.data() + 28 * f; }
  const double* conv2_b() const { return theta.data() + 28 * f + 9 * f * f; }
  const double* head_w() const { return theta.data() + 29 * f + 9 * f * f; }
  const double* head_b() const { return theta.data() + 29 * f + 9 * f * f + f * c; }
};

// He init for kernels, zero biases; deterministic in seed.
ModelParams init_model(int f, int c, uint64_t seed);

struct ForwardCache {
  int w = 0, h = 0;
  std::vector<double> z1, a1, z2, a2, logits;
  SoftPred pred;
};

void forward_cached(const ModelParams& params, const Image& image, ForwardCache& cache);
SoftPred forward(const ModelParams& params, const Image& image);

// Mean over pixels of -log pred(gt), with the kLogClamp floor.
double pixel_ce_loss(const SoftPred& pred, const LabelMask& mask);

// One distribution-matching term: C(target, sharpened predicted distribution
// over `pixels`), weighted. Empty pixel list means the whole image.
struct RegionTarget {
  LabelDistribution target;
  std::vector<int32_t> pixels;
  double weight = 1.0;
  bool superpixel_term = false;  // history bookkeeping only
};

// Per-image entry of the composite loss.
struct LossItem {
  const Image* image = nullptr;
  const LabelMask* mask = nullptr;  // needed when ce_weight != 0
  double ce_weight = 0.0;
  std::vector<RegionTarget> dists;
  double sharpen_k = 6.0;
};

struct LossBreakdown {
  double total = 0.0;
  double src_ce = 0.0;
  double img_term = 0.0;
  double sp_term = 0.0;
};

// Composite loss value; items may be evaluated in parallel, accumulation is
// in item order.
double composite_loss(const ModelParams& params, const std::vector<LossItem>& items,
                      LossBreakdown* breakdown = nullptr);

// Loss value plus exact gradient w.r.t. the flat parameter vector.
double backward(const ModelParams& params, const std::vector<LossItem>& items,
                std::vector<double>& grad, LossBreakdown* breakdown = nullptr);

struct AdaDeltaState {
  std::vector<double> eg2, edx2;
  double rho = 0.95;
  double eps = 1e-6;

  AdaDeltaState() = default;
  explicit AdaDeltaState(size_t n) : eg2(n, 0.0), edx2(n, 0.0) {}
};

void adadelta_step(AdaDeltaState& state, ModelParams& params, const std::vector<double>& grad);

// Checkpoint: "CDA1" | u8 version | u32 F | u32 C | flat params (f64 LE),
// optionally followed by an "ADLT" section with rho, eps, eg2, edx2.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const AdaDeltaState* state = nullptr);
ModelParams load_checkpoint(const std::string& path, AdaDeltaState* state = nullptr);

}  // namespace cda
