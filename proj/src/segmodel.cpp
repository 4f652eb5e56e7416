// SPDX-License-Identifier: Apache-2.0
#include "cda/segmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "cda/fastmath.hpp"
#include "cda/kernels.hpp"
#include "cda/rng.hpp"

namespace cda {

ModelParams init_model(int f, int c, uint64_t seed) {
  require(f >= 1, "init_model: F must be >= 1");
  require(c >= 2, "init_model: C must be >= 2");
  ModelParams p(f, c);
  SplitMix64 rng(seed);
  const double s1 = std::sqrt(2.0 / 27.0);
  const double s2 = std::sqrt(2.0 / (9.0 * f));
  const double s3 = std::sqrt(2.0 / f);
  for (int i = 0; i < 27 * f; ++i) p.conv1_w()[i] = s1 * rng.next_gaussian();
  for (int i = 0; i < 9 * f * f; ++i) p.conv2_w()[i] = s2 * rng.next_gaussian();
  for (int i = 0; i < f * c; ++i) p.head_w()[i] = s3 * rng.next_gaussian();
  return p;
}

void forward_cached(const ModelParams& params, const Image& image, ForwardCache& cache) {
  const int w = image.w, h = image.h, f = params.f, c = params.c;
  const size_t npx = image.pixels();
  cache.w = w;
  cache.h = h;
  cache.z1.resize(npx * f);
  cache.a1.resize(npx * f);
  cache.z2.resize(npx * f);
  cache.a2.resize(npx * f);
  cache.logits.resize(npx * c);
  if (cache.pred.w != w || cache.pred.h != h || cache.pred.c != c) cache.pred = SoftPred(w, h, c);

  kern::conv3x3_forward(image.px.data(), w, h, 3, params.conv1_w(), params.conv1_b(), f,
                        cache.z1.data());
  require(kern::all_finite(cache.z1.data(), cache.z1.size()),
          "forward: non-finite activations after conv1 (divergence)");
  kern::relu_forward(cache.z1.data(), cache.z1.size(), cache.a1.data());
  kern::conv3x3_forward(cache.a1.data(), w, h, f, params.conv2_w(), params.conv2_b(), f,
                        cache.z2.data());
  require(kern::all_finite(cache.z2.data(), cache.z2.size()),
          "forward: non-finite activations after conv2 (divergence)");
  kern::relu_forward(cache.z2.data(), cache.z2.size(), cache.a2.data());
  kern::conv1x1_forward(cache.a2.data(), static_cast<int>(npx), f, params.head_w(),
                        params.head_b(), c, cache.logits.data());
  require(kern::all_finite(cache.logits.data(), cache.logits.size()),
          "forward: non-finite logits (divergence)");
  kern::softmax_pixels(cache.logits.data(), npx, c, cache.pred.p.data());
}

SoftPred forward(const ModelParams& params, const Image& image) {
  ForwardCache cache;
  forward_cached(params, image, cache);
  return std::move(cache.pred);
}

double pixel_ce_loss(const SoftPred& pred, const LabelMask& mask) {
  require(pred.w == mask.w && pred.h == mask.h, "pixel_ce_loss: shape mismatch");
  const size_t npx = pred.pixels();
  for (size_t px = 0; px < npx; ++px)
    require(mask.ids[px] >= 0 && mask.ids[px] < pred.c,
            "pixel_ce_loss: class id out of range");
  double loss = 0.0;
#pragma omp simd reduction(- : loss)
  for (size_t px = 0; px < npx; ++px) {
    const double v = pred.p[px * pred.c + mask.ids[px]];
    loss -= fast_log(v > kLogClamp ? v : kLogClamp);
  }
  return loss / static_cast<double>(npx);
}

namespace {

// Reused per thread so the hot path does not churn 256 KB buffers per item.
struct ItemScratch {
  ForwardCache cache;
  std::vector<double> dlogits, dpred, tmp, da2, dz2, da1, dz1;
};

ItemScratch& item_scratch() {
  thread_local ItemScratch s;
  return s;
}

// Loss terms of one item; when grad buffers are given, also fills dlogits.
// The distribution-term gradient flows through the per-pixel max (treated as
// locally constant in its argmax), the sharpening power, the l1
// normalization, and the clamped log.
double item_loss(const ModelParams& params, const LossItem& item, ForwardCache& cache,
                 LossBreakdown& bd, std::vector<double>* dlogits_out,
                 std::vector<double>* dpred_scratch) {
  forward_cached(params, *item.image, cache);
  const SoftPred& pred = cache.pred;
  const int c = params.c;
  const size_t npx = pred.pixels();
  double total = 0.0;

  double* dlogits = nullptr;
  if (dlogits_out) {
    dlogits_out->assign(npx * c, 0.0);
    dlogits = dlogits_out->data();
  }

  if (item.ce_weight != 0.0) {
    require(item.mask != nullptr, "composite loss: CE term requires a mask");
    const double ce = pixel_ce_loss(pred, *item.mask);
    total += item.ce_weight * ce;
    bd.src_ce += item.ce_weight * ce;
    if (dlogits) {
      const double scale = item.ce_weight / static_cast<double>(npx);
      for (size_t px = 0; px < npx; ++px) {
        const int32_t g = item.mask->ids[px];
        if (pred.p[px * c + g] < kLogClamp) continue;  // clamped log: zero grad
        double* dl = dlogits + px * c;
        const double* pp = pred.p.data() + px * c;
        for (int j = 0; j < c; ++j) dl[j] += scale * (pp[j] - (j == g ? 1.0 : 0.0));
      }
    }
  }

  if (!item.dists.empty()) {
    double* dpred = nullptr;
    if (dlogits) {
      dpred_scratch->assign(npx * c, 0.0);
      dpred = dpred_scratch->data();
    }
    std::vector<double> sums(c), phat(c), gsum(c);
    for (const RegionTarget& rt : item.dists) {
      if (rt.weight == 0.0) continue;
      sharpened_region_sums(pred, item.sharpen_k, rt.pixels, sums.data());
      double mass = 0.0;
      for (int j = 0; j < c; ++j) mass += sums[j];
      double term = 0.0;
      double udot = 0.0;  // sum_d u_d * phat_d with u_d = dLoss/dphat_d
      for (int j = 0; j < c; ++j) {
        phat[j] = sums[j] / mass;
        term -= rt.target.p[j] * std::log(std::max(phat[j], kLogClamp));
        const double u = phat[j] >= kLogClamp ? -rt.target.p[j] / phat[j] : 0.0;
        gsum[j] = u;
        udot += u * phat[j];
      }
      total += rt.weight * term;
      (rt.superpixel_term ? bd.sp_term : bd.img_term) += rt.weight * term;

      if (dpred) {
        for (int j = 0; j < c; ++j) gsum[j] = rt.weight * (gsum[j] - udot) / mass;
        const auto add_pixel = [&](size_t px) {
          const double* pp = pred.p.data() + px * c;
          double* dp = dpred + px * c;
          int m = 0;
          for (int j = 1; j < c; ++j)
            if (pp[j] > pp[m]) m = j;
          const double inv_m = 1.0 / pp[m];
          double dmax = 0.0;
          for (int j = 0; j < c; ++j) {
            if (j == m) continue;
            const double r = pow_sharpen(pp[j] * inv_m, item.sharpen_k);
            if (pp[j] > 0.0) dp[j] += gsum[j] * item.sharpen_k * r / pp[j];
            dmax -= gsum[j] * item.sharpen_k * r * inv_m;
          }
          dp[m] += dmax;
        };
        if (rt.pixels.empty())
          for (size_t px = 0; px < npx; ++px) add_pixel(px);
        else
          for (int32_t px : rt.pixels) add_pixel(static_cast<size_t>(px));
      }
    }
    if (dpred) {
      // dpred -> dlogits through the per-pixel softmax, added onto the CE part.
      std::vector<double>& tmp = item_scratch().tmp;
      tmp.resize(npx * static_cast<size_t>(c));
      kern::softmax_backward(pred.p.data(), dpred, npx, c, tmp.data());
      for (size_t i = 0; i < tmp.size(); ++i) dlogits[i] += tmp[i];
    }
  }
  return total;
}

// Backprop dlogits of one item through the network; writes the item gradient
// in flat layout.
void item_backprop(const ModelParams& params, const Image& image, ForwardCache& cache,
                   const std::vector<double>& dlogits, std::vector<double>& grad) {
  const int w = cache.w, h = cache.h, f = params.f, c = params.c;
  const int npx = w * h;
  grad.assign(params.theta.size(), 0.0);
  // Borrow grad as the theta of a layout-only ModelParams so the offset
  // helpers also address the gradient.
  ModelParams layout(f, c);
  layout.theta.swap(grad);

  ItemScratch& scratch = item_scratch();
  const size_t nact = static_cast<size_t>(npx) * f;
  scratch.da2.resize(nact);
  scratch.dz2.resize(nact);
  scratch.da1.resize(nact);
  scratch.dz1.resize(nact);
  std::vector<double>& da2 = scratch.da2;
  std::vector<double>& dz2 = scratch.dz2;
  std::vector<double>& da1 = scratch.da1;
  std::vector<double>& dz1 = scratch.dz1;

  kern::conv1x1_backward_weights(cache.a2.data(), dlogits.data(), npx, f, c, layout.head_w(),
                                 layout.head_b());
  kern::conv1x1_backward_data(dlogits.data(), npx, c, params.head_w(), f, da2.data());
  kern::relu_backward(cache.z2.data(), da2.data(), da2.size(), dz2.data());
  kern::conv3x3_backward_weights(cache.a1.data(), dz2.data(), w, h, f, f, layout.conv2_w(),
                                 layout.conv2_b());
  kern::conv3x3_backward_data(dz2.data(), w, h, f, params.conv2_w(), f, da1.data());
  kern::relu_backward(cache.z1.data(), da1.data(), da1.size(), dz1.data());
  kern::conv3x3_backward_weights(image.px.data(), dz1.data(), w, h, 3, f, layout.conv1_w(),
                                 layout.conv1_b());
  layout.theta.swap(grad);
}

}  // namespace

double composite_loss(const ModelParams& params, const std::vector<LossItem>& items,
                      LossBreakdown* breakdown) {
  const size_t n = items.size();
  std::vector<double> totals(n);
  std::vector<LossBreakdown> bds(n);
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
    totals[i] = item_loss(params, items[i], item_scratch().cache, bds[i], nullptr, nullptr);
  }
  LossBreakdown bd;
  for (size_t i = 0; i < n; ++i) {  // fixed-order reduction
    bd.total += totals[i];
    bd.src_ce += bds[i].src_ce;
    bd.img_term += bds[i].img_term;
    bd.sp_term += bds[i].sp_term;
  }
  if (breakdown) *breakdown = bd;
  require(std::isfinite(bd.total), "composite_loss: non-finite loss");
  return bd.total;
}

double backward(const ModelParams& params, const std::vector<LossItem>& items,
                std::vector<double>& grad, LossBreakdown* breakdown) {
  const size_t n = items.size();
  std::vector<double> totals(n);
  std::vector<LossBreakdown> bds(n);
  std::vector<std::vector<double>> item_grads(n);
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
    ItemScratch& scratch = item_scratch();
    totals[i] = item_loss(params, items[i], scratch.cache, bds[i], &scratch.dlogits,
                          &scratch.dpred);
    item_backprop(params, *items[i].image, scratch.cache, scratch.dlogits, item_grads[i]);
  }

  grad.assign(params.theta.size(), 0.0);
  LossBreakdown bd;
  for (size_t i = 0; i < n; ++i) {  // reduction in batch-index order
    bd.total += totals[i];
    bd.src_ce += bds[i].src_ce;
    bd.img_term += bds[i].img_term;
    bd.sp_term += bds[i].sp_term;
    for (size_t j = 0; j < grad.size(); ++j) grad[j] += item_grads[i][j];
  }
  if (breakdown) *breakdown = bd;
  require(std::isfinite(bd.total), "backward: non-finite loss");
  require(kern::all_finite(grad.data(), grad.size()), "backward: non-finite gradient");
  return bd.total;
}

void adadelta_step(AdaDeltaState& state, ModelParams& params, const std::vector<double>& grad) {
  require(state.eg2.size() == params.theta.size() && state.edx2.size() == params.theta.size(),
          "adadelta_step: state/param shape mismatch");
  require(grad.size() == params.theta.size(), "adadelta_step: grad/param shape mismatch");
  const double rho = state.rho, eps = state.eps;
  for (size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    state.eg2[i] = rho * state.eg2[i] + (1.0 - rho) * g * g;
    const double dx = -std::sqrt(state.edx2[i] + eps) / std::sqrt(state.eg2[i] + eps) * g;
    state.edx2[i] = rho * state.edx2[i] + (1.0 - rho) * dx * dx;
    params.theta[i] += dx;
  }
}

namespace {
constexpr char kCkptMagic[5] = {'C', 'D', 'A', '1', 1};
constexpr char kAdaTag[4] = {'A', 'D', 'L', 'T'};
}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const AdaDeltaState* state) {
  FILE* f = std::fopen(path.c_str(), "wb");
  require(f != nullptr, "save_checkpoint: cannot open '" + path + "'");
  std::fwrite(kCkptMagic, 1, 5, f);
  const uint32_t dims[2] = {static_cast<uint32_t>(params.f), static_cast<uint32_t>(params.c)};
  std::fwrite(dims, 4, 2, f);
  std::fwrite(params.theta.data(), 8, params.theta.size(), f);
  if (state) {
    std::fwrite(kAdaTag, 1, 4, f);
    std::fwrite(&state->rho, 8, 1, f);
    std::fwrite(&state->eps, 8, 1, f);
    std::fwrite(state->eg2.data(), 8, state->eg2.size(), f);
    std::fwrite(state->edx2.data(), 8, state->edx2.size(), f);
  }
  std::fclose(f);
}

ModelParams load_checkpoint(const std::string& path, AdaDeltaState* state) {
  FILE* f = std::fopen(path.c_str(), "rb");
  require(f != nullptr, "load_checkpoint: cannot open '" + path + "'");
  char head[5];
  bool ok = std::fread(head, 1, 5, f) == 5 && std::memcmp(head, kCkptMagic, 5) == 0;
  uint32_t dims[2] = {0, 0};
  ok = ok && std::fread(dims, 4, 2, f) == 2 && dims[0] >= 1 && dims[1] >= 2;
  ModelParams params;
  if (ok) {
    params = ModelParams(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
    ok = std::fread(params.theta.data(), 8, params.theta.size(), f) == params.theta.size();
  }
  if (ok && state) {
    char tag[4];
    if (std::fread(tag, 1, 4, f) == 4) {
      ok = std::memcmp(tag, kAdaTag, 4) == 0;
      if (ok) {
        *state = AdaDeltaState(params.theta.size());
        ok = std::fread(&state->rho, 8, 1, f) == 1 && std::fread(&state->eps, 8, 1, f) == 1 &&
             std::fread(state->eg2.data(), 8, state->eg2.size(), f) == state->eg2.size() &&
             std::fread(state->edx2.data(), 8, state->edx2.size(), f) == state->edx2.size();
      }
    } else {
      *state = AdaDeltaState(params.theta.size());  // fresh state when absent
    }
  }
  std::fclose(f);
  require(ok, "load_checkpoint: '" + path + "' is not a valid checkpoint");
  return params;
}

}  // namespace cda
