// SPDX-License-Identifier: Apache-2.0
#include "cda/labeldist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "cda/fastmath.hpp"
#include "cda/kernels.hpp"

namespace cda {

void normalize_distribution(LabelDistribution& d) {
  double s = 0.0;
  for (double& v : d.p) {
    if (v < 0.0) v = 0.0;
    s += v;
  }
  require(s > 0.0, "normalize_distribution: zero mass");
  for (double& v : d.p) v /= s;
}

LabelDistribution gt_label_distribution(const LabelMask& mask, int c) {
  LabelDistribution d(c);
  for (int32_t id : mask.ids) {
    require(id >= 0 && id < c, "gt_label_distribution: class id out of range");
    d.p[id] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(mask.pixels());
  for (double& v : d.p) v *= inv;
  return d;
}

void sharpened_region_sums(const SoftPred& pred, double k, std::span<const int32_t> region,
                           double* sums) {
  require(k >= 1.0, "sharpened_region_sums: K must be >= 1");
  const int c = pred.c;
  std::fill(sums, sums + c, 0.0);
  const size_t npx = pred.pixels();
  const auto accumulate = [&](size_t px) {
    const double* p = pred.p.data() + px * c;
    double m = p[0];
    for (int j = 1; j < c; ++j) m = std::max(m, p[j]);
    const double inv_m = 1.0 / m;
    for (int j = 0; j < c; ++j) sums[j] += pow_sharpen(p[j] * inv_m, k);
  };
  if (region.empty()) {
    for (size_t px = 0; px < npx; ++px) accumulate(px);
  } else {
    for (int32_t px : region) {
      require(px >= 0 && static_cast<size_t>(px) < npx,
              "sharpened_region_sums: region pixel out of range");
      accumulate(static_cast<size_t>(px));
    }
  }
}

LabelDistribution predicted_label_distribution(const SoftPred& pred, double k,
                                               std::span<const int32_t> region) {
  LabelDistribution d(pred.c);
  sharpened_region_sums(pred, k, region, d.p.data());
  normalize_distribution(d);  // the per-pixel max contributes 1, mass > 0
  return d;
}

double dist_cross_entropy(const LabelDistribution& p, const LabelDistribution& p_hat) {
  require(p.classes() == p_hat.classes(), "dist_cross_entropy: class count mismatch");
  double s = 0.0;
  for (int c = 0; c < p.classes(); ++c)
    s -= p.p[c] * std::log(std::max(p_hat.p[c], kLogClamp));
  return s;
}

double chi2_distance(const LabelDistribution& p, const LabelDistribution& q) {
  require(p.classes() == q.classes(), "chi2_distance: class count mismatch");
  double s = 0.0;
  for (int c = 0; c < p.classes(); ++c) {
    const double denom = p.p[c] + q.p[c];
    if (denom > 0.0) {
      const double diff = p.p[c] - q.p[c];
      s += diff * diff / denom;
    }
  }
  return s;
}

ImageDescriptor image_descriptor(const Image& image) {
  ImageDescriptor d;
  const size_t npx = image.pixels();
  const double inv_npx = 1.0 / static_cast<double>(npx);
  for (size_t px = 0; px < npx; ++px)
    for (int ch = 0; ch < 3; ++ch) {
      const double v = image.px[px * 3 + ch];
      const int bin = std::min(7, static_cast<int>(v * 8.0));
      d.v[ch * 8 + bin] += inv_npx;
    }
  // 8x8 mean-pooled grayscale, cells partition the image.
  for (int cy = 0; cy < 8; ++cy) {
    const int y0 = cy * image.h / 8, y1 = (cy + 1) * image.h / 8;
    for (int cx = 0; cx < 8; ++cx) {
      const int x0 = cx * image.w / 8, x1 = (cx + 1) * image.w / 8;
      double s = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          s += (image.at(y, x, 0) + image.at(y, x, 1) + image.at(y, x, 2)) / 3.0;
      const int cells = std::max(1, (y1 - y0) * (x1 - x0));
      d.v[24 + cy * 8 + cx] = s / cells;
    }
  }
  return d;
}

namespace {

LabelDistribution lr_forward(const LREstimator& est, const double* v) {
  LabelDistribution out(est.c);
  std::vector<double> logits(est.c);
  for (int c = 0; c < est.c; ++c) {
    double s = est.bias[c];
    for (int i = 0; i < kDescriptorDim; ++i) s += est.weights[i * est.c + c] * v[i];
    logits[c] = s;
  }
  kern::softmax_pixels(logits.data(), 1, est.c, out.p.data());
  return out;
}

}  // namespace

LREstimator fit_lr_estimator(const std::vector<ImageDescriptor>& descriptors,
                             const std::vector<LabelDistribution>& targets, int epochs,
                             double lr_rate, uint64_t seed) {
  (void)seed;  // zero init + full batch: nothing to randomize
  require(!descriptors.empty(), "fit_lr_estimator: empty training set");
  require(descriptors.size() == targets.size(), "fit_lr_estimator: size mismatch");
  const int c = targets.front().classes();
  const size_t n = descriptors.size();

  LREstimator est;
  est.c = c;
  est.weights.assign(static_cast<size_t>(kDescriptorDim) * c, 0.0);
  est.bias.assign(c, 0.0);

  std::vector<double> gw(est.weights.size()), gb(c), logits(c), q(c);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double* v = descriptors[i].v.data();
      for (int j = 0; j < c; ++j) {
        double s = est.bias[j];
        for (int d = 0; d < kDescriptorDim; ++d) s += est.weights[d * c + j] * v[d];
        logits[j] = s;
      }
      kern::softmax_pixels(logits.data(), 1, c, q.data());
      for (int j = 0; j < c; ++j) {
        loss -= targets[i].p[j] * std::log(std::max(q[j], kLogClamp));
        const double dl = (q[j] - targets[i].p[j]) / static_cast<double>(n);
        gb[j] += dl;
        for (int d = 0; d < kDescriptorDim; ++d) gw[d * c + j] += dl * v[d];
      }
    }
    require(std::isfinite(loss), "fit_lr_estimator: loss diverged at epoch " +
                                     std::to_string(epoch));
    for (size_t j = 0; j < est.weights.size(); ++j) est.weights[j] -= lr_rate * gw[j];
    for (int j = 0; j < c; ++j) est.bias[j] -= lr_rate * gb[j];
  }
  return est;
}

LabelDistribution estimate_lr(const LREstimator& est, const ImageDescriptor& desc) {
  return lr_forward(est, desc.v.data());
}

LabelDistribution estimate_lr(const LREstimator& est, const Image& image) {
  return estimate_lr(est, image_descriptor(image));
}

LabelDistribution estimate_nn(
    const std::vector<std::pair<ImageDescriptor, LabelDistribution>>& source,
    const ImageDescriptor& desc, int k) {
  require(!source.empty(), "estimate_nn: empty source list");
  require(k >= 1 && static_cast<size_t>(k) <= source.size(),
          "estimate_nn: k must be in [1, |source|]");
  std::vector<std::pair<double, size_t>> by_dist(source.size());
  for (size_t i = 0; i < source.size(); ++i) {
    double d2 = 0.0;
    for (int j = 0; j < kDescriptorDim; ++j) {
      const double diff = source[i].first.v[j] - desc.v[j];
      d2 += diff * diff;
    }
    by_dist[i] = {d2, i};
  }
  // Ties resolved by lower source index via the pair ordering.
  std::partial_sort(by_dist.begin(), by_dist.begin() + k, by_dist.end());
  LabelDistribution out(source.front().second.classes());
  for (int i = 0; i < k; ++i) {
    const LabelDistribution& d = source[by_dist[i].second].second;
    for (int c = 0; c < out.classes(); ++c) out.p[c] += d.p[c];
  }
  for (double& v : out.p) v /= k;
  return out;
}

LabelDistribution estimate_nn(
    const std::vector<std::pair<ImageDescriptor, LabelDistribution>>& source,
    const Image& image, int k) {
  return estimate_nn(source, image_descriptor(image), k);
}

LabelDistribution estimate_source_mean(const std::vector<LabelDistribution>& source_dists) {
  require(!source_dists.empty(), "estimate_source_mean: empty source list");
  LabelDistribution out(source_dists.front().classes());
  for (const LabelDistribution& d : source_dists)
    for (int c = 0; c < out.classes(); ++c) out.p[c] += d.p[c];
  for (double& v : out.p) v /= static_cast<double>(source_dists.size());
  return out;
}

LabelDistribution estimate_uniform(int c) {
  require(c >= 1, "estimate_uniform: C must be >= 1");
  LabelDistribution out(c);
  std::fill(out.p.begin(), out.p.end(), 1.0 / c);
  return out;
}

namespace {
constexpr char kEstimatorTag[4] = {'L', 'R', 'E', 'S'};
}

void save_lr_estimator(const std::string& path, const LREstimator& est) {
  FILE* f = std::fopen(path.c_str(), "wb");
  require(f != nullptr, "save_lr_estimator: cannot open '" + path + "'");
  const char magic[5] = {'C', 'D', 'A', '1', 1};
  std::fwrite(magic, 1, 5, f);
  std::fwrite(kEstimatorTag, 1, 4, f);
  const uint32_t dims[2] = {kDescriptorDim, static_cast<uint32_t>(est.c)};
  std::fwrite(dims, 4, 2, f);
  std::fwrite(est.weights.data(), 8, est.weights.size(), f);
  std::fwrite(est.bias.data(), 8, est.bias.size(), f);
  std::fclose(f);
}

LREstimator load_lr_estimator(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  require(f != nullptr, "load_lr_estimator: cannot open '" + path + "'");
  char head[9];
  bool ok = std::fread(head, 1, 9, f) == 9 && std::memcmp(head, "CDA1\x01", 5) == 0 &&
            std::memcmp(head + 5, kEstimatorTag, 4) == 0;
  uint32_t dims[2] = {0, 0};
  ok = ok && std::fread(dims, 4, 2, f) == 2 && dims[0] == kDescriptorDim && dims[1] >= 1;
  LREstimator est;
  if (ok) {
    est.c = static_cast<int>(dims[1]);
    est.weights.resize(static_cast<size_t>(kDescriptorDim) * est.c);
    est.bias.resize(est.c);
    ok = std::fread(est.weights.data(), 8, est.weights.size(), f) == est.weights.size() &&
         std::fread(est.bias.data(), 8, est.bias.size(), f) == est.bias.size();
  }
  std::fclose(f);
  require(ok, "load_lr_estimator: '" + path + "' is not a valid estimator file");
  return est;
}

}  // namespace cda
