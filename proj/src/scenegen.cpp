// SPDX-License-Identifier: Apache-2.0
#include "cda/scenegen.hpp"

#include <algorithm>
#include <cmath>

#include "cda/fastmath.hpp"
#include "cda/rng.hpp"

namespace cda {
namespace {

// Base color per class, every channel kept <= 0.88 so texture modulation
// cannot clip at neutral tint. Road and sidewalk are placed so that the
// TargetLike tint pushes road toward the source sidewalk color, which is the
// cross-domain confusion the adaptation has to repair.
constexpr double kBaseColor[kNumClasses][3] = {
    {0.40, 0.33, 0.31},  // road
    {0.33, 0.35, 0.33},  // sidewalk
    {0.62, 0.72, 0.86},  // sky
    {0.56, 0.42, 0.30},  // building
    {0.22, 0.32, 0.62},  // car
    {0.22, 0.48, 0.20},  // vegetation
    {0.14, 0.14, 0.15},  // pole
    {0.74, 0.28, 0.22},  // pedestrian
};

// Texture amplitude per class: band classes stay flat so the tint shift is
// the dominant cue, structures carry stronger texture.
constexpr double kTexAmp[kNumClasses] = {0.05, 0.05, 0.03, 0.12, 0.06, 0.12, 0.02, 0.06};
constexpr double kTexPhase[kNumClasses] = {0.0, 1.3, 2.1, 3.4, 4.2, 5.0, 0.7, 2.8};

constexpr double kTwoPi = 6.283185307179586;

// Randomized rounding: E[count] = density, using one uniform draw.
int sample_count(SplitMix64& rng, double density) {
  const double base = std::floor(density);
  const double frac = density - base;
  return static_cast<int>(base) + (rng.next_double() < frac ? 1 : 0);
}

void check_params(const DomainParams& p) {
  for (double t : p.tint) require(t > 0.0 && t <= 2.0, "DomainParams: tint gains must be in (0,2]");
  require(p.noise_sigma >= 0.0 && p.noise_sigma <= 0.2,
          "DomainParams: noise_sigma must be in [0,0.2]");
  require(p.horizon_mean > 0.1 && p.horizon_mean < 0.6,
          "DomainParams: horizon_mean must be in (0.1,0.6)");
  require(p.object_density >= 0.0, "DomainParams: object_density must be >= 0");
  require(p.texture_freq > 0.0, "DomainParams: texture_freq must be > 0");
}

struct Layout {
  int horizon_y;   // first building row
  int road_top;    // first road row
  int sw_left;     // sidewalk strip width, left
  int sw_right;    // sidewalk strip width, right
};

Layout sample_layout(SplitMix64& rng, const DomainParams& p, int w, int h) {
  Layout lay{};
  const double hz = std::clamp(p.horizon_mean + p.horizon_std * rng.next_gaussian(), 0.12, 0.58);
  lay.horizon_y = std::max(1, static_cast<int>(std::floor(hz * h + 0.5)));
  const double rw =
      std::clamp(p.road_width_mean + p.road_width_std * rng.next_gaussian(), 0.12, 0.45);
  const int road_h = std::max(3, static_cast<int>(std::floor(rw * h + 0.5)));
  lay.road_top = std::max(lay.horizon_y + 3, h - road_h);
  lay.sw_left = std::max(2, static_cast<int>(std::floor(rng.next_range(0.10, 0.20) * w + 0.5)));
  lay.sw_right = std::max(2, static_cast<int>(std::floor(rng.next_range(0.10, 0.20) * w + 0.5)));
  return lay;
}

void paint_rect(LabelMask& mask, std::vector<double>& jitter, int x0, int y0, int rw, int rh,
                int32_t cls, double j) {
  const int x1 = std::min(mask.w, x0 + rw);
  const int y1 = std::min(mask.h, y0 + rh);
  for (int y = std::max(0, y0); y < y1; ++y)
    for (int x = std::max(0, x0); x < x1; ++x) {
      mask.at(y, x) = cls;
      jitter[static_cast<size_t>(y) * mask.w + x] = j;
    }
}

}  // namespace

const std::vector<std::string>& class_names() {
  static const std::vector<std::string> names = {"road", "sidewalk",   "sky",  "building",
                                                 "car",  "vegetation", "pole", "pedestrian"};
  return names;
}

DomainParams default_domain_params(DomainKind kind) {
  DomainParams p;
  if (kind == DomainKind::kSourceLike) {
    p.tint = {1.0, 1.0, 1.0};
    p.noise_sigma = 0.01;
    p.horizon_mean = 0.30;
    p.road_width_mean = 0.28;
    p.texture_freq = 6.0;
  } else {
    p.tint = {0.85, 1.05, 0.90};
    p.noise_sigma = 0.05;
    p.horizon_mean = 0.38;
    p.road_width_mean = 0.34;  // wider roads
    p.texture_freq = 9.0;
  }
  return p;
}

Scene generate_scene(uint64_t dataset_seed, int index, const DomainParams& params, int w, int h,
                     int c, Domain domain) {
  require(w >= 16 && h >= 16, "generate_scene: W and H must be >= 16");
  require(c == kNumClasses, "generate_scene: the class set is fixed at 8 classes");
  check_params(params);

  SplitMix64 rng(mix_seed(dataset_seed, static_cast<uint64_t>(index)));
  Scene scene;
  scene.id = index;
  scene.domain = domain;
  scene.mask = LabelMask(w, h);
  scene.image = Image(w, h);
  std::vector<double> jitter(static_cast<size_t>(w) * h, 1.0);

  const Layout lay = sample_layout(rng, params, w, h);
  LabelMask& mask = scene.mask;

  // Painter order: sky, building, vegetation, road, sidewalk, car,
  // pedestrian, pole. Later painters overwrite earlier ones.
  for (int y = 0; y < lay.horizon_y; ++y)
    for (int x = 0; x < w; ++x) mask.at(y, x) = kSky;
  for (int y = lay.horizon_y; y < lay.road_top; ++y)
    for (int x = 0; x < w; ++x) mask.at(y, x) = kBuilding;

  const int n_veg = sample_count(rng, params.object_density);
  for (int i = 0; i < n_veg; ++i) {
    const double cx = rng.next_range(0.0, w);
    const double cy = rng.next_range(lay.horizon_y, lay.road_top);
    const double rx = std::max(2.0, rng.next_range(0.04, 0.10) * w);
    const double ry = std::max(2.0, rng.next_range(0.03, 0.08) * h);
    const double j = rng.next_range(0.85, 1.15);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
    const int y1 = std::min(h - 1, static_cast<int>(std::floor(cy + ry)));
    for (int y = y0; y <= y1; ++y) {
      const double dy = (y - cy) / ry;
      const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(cx + rx)));
      for (int x = x0; x <= x1; ++x) {
        const double dx = (x - cx) / rx;
        if (dx * dx + dy * dy <= 1.0) {
          mask.at(y, x) = kVegetation;
          jitter[static_cast<size_t>(y) * w + x] = j;
        }
      }
    }
  }

  for (int y = lay.road_top; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      mask.at(y, x) = kRoad;
      jitter[static_cast<size_t>(y) * w + x] = 1.0;
    }
  for (int y = lay.road_top; y < h; ++y) {
    for (int x = 0; x < lay.sw_left; ++x) mask.at(y, x) = kSidewalk;
    for (int x = w - lay.sw_right; x < w; ++x) mask.at(y, x) = kSidewalk;
  }

  const int n_car = sample_count(rng, params.object_density);
  for (int i = 0; i < n_car; ++i) {
    const int cw = std::max(3, static_cast<int>(rng.next_range(0.08, 0.16) * w));
    const int ch = std::max(2, static_cast<int>(rng.next_range(0.05, 0.10) * h));
    const int xlo = lay.sw_left;
    const int xhi = std::max(xlo + 1, w - lay.sw_right - cw);
    const int x0 = xlo + static_cast<int>(rng.next_below(static_cast<uint64_t>(xhi - xlo)));
    const int yhi = std::max(lay.road_top + 1, h - ch);
    const int y0 =
        lay.road_top + static_cast<int>(rng.next_below(static_cast<uint64_t>(yhi - lay.road_top)));
    const double j = rng.next_range(0.85, 1.15);
    paint_rect(mask, jitter, x0, y0, cw, ch, kCar, j);
  }

  const int n_ped = sample_count(rng, params.object_density);
  for (int i = 0; i < n_ped; ++i) {
    const bool left = rng.next_double() < 0.5;
    const int pw = 1 + static_cast<int>(rng.next_below(2));
    const int ph = 3 + static_cast<int>(rng.next_below(4));
    const int strip_w = left ? lay.sw_left : lay.sw_right;
    const int base_x = left ? 0 : w - lay.sw_right;
    const int xspan = std::max(1, strip_w - pw);
    const int x0 = base_x + static_cast<int>(rng.next_below(static_cast<uint64_t>(xspan)));
    const int yhi = std::max(lay.road_top + 1, h - ph);
    const int y0 =
        lay.road_top + static_cast<int>(rng.next_below(static_cast<uint64_t>(yhi - lay.road_top)));
    const double j = rng.next_range(0.85, 1.15);
    paint_rect(mask, jitter, x0, y0, pw, ph, kPedestrian, j);
  }

  const int n_pole = sample_count(rng, params.object_density);
  for (int i = 0; i < n_pole; ++i) {
    const int pw = 1 + static_cast<int>(rng.next_below(2));
    const int x0 = static_cast<int>(rng.next_below(static_cast<uint64_t>(std::max(1, w - pw))));
    const int top = lay.horizon_y +
                    static_cast<int>(rng.next_below(
                        static_cast<uint64_t>(std::max(1, lay.road_top - lay.horizon_y))));
    const int len = static_cast<int>(rng.next_range(0.15, 0.40) * h);
    paint_rect(mask, jitter, x0, top, pw, len, kPole, 1.0);
  }

  // Render: per-class base color, sinusoidal texture, instance jitter, then
  // tint; noise afterwards; clip last.
  Image& img = scene.image;
  const double inv_span = 1.0 / std::max(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int32_t cls = mask.at(y, x);
      const double tex =
          1.0 + kTexAmp[cls] * portable_sin(kTwoPi * params.texture_freq * (x + 0.7 * y) * inv_span +
                                            kTexPhase[cls]);
      const double j = jitter[static_cast<size_t>(y) * w + x];
      for (int ch = 0; ch < 3; ++ch)
        img.at(y, x, ch) = kBaseColor[cls][ch] * j * tex * params.tint[ch];
    }

  if (params.noise_sigma > 0.0) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < 3; ++ch)
          img.at(y, x, ch) += params.noise_sigma * rng.next_gaussian();
  }
  for (double& v : img.px) v = std::clamp(v, 0.0, 1.0);
  return scene;
}

Dataset generate_dataset(uint64_t seed, const DomainParams& params, int count, int w, int h,
                         Domain domain) {
  require(count >= 1, "generate_dataset: count must be >= 1");
  Dataset ds;
  ds.seed = seed;
  ds.params = params;
  ds.class_names = class_names();
  ds.scenes.resize(count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i)
    ds.scenes[i] = generate_scene(seed, i, params, w, h, kNumClasses, domain);
  return ds;
}

}  // namespace cda
