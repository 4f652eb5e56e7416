// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cda/tensor.hpp"

namespace cda {

// Procedural paired-domain urban scenes: layered band layout (sky / building
// / road with sidewalk strips) plus car, pedestrian, pole and vegetation
// instances, with a parameterized cross-domain shift in color, noise and
// layout priors.

constexpr int kNumClasses = 8;
enum ClassId : int32_t {
  kRoad = 0,
  kSidewalk = 1,
  kSky = 2,
  kBuilding = 3,
  kCar = 4,
  kVegetation = 5,
  kPole = 6,
  kPedestrian = 7,
};
const std::vector<std::string>& class_names();

enum class Domain { kSource, kTarget };
enum class DomainKind { kSourceLike, kTargetLike };

struct DomainParams {
  std::array<double, 3> tint{1.0, 1.0, 1.0};  // per-channel gains, (0,2]
  double noise_sigma = 0.01;                  // additive Gaussian std, [0,0.2]
  double horizon_mean = 0.30;                 // vertical horizon prior, fraction of H
  double horizon_std = 0.04;
  double road_width_mean = 0.28;  // road band height prior, fraction of H
  double road_width_std = 0.05;
  double object_density = 2.0;  // expected instances per class per image
  double texture_freq = 6.0;    // spatial frequency of the class textures
};

struct Scene {
  Image image;
  LabelMask mask;
  int id = 0;
  Domain domain = Domain::kSource;
};

struct Dataset {
  std::vector<Scene> scenes;
  std::vector<std::string> class_names;
  DomainParams params;
  uint64_t seed = 0;
};

DomainParams default_domain_params(DomainKind kind);

// Bit-deterministic in (seed, index, params, w, h); scenes are independent
// across indices so datasets can be generated in parallel.
Scene generate_scene(uint64_t dataset_seed, int index, const DomainParams& params, int w, int h,
                     int c = kNumClasses, Domain domain = Domain::kSource);

Dataset generate_dataset(uint64_t seed, const DomainParams& params, int count, int w, int h,
                         Domain domain = Domain::kSource);

}  // namespace cda
