// SPDX-License-Identifier: Apache-2.0
#include "cda/dataset_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cda/tensor_io.hpp"
#include "json.hpp"

namespace cda {
namespace {

std::string scene_path(const std::string& dir, int id, const char* what) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05d_%s.cda", id, what);
  return dir + "/" + buf;
}

nlohmann::json params_to_json(const DomainParams& p) {
  return {{"tint", p.tint},
          {"noise_sigma", p.noise_sigma},
          {"horizon_mean", p.horizon_mean},
          {"horizon_std", p.horizon_std},
          {"road_width_mean", p.road_width_mean},
          {"road_width_std", p.road_width_std},
          {"object_density", p.object_density},
          {"texture_freq", p.texture_freq}};
}

DomainParams params_from_json(const nlohmann::json& j) {
  DomainParams p;
  for (int c = 0; c < 3; ++c) p.tint[c] = j.at("tint")[c].get<double>();
  p.noise_sigma = j.at("noise_sigma").get<double>();
  p.horizon_mean = j.at("horizon_mean").get<double>();
  p.horizon_std = j.at("horizon_std").get<double>();
  p.road_width_mean = j.at("road_width_mean").get<double>();
  p.road_width_std = j.at("road_width_std").get<double>();
  p.object_density = j.at("object_density").get<double>();
  p.texture_freq = j.at("texture_freq").get<double>();
  return p;
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  require(!ds.scenes.empty(), "save_dataset: empty dataset");
  const int w = ds.scenes.front().image.w, h = ds.scenes.front().image.h;

  nlohmann::json manifest = {
      {"seed", ds.seed},
      {"count", ds.scenes.size()},
      {"width", w},
      {"height", h},
      {"class_names", ds.class_names},
      {"domain", ds.scenes.front().domain == Domain::kSource ? "source" : "target"},
      {"params", params_to_json(ds.params)},
  };
  std::ofstream out(dir + "/manifest.json");
  require(out.good(), "save_dataset: cannot write manifest in '" + dir + "'");
  out << manifest.dump(1) << "\n";

  for (const Scene& s : ds.scenes) {
    save_tensor(scene_path(dir, s.id, "image"),
                {static_cast<uint32_t>(h), static_cast<uint32_t>(w), 3}, s.image.px);
    save_tensor(scene_path(dir, s.id, "mask"),
                {static_cast<uint32_t>(h), static_cast<uint32_t>(w)}, s.mask.ids);
  }
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  require(in.good(), "load_dataset: cannot open '" + dir + "/manifest.json'");
  nlohmann::json manifest;
  in >> manifest;

  Dataset ds;
  ds.seed = manifest.at("seed").get<uint64_t>();
  ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();
  ds.params = params_from_json(manifest.at("params"));
  const int count = manifest.at("count").get<int>();
  const int w = manifest.at("width").get<int>();
  const int h = manifest.at("height").get<int>();
  const Domain domain =
      manifest.at("domain").get<std::string>() == "source" ? Domain::kSource : Domain::kTarget;

  ds.scenes.resize(count);
  for (int i = 0; i < count; ++i) {
    Scene& s = ds.scenes[i];
    s.id = i;
    s.domain = domain;
    const LoadedTensor img = load_tensor(scene_path(dir, i, "image"));
    require(img.dtype == Dtype::kF64 && img.dims.size() == 3 &&
                img.dims[0] == static_cast<uint32_t>(h) &&
                img.dims[1] == static_cast<uint32_t>(w) && img.dims[2] == 3,
            "load_dataset: unexpected image tensor shape for scene " + std::to_string(i));
    s.image = Image(w, h);
    s.image.px = img.f64;
    const LoadedTensor mask = load_tensor(scene_path(dir, i, "mask"));
    require(mask.dtype == Dtype::kI32 && mask.dims.size() == 2 &&
                mask.dims[0] == static_cast<uint32_t>(h) &&
                mask.dims[1] == static_cast<uint32_t>(w),
            "load_dataset: unexpected mask tensor shape for scene " + std::to_string(i));
    s.mask = LabelMask(w, h);
    s.mask.ids = mask.i32;
  }
  return ds;
}

}  // namespace cda
