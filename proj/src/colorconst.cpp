// SPDX-License-Identifier: Apache-2.0
#include "cda/colorconst.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace cda {

ColorStats fit_color_stats(const std::vector<Image>& images) {
  require(!images.empty(), "fit_color_stats: empty image list");
  size_t total = 0;
  for (const Image& img : images) total += img.pixels();

  ColorStats stats;
  std::vector<double> channel(total);
  for (int c = 0; c < 3; ++c) {
    size_t at = 0;
    double sum = 0.0;
    for (const Image& img : images)
      for (size_t px = 0; px < img.pixels(); ++px) {
        const double v = img.px[px * 3 + c];
        channel[at++] = v;
        sum += v;
      }
    stats.mean[c] = sum / static_cast<double>(total);
    std::sort(channel.begin(), channel.end());
    const double pos = 0.95 * static_cast<double>(total - 1);
    const size_t lo = static_cast<size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    stats.p95[c] = lo + 1 < total ? channel[lo] * (1.0 - frac) + channel[lo + 1] * frac
                                  : channel[lo];
  }
  return stats;
}

Image calibrate(const Image& image, const ColorStats& image_stats, const ColorStats& ref_stats) {
  double gain[3];
  for (int c = 0; c < 3; ++c) {
    require(image_stats.mean[c] > 0.0, "calibrate: zero-mean channel (degenerate image set)");
    gain[c] = std::clamp(ref_stats.mean[c] / image_stats.mean[c], 0.25, 4.0);
  }
  Image out(image.w, image.h);
  for (size_t px = 0; px < image.pixels(); ++px)
    for (int c = 0; c < 3; ++c)
      out.px[px * 3 + c] = std::clamp(image.px[px * 3 + c] * gain[c], 0.0, 1.0);
  return out;
}

void save_color_stats_json(const std::string& path, const ColorStats& stats) {
  nlohmann::json j = {{"mean", stats.mean}, {"p95", stats.p95}};
  std::ofstream out(path);
  require(out.good(), "save_color_stats_json: cannot open '" + path + "'");
  out << j.dump(1) << "\n";
}

ColorStats load_color_stats_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_color_stats_json: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  ColorStats stats;
  for (int c = 0; c < 3; ++c) {
    stats.mean[c] = j.at("mean")[c].get<double>();
    stats.p95[c] = j.at("p95")[c].get<double>();
  }
  return stats;
}

}  // namespace cda
