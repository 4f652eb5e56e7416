// SPDX-License-Identifier: Apache-2.0
#include "cda/landmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "cda/rng.hpp"
#include "json.hpp"

namespace cda {

SvmModel train_sp_svm(const std::vector<SuperpixelFeature>& features,
                      const std::vector<int32_t>& labels, int num_classes, double lambda,
                      int epochs, uint64_t seed) {
  require(!features.empty(), "train_sp_svm: empty training set");
  require(features.size() == labels.size(), "train_sp_svm: size mismatch");
  require(num_classes >= 2, "train_sp_svm: need at least 2 classes");
  const size_t n = features.size();
  const int dim = kSuperpixelFeatureDim;
  for (int32_t lab : labels)
    require(lab >= 0 && lab < num_classes, "train_sp_svm: label out of range");

  SvmModel model;
  model.c = num_classes;
  model.lambda = lambda;
  model.trained_epochs = epochs;
  model.feat_mean.assign(dim, 0.0);
  model.feat_std.assign(dim, 0.0);
  for (const auto& f : features)
    for (int d = 0; d < dim; ++d) model.feat_mean[d] += f.v[d];
  for (int d = 0; d < dim; ++d) model.feat_mean[d] /= static_cast<double>(n);
  for (const auto& f : features)
    for (int d = 0; d < dim; ++d) {
      const double diff = f.v[d] - model.feat_mean[d];
      model.feat_std[d] += diff * diff;
    }
  for (int d = 0; d < dim; ++d) {
    model.feat_std[d] = std::sqrt(model.feat_std[d] / static_cast<double>(n));
    if (model.feat_std[d] < 1e-12) model.feat_std[d] = 1.0;
  }

  std::vector<double> x(static_cast<size_t>(n) * dim);
  for (size_t i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d)
      x[i * dim + d] = (features[i].v[d] - model.feat_mean[d]) / model.feat_std[d];

  model.weights.assign(static_cast<size_t>(num_classes) * dim, 0.0);
  model.bias.assign(num_classes, 0.0);
  SplitMix64 rng(seed);

  std::vector<bool> present(num_classes, false);
  for (int32_t lab : labels) present[lab] = true;
  for (int cls = 0; cls < num_classes; ++cls)
    if (!present[cls])
      std::fprintf(stderr,
                   "train_sp_svm: warning: class %d absent from the training labels; its "
                   "binary problem is degenerate\n",
                   cls);

  const int64_t steps = static_cast<int64_t>(epochs) * static_cast<int64_t>(n);
  for (int cls = 0; cls < num_classes; ++cls) {
    double* w = model.weights.data() + static_cast<size_t>(cls) * dim;
    double b = 0.0;
    for (int64_t t = 1; t <= steps; ++t) {
      const size_t i = rng.next_below(n);  // (u mod n) so duplicated sets share schedules
      const double y = labels[i] == cls ? 1.0 : -1.0;
      const double* xi = x.data() + i * dim;
      double margin = b;
      for (int d = 0; d < dim; ++d) margin += w[d] * xi[d];
      margin *= y;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double scale = 1.0 - 1.0 / static_cast<double>(t);  // (1 - eta*lambda)
      for (int d = 0; d < dim; ++d) w[d] *= scale;
      if (margin < 1.0) {
        for (int d = 0; d < dim; ++d) w[d] += eta * y * xi[d];
        b += eta * y;
      }
    }
    model.bias[cls] = b;
  }
  return model;
}

std::pair<int32_t, double> classify_sp(const SvmModel& model, const SuperpixelFeature& feature) {
  require(model.c >= 2, "classify_sp: model not trained");
  int32_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int cls = 0; cls < model.c; ++cls) {
    double v = model.bias[cls];
    const double* w = model.weights.data() + static_cast<size_t>(cls) * model.dim;
    for (int d = 0; d < model.dim; ++d)
      v += w[d] * (feature.v[d] - model.feat_mean[d]) / model.feat_std[d];
    if (v > best_v) {
      best_v = v;
      best = cls;
    }
  }
  return {best, best_v};
}

LandmarkSet select_landmarks(const std::vector<std::vector<ScoredSuperpixel>>& scored,
                             double ratio, int num_classes, bool per_image) {
  require(ratio > 0.0 && ratio <= 1.0, "select_landmarks: ratio must be in (0,1]");
  LandmarkSet set;
  set.per_image.resize(scored.size());

  const auto make_landmark = [&](const ScoredSuperpixel& s) {
    Landmark lm;
    lm.sp_id = s.sp_id;
    lm.class_id = s.class_id;
    lm.confidence = s.confidence;
    lm.dist = LabelDistribution(num_classes);
    lm.dist.p[s.class_id] = 1.0;
    return lm;
  };
  // ceil with a tiny slack so ratio*n that is an exact integer in real
  // arithmetic is not bumped up by floating-point noise.
  const auto take_count = [&](size_t n) {
    return std::min(n, static_cast<size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9)));
  };

  if (per_image) {
    for (size_t img = 0; img < scored.size(); ++img) {
      std::vector<ScoredSuperpixel> pool = scored[img];
      std::stable_sort(pool.begin(), pool.end(),
                       [](const ScoredSuperpixel& a, const ScoredSuperpixel& b) {
                         if (a.confidence != b.confidence) return a.confidence > b.confidence;
                         return a.sp_id < b.sp_id;
                       });
      const size_t keep = take_count(pool.size());
      for (size_t i = 0; i < keep; ++i) set.per_image[img].push_back(make_landmark(pool[i]));
    }
  } else {
    std::vector<std::pair<size_t, ScoredSuperpixel>> pool;
    for (size_t img = 0; img < scored.size(); ++img)
      for (const ScoredSuperpixel& s : scored[img]) pool.emplace_back(img, s);
    require(!pool.empty(), "select_landmarks: empty superpixel pool");
    std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
      if (a.second.confidence != b.second.confidence)
        return a.second.confidence > b.second.confidence;
      if (a.first != b.first) return a.first < b.first;
      return a.second.sp_id < b.second.sp_id;
    });
    const size_t keep = take_count(pool.size());
    for (size_t i = 0; i < keep; ++i)
      set.per_image[pool[i].first].push_back(make_landmark(pool[i].second));
  }

  for (auto& v : set.per_image)
    std::sort(v.begin(), v.end(), [](const Landmark& a, const Landmark& b) {
      return a.sp_id < b.sp_id;
    });
  return set;
}

namespace {
constexpr char kSvmTag[4] = {'S', 'V', 'M', 'M'};
}

void save_svm(const std::string& path, const SvmModel& model) {
  FILE* f = std::fopen(path.c_str(), "wb");
  require(f != nullptr, "save_svm: cannot open '" + path + "'");
  const char magic[5] = {'C', 'D', 'A', '1', 1};
  std::fwrite(magic, 1, 5, f);
  std::fwrite(kSvmTag, 1, 4, f);
  const uint32_t dims[3] = {static_cast<uint32_t>(model.dim), static_cast<uint32_t>(model.c),
                            static_cast<uint32_t>(model.trained_epochs)};
  std::fwrite(dims, 4, 3, f);
  std::fwrite(&model.lambda, 8, 1, f);
  std::fwrite(model.feat_mean.data(), 8, model.feat_mean.size(), f);
  std::fwrite(model.feat_std.data(), 8, model.feat_std.size(), f);
  std::fwrite(model.weights.data(), 8, model.weights.size(), f);
  std::fwrite(model.bias.data(), 8, model.bias.size(), f);
  std::fclose(f);
}

SvmModel load_svm(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  require(f != nullptr, "load_svm: cannot open '" + path + "'");
  char head[9];
  bool ok = std::fread(head, 1, 9, f) == 9 && std::memcmp(head, "CDA1\x01", 5) == 0 &&
            std::memcmp(head + 5, kSvmTag, 4) == 0;
  uint32_t dims[3] = {0, 0, 0};
  ok = ok && std::fread(dims, 4, 3, f) == 3 && dims[0] == kSuperpixelFeatureDim && dims[1] >= 2;
  SvmModel model;
  if (ok) {
    model.dim = static_cast<int>(dims[0]);
    model.c = static_cast<int>(dims[1]);
    model.trained_epochs = static_cast<int>(dims[2]);
    model.feat_mean.resize(model.dim);
    model.feat_std.resize(model.dim);
    model.weights.resize(static_cast<size_t>(model.c) * model.dim);
    model.bias.resize(model.c);
    ok = std::fread(&model.lambda, 8, 1, f) == 1 &&
         std::fread(model.feat_mean.data(), 8, model.feat_mean.size(), f) ==
             model.feat_mean.size() &&
         std::fread(model.feat_std.data(), 8, model.feat_std.size(), f) ==
             model.feat_std.size() &&
         std::fread(model.weights.data(), 8, model.weights.size(), f) == model.weights.size() &&
         std::fread(model.bias.data(), 8, model.bias.size(), f) == model.bias.size();
  }
  std::fclose(f);
  require(ok, "load_svm: '" + path + "' is not a valid SVM file");
  return model;
}

void save_landmarks_json(const std::string& path, const LandmarkSet& set) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& image_list : set.per_image) {
    nlohmann::json img = nlohmann::json::array();
    for (const Landmark& lm : image_list)
      img.push_back({{"sp_id", lm.sp_id}, {"class", lm.class_id}, {"confidence", lm.confidence}});
    j.push_back(img);
  }
  std::ofstream out(path);
  require(out.good(), "save_landmarks_json: cannot open '" + path + "'");
  out << j.dump(1) << "\n";
}

LandmarkSet load_landmarks_json(const std::string& path, int num_classes) {
  std::ifstream in(path);
  require(in.good(), "load_landmarks_json: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  LandmarkSet set;
  for (const auto& img : j) {
    std::vector<Landmark> list;
    for (const auto& e : img) {
      Landmark lm;
      lm.sp_id = e.at("sp_id").get<int32_t>();
      lm.class_id = e.at("class").get<int32_t>();
      lm.confidence = e.at("confidence").get<double>();
      require(lm.class_id >= 0 && lm.class_id < num_classes,
              "load_landmarks_json: class id out of range");
      lm.dist = LabelDistribution(num_classes);
      lm.dist.p[lm.class_id] = 1.0;
      list.push_back(std::move(lm));
    }
    set.per_image.push_back(std::move(list));
  }
  return set;
}

}  // namespace cda
