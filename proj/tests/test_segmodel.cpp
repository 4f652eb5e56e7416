// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "cda/rng.hpp"
#include "cda/scenegen.hpp"
#include "cda/segmodel.hpp"
#include "doctest.h"

using namespace cda;

namespace {

Image random_image(int w, int h, uint64_t seed) {
  Image img(w, h);
  SplitMix64 rng(seed);
  for (double& v : img.px) v = rng.next_double();
  return img;
}

LabelMask random_mask(int w, int h, int c, uint64_t seed) {
  LabelMask mask(w, h);
  SplitMix64 rng(seed);
  for (int32_t& id : mask.ids) id = static_cast<int32_t>(rng.next_below(c));
  return mask;
}

// Composite spec with every loss term active, the configuration the
// finite-difference suite certifies.
struct FdSetup {
  Image src_img, tgt_img;
  LabelMask src_mask;
  std::vector<LossItem> items;

  FdSetup(int w, int h, int c, uint64_t seed) {
    src_img = random_image(w, h, seed);
    src_mask = random_mask(w, h, c, seed + 1);
    tgt_img = random_image(w, h, seed + 2);

    LossItem src;
    src.image = &src_img;
    src.mask = &src_mask;
    src.ce_weight = 0.5;
    items.push_back(src);

    LossItem tgt;
    tgt.image = &tgt_img;
    tgt.sharpen_k = 6.0;
    RegionTarget img_term;
    img_term.target = LabelDistribution(c);
    SplitMix64 rng(seed + 3);
    double mass = 0.0;
    for (double& p : img_term.target.p) {
      p = 0.05 + rng.next_double();
      mass += p;
    }
    for (double& p : img_term.target.p) p /= mass;
    img_term.weight = 0.25;
    tgt.dists.push_back(img_term);

    RegionTarget sp_term;
    sp_term.target = LabelDistribution(c);
    sp_term.target.p[2] = 1.0;  // one-hot landmark
    for (int px = 0; px < w * h / 3; ++px) sp_term.pixels.push_back(px);
    sp_term.weight = 0.25;
    sp_term.superpixel_term = true;
    tgt.dists.push_back(sp_term);
    items.push_back(tgt);
  }
};

// Dense random parameters (biases included). init_model's zero biases leave
// exact softmax ties wherever ReLU zeroes every feature, and the sharpened
// distribution is not differentiable at a tie; gradients are checked at a
// generic point instead.
ModelParams random_params(int f, int c, uint64_t seed) {
  ModelParams p(f, c);
  SplitMix64 rng(seed);
  for (double& v : p.theta) v = 0.3 * rng.next_gaussian();
  return p;
}

double fd_max_rel_err(const ModelParams& params, const std::vector<LossItem>& items,
                      int n_coords, uint64_t seed, double h = 1e-4) {
  std::vector<double> grad;
  backward(params, items, grad);
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < n_coords; ++i) {
    const size_t j = rng.next_below(params.theta.size());
    ModelParams plus = params, minus = params;
    plus.theta[j] += h;
    minus.theta[j] -= h;
    const double fd = (composite_loss(plus, items) - composite_loss(minus, items)) / (2.0 * h);
    const double rel = std::abs(fd - grad[j]) / std::max(1e-6, std::abs(fd) + std::abs(grad[j]));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

TEST_CASE("init is deterministic with zero biases and He-scaled kernels") {
  const ModelParams a = init_model(8, 8, 5);
  const ModelParams b = init_model(8, 8, 5);
  CHECK(a.theta == b.theta);
  for (int i = 0; i < a.f; ++i) CHECK(a.conv1_b()[i] == 0.0);
  for (int i = 0; i < a.c; ++i) CHECK(a.head_b()[i] == 0.0);

  double var = 0.0;
  const int n = 27 * a.f;
  for (int i = 0; i < n; ++i) var += a.conv1_w()[i] * a.conv1_w()[i];
  const double stddev = std::sqrt(var / n);
  const double expected = std::sqrt(2.0 / 27.0);
  CHECK(stddev > 0.8 * expected);
  CHECK(stddev < 1.2 * expected);
}

TEST_CASE("zero parameters produce the uniform prediction") {
  const ModelParams zero(4, 8);
  const Image img = random_image(16, 16, 1);
  const SoftPred pred = forward(zero, img);
  for (double v : pred.p) CHECK(v == doctest::Approx(1.0 / 8).epsilon(1e-12));
}

TEST_CASE("predictions are per-pixel simplexes") {
  const ModelParams params = init_model(8, 8, 2);
  const Image img = random_image(32, 24, 3);
  const SoftPred pred = forward(params, img);
  for (size_t px = 0; px < pred.pixels(); ++px) {
    double s = 0.0;
    for (int c = 0; c < pred.c; ++c) {
      CHECK(pred.p[px * pred.c + c] >= 0.0);
      s += pred.p[px * pred.c + c];
    }
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("interior outputs translate with the input") {
  const int w = 24, h = 24;
  const ModelParams params = init_model(6, 8, 9);
  const Image img = random_image(w, h, 10);
  Image shifted(w, h);  // shift right by 1, replicating the left column
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) shifted.at(y, x, c) = img.at(y, std::max(0, x - 1), c);
  const SoftPred a = forward(params, img);
  const SoftPred b = forward(params, shifted);
  // 3 px boundary excluded: receptive field is 5x5 plus the shift.
  for (int y = 3; y < h - 3; ++y)
    for (int x = 3; x < w - 3; ++x)
      for (int c = 0; c < 8; ++c)
        CHECK(b.at(y, x, c) == doctest::Approx(a.at(y, x - 1, c)).epsilon(1e-9));
}

TEST_CASE("pixel CE matches hand values") {
  SoftPred onehot(2, 2, 3);
  LabelMask mask(2, 2);
  for (int px = 0; px < 4; ++px) {
    mask.ids[px] = px % 3;
    onehot.p[px * 3 + px % 3] = 1.0;
  }
  CHECK(pixel_ce_loss(onehot, mask) == doctest::Approx(0.0).epsilon(1e-12));

  SoftPred uniform(4, 4, 8);
  std::fill(uniform.p.begin(), uniform.p.end(), 1.0 / 8);
  const LabelMask umask = random_mask(4, 4, 8, 3);
  CHECK(pixel_ce_loss(uniform, umask) == doctest::Approx(std::log(8.0)).epsilon(1e-12));

  SoftPred tiny(1, 1, 2);
  tiny.p = {0.9, 0.1};
  LabelMask tmask(1, 1);
  tmask.ids = {0};
  CHECK(pixel_ce_loss(tiny, tmask) == doctest::Approx(0.105361).epsilon(1e-5));

  tmask.ids = {5};
  CHECK_THROWS_AS(pixel_ce_loss(tiny, tmask), Error);
}

TEST_CASE("gradient is linear in the loss weights") {
  const int w = 8, h = 8, c = 8;
  FdSetup setup(w, h, c, 77);
  const ModelParams params = init_model(4, c, 78);

  std::vector<LossItem> zeroed = setup.items;
  zeroed[0].ce_weight = 0.0;
  for (auto& rt : zeroed[1].dists) rt.weight = 0.0;
  std::vector<double> grad;
  backward(params, zeroed, grad);
  for (double g : grad) CHECK(g == 0.0);

  std::vector<double> g1, g2;
  backward(params, setup.items, g1);
  std::vector<LossItem> scaled = setup.items;
  const double gamma = 0.37;
  scaled[0].ce_weight *= gamma;
  for (auto& rt : scaled[1].dists) rt.weight *= gamma;
  backward(params, scaled, g2);
  for (size_t i = 0; i < g1.size(); ++i)
    CHECK(g2[i] == doctest::Approx(gamma * g1[i]).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
  const int w = 8, h = 8, c = 8;
  FdSetup setup(w, h, c, 100);
  const ModelParams params = init_model(4, c, 101);
  CHECK(fd_max_rel_err(params, setup.items, 100, 102) < 1e-4);
}

TEST_CASE("adadelta follows the update rule") {
  ModelParams params(2, 2);
  AdaDeltaState state(params.theta.size());
  const std::vector<double> zero(params.theta.size(), 0.0);
  const ModelParams before = params;
  adadelta_step(state, params, zero);
  CHECK(params.theta == before.theta);
  for (double v : state.eg2) CHECK(v == 0.0);

  std::vector<double> g(params.theta.size(), 0.0);
  g[3] = 1.0;
  adadelta_step(state, params, g);
  CHECK(params.theta[3] == doctest::Approx(-0.004472).epsilon(1e-3));
  CHECK(params.theta[0] == 0.0);
}

TEST_CASE("equilibrated update magnitude ignores loss rescaling") {
  // 500 identical-gradient steps for g and 10g; AdaDelta's unit correction
  // makes the final step sizes agree within 5%.
  const size_t n = 4;
  double last_small = 0.0, last_big = 0.0;
  for (const double scale : {1.0, 10.0}) {
    ModelParams params(1, 2);
    params.theta.assign(n, 0.0);
    AdaDeltaState state(n);
    std::vector<double> g(n, scale);
    double prev = 0.0;
    for (int step = 0; step < 500; ++step) {
      prev = params.theta[0];
      adadelta_step(state, params, g);
    }
    const double delta = std::abs(params.theta[0] - prev);
    (scale == 1.0 ? last_small : last_big) = delta;
  }
  CHECK(std::abs(last_small - last_big) / last_small < 0.05);
}

TEST_CASE("checkpoints round-trip bit-exactly, with and without state") {
  const std::string path = std::filesystem::temp_directory_path() / "cda_test_ckpt.bin";
  const ModelParams params = init_model(8, 8, 55);
  AdaDeltaState state(params.theta.size());
  SplitMix64 rng(56);
  for (double& v : state.eg2) v = rng.next_double();
  for (double& v : state.edx2) v = rng.next_double();

  save_checkpoint(path, params, &state);
  AdaDeltaState loaded_state;
  const ModelParams loaded = load_checkpoint(path, &loaded_state);
  CHECK(loaded.f == params.f);
  CHECK(loaded.c == params.c);
  CHECK(loaded.theta == params.theta);
  CHECK(loaded_state.eg2 == state.eg2);
  CHECK(loaded_state.edx2 == state.edx2);
  CHECK(loaded_state.rho == state.rho);

  save_checkpoint(path, params);
  const ModelParams bare = load_checkpoint(path);
  CHECK(bare.theta == params.theta);
  std::filesystem::remove(path);
}

TEST_CASE("forward aborts on non-finite parameters") {
  ModelParams params = init_model(4, 8, 1);
  params.theta[10] = std::numeric_limits<double>::quiet_NaN();
  const Image img = random_image(16, 16, 2);
  CHECK_THROWS_WITH_AS(forward(params, img), doctest::Contains("divergence"), Error);
}
