// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <omp.h>

#include <cmath>
#include <vector>

#include "cda/kernels.hpp"
#include "cda/rng.hpp"
#include "doctest.h"

using namespace cda;

namespace {

std::vector<double> random_vec(size_t n, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_gaussian();
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("conv3x3 forward matches the serial reference") {
  const int w = 17, h = 13, cin = 3, cout = 8;
  const auto in = random_vec(static_cast<size_t>(w) * h * cin, 1);
  const auto wgt = random_vec(9 * cin * cout, 2);
  const auto bias = random_vec(cout, 3);
  std::vector<double> out_k(static_cast<size_t>(w) * h * cout), out_r(out_k.size());
  kern::conv3x3_forward(in.data(), w, h, cin, wgt.data(), bias.data(), cout, out_k.data());
  ref::conv3x3_forward(in.data(), w, h, cin, wgt.data(), bias.data(), cout, out_r.data());
  CHECK(max_abs_diff(out_k, out_r) < 1e-12);
}

TEST_CASE("conv3x3 backward matches the serial reference") {
  const int w = 11, h = 9, cin = 4, cout = 5;
  const auto in = random_vec(static_cast<size_t>(w) * h * cin, 4);
  const auto wgt = random_vec(9 * cin * cout, 5);
  const auto dout = random_vec(static_cast<size_t>(w) * h * cout, 6);

  std::vector<double> din_k(in.size()), din_r(in.size());
  kern::conv3x3_backward_data(dout.data(), w, h, cout, wgt.data(), cin, din_k.data());
  ref::conv3x3_backward_data(dout.data(), w, h, cout, wgt.data(), cin, din_r.data());
  CHECK(max_abs_diff(din_k, din_r) < 1e-12);

  std::vector<double> dw_k(9 * cin * cout), db_k(cout), dw_r(dw_k.size()), db_r(cout);
  kern::conv3x3_backward_weights(in.data(), dout.data(), w, h, cin, cout, dw_k.data(),
                                 db_k.data());
  ref::conv3x3_backward_weights(in.data(), dout.data(), w, h, cin, cout, dw_r.data(),
                                db_r.data());
  CHECK(max_abs_diff(dw_k, dw_r) < 1e-11);
  CHECK(max_abs_diff(db_k, db_r) < 1e-11);
}

TEST_CASE("conv3x3 backward-data is the exact adjoint of forward") {
  // <conv(x), u> == <x, conv^T(u)> up to the bias term, random shapes.
  const int w = 14, h = 10, cin = 3, cout = 6;
  const auto x = random_vec(static_cast<size_t>(w) * h * cin, 7);
  const auto u = random_vec(static_cast<size_t>(w) * h * cout, 8);
  const auto wgt = random_vec(9 * cin * cout, 9);
  const std::vector<double> bias(cout, 0.0);

  std::vector<double> ax(static_cast<size_t>(w) * h * cout);
  kern::conv3x3_forward(x.data(), w, h, cin, wgt.data(), bias.data(), cout, ax.data());
  std::vector<double> atu(static_cast<size_t>(w) * h * cin);
  kern::conv3x3_backward_data(u.data(), w, h, cout, wgt.data(), cin, atu.data());

  double lhs = 0.0, rhs = 0.0;
  for (size_t i = 0; i < ax.size(); ++i) lhs += ax[i] * u[i];
  for (size_t i = 0; i < x.size(); ++i) rhs += x[i] * atu[i];
  CHECK(std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)) < 1e-12);
}

TEST_CASE("kernel outputs are identical across thread counts") {
  const int w = 33, h = 21, cin = 5, cout = 7;
  const auto in = random_vec(static_cast<size_t>(w) * h * cin, 10);
  const auto wgt = random_vec(9 * cin * cout, 11);
  const auto bias = random_vec(cout, 12);
  const auto dout = random_vec(static_cast<size_t>(w) * h * cout, 13);

  const int saved = omp_get_max_threads();
  std::vector<std::vector<double>> outs, dws;
  for (int threads : {1, 3, 7}) {
    omp_set_num_threads(threads);
    std::vector<double> out(static_cast<size_t>(w) * h * cout);
    kern::conv3x3_forward(in.data(), w, h, cin, wgt.data(), bias.data(), cout, out.data());
    outs.push_back(std::move(out));
    std::vector<double> dw(9 * cin * cout + cout);
    kern::conv3x3_backward_weights(in.data(), dout.data(), w, h, cin, cout, dw.data(),
                                   dw.data() + 9 * cin * cout);
    dws.push_back(std::move(dw));
  }
  omp_set_num_threads(saved);
  for (size_t i = 1; i < outs.size(); ++i) {
    CHECK(outs[i] == outs[0]);  // bit-identical
    CHECK(dws[i] == dws[0]);
  }
}

TEST_CASE("softmax rows are simplexes and match the reference") {
  const int npx = 257, ch = 8;
  const auto logits = random_vec(static_cast<size_t>(npx) * ch, 14);
  std::vector<double> sm_k(logits.size()), sm_r(logits.size());
  kern::softmax_pixels(logits.data(), npx, ch, sm_k.data());
  ref::softmax_pixels(logits.data(), npx, ch, sm_r.data());
  CHECK(max_abs_diff(sm_k, sm_r) < 1e-12);
  for (int px = 0; px < npx; ++px) {
    double s = 0.0;
    for (int c = 0; c < ch; ++c) {
      CHECK(sm_k[px * ch + c] >= 0.0);
      s += sm_k[px * ch + c];
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("conv1x1 matches a hand-computed case") {
  // 2 pixels, cin=2, cout=1: out = b + x0*w0 + x1*w1
  const std::vector<double> in = {1.0, 2.0, -3.0, 0.5};
  const std::vector<double> wgt = {2.0, -1.0};
  const std::vector<double> bias = {0.25};
  std::vector<double> out(2);
  kern::conv1x1_forward(in.data(), 2, 2, wgt.data(), bias.data(), 1, out.data());
  CHECK(out[0] == doctest::Approx(0.25 + 2.0 - 2.0));
  CHECK(out[1] == doctest::Approx(0.25 - 6.0 - 0.5));
}

TEST_CASE("relu masks the backward pass by the pre-activation sign") {
  const std::vector<double> z = {-1.0, 0.0, 2.0};
  const std::vector<double> da = {5.0, 5.0, 5.0};
  std::vector<double> a(3), dz(3);
  kern::relu_forward(z.data(), 3, a.data());
  kern::relu_backward(z.data(), da.data(), 3, dz.data());
  CHECK(a == std::vector<double>{0.0, 0.0, 2.0});
  CHECK(dz == std::vector<double>{0.0, 0.0, 5.0});
}
