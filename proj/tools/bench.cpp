// SPDX-License-Identifier: Apache-2.0
//
// Times the OpenMP kernels against the serial reference implementations and
// reports one full network forward+backward per image, the numbers that
// bound experiment-grid wall time.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "cda/kernels.hpp"
#include "cda/rng.hpp"
#include "cda/scenegen.hpp"
#include "cda/segmodel.hpp"

using namespace cda;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> random_vec(size_t n, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_gaussian();
  return v;
}

template <class F>
double time_op(F&& op, int reps) {
  op();  // warm up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) op();
  return seconds_since(t0) / reps;
}

void bench_conv(int w, int h, int cin, int cout, int reps) {
  const auto in = random_vec(static_cast<size_t>(w) * h * cin, 1);
  const auto wgt = random_vec(9 * cin * cout, 2);
  const auto bias = random_vec(cout, 3);
  std::vector<double> out(static_cast<size_t>(w) * h * cout);
  std::vector<double> din(in.size()), dwgt(wgt.size()), dbias(cout);

  const double flops_fwd = 2.0 * 9 * cin * cout * w * h;
  const double t_par = time_op(
      [&] { kern::conv3x3_forward(in.data(), w, h, cin, wgt.data(), bias.data(), cout, out.data()); },
      reps);
  const double t_ser = time_op(
      [&] { ref::conv3x3_forward(in.data(), w, h, cin, wgt.data(), bias.data(), cout, out.data()); },
      reps);
  std::printf(
      "conv3x3 %3dx%-3d %2d->%-2d fwd   omp %8.1f us (%6.2f GF/s)   serial %8.1f us (%6.2f GF/s)\n",
      w, h, cin, cout, t_par * 1e6, flops_fwd / t_par * 1e-9, t_ser * 1e6,
      flops_fwd / t_ser * 1e-9);

  const double t_bwd_par = time_op(
      [&] {
        kern::conv3x3_backward_data(out.data(), w, h, cout, wgt.data(), cin, din.data());
        kern::conv3x3_backward_weights(in.data(), out.data(), w, h, cin, cout, dwgt.data(),
                                       dbias.data());
      },
      reps);
  const double t_bwd_ser = time_op(
      [&] {
        ref::conv3x3_backward_data(out.data(), w, h, cout, wgt.data(), cin, din.data());
        ref::conv3x3_backward_weights(in.data(), out.data(), w, h, cin, cout, dwgt.data(),
                                      dbias.data());
      },
      reps);
  std::printf(
      "conv3x3 %3dx%-3d %2d->%-2d bwd   omp %8.1f us (%6.2f GF/s)   serial %8.1f us (%6.2f GF/s)\n",
      w, h, cin, cout, t_bwd_par * 1e6, 2.0 * flops_fwd / t_bwd_par * 1e-9, t_bwd_ser * 1e6,
      2.0 * flops_fwd / t_bwd_ser * 1e-9);
}

void bench_train_step(int w, int h, int f, int batch, int reps) {
  const DomainParams p = default_domain_params(DomainKind::kSourceLike);
  const Dataset ds = generate_dataset(1, p, batch, w, h);
  const ModelParams params = init_model(f, kNumClasses, 7);
  std::vector<LossItem> items;
  for (const Scene& s : ds.scenes) {
    LossItem item;
    item.image = &s.image;
    item.mask = &s.mask;
    item.ce_weight = 1.0 / batch;
    items.push_back(item);
  }
  std::vector<double> grad;
  const double t = time_op([&] { backward(params, items, grad); }, reps);
  std::printf("train step  %dx%d F=%d batch=%d: %7.2f ms  (%.2f ms/image)\n", w, h, f, batch,
              t * 1e3, t * 1e3 / batch);
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;

  std::printf("threads: %d\n", omp_get_max_threads());
  const int reps = quick ? 3 : 50;
  bench_conv(64, 64, 3, 8, reps);
  bench_conv(64, 64, 8, 8, reps);
  bench_conv(128, 128, 8, 8, quick ? 2 : 20);
  bench_train_step(64, 64, 8, 15, quick ? 2 : 20);
  bench_train_step(64, 64, 8, 10, quick ? 2 : 20);
  return 0;
}
