// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

namespace cda {

// Dense kernels behind the segmentation network and its backward pass.
// Layouts are channels-last: buf[(y*w + x)*ch + c]. 3x3 convolutions use
// edge-replication padding; weights are stored [dy][dx][cin][cout] with cout
// contiguous, 1x1 weights are [cin][cout].
//
// cda::kern  — OpenMP-parallel implementations used by the library. Each
//              output element is produced by exactly one thread with a fixed
//              inner summation order, and multi-pass reductions (backward
//              weights) accumulate fixed row chunks in chunk order, so the
//              results are bit-identical for any thread count.
// cda::ref   — plain serial implementations kept as the test oracle and as
//              the baseline for the cda_bench comparison binary.

namespace kern {

void conv3x3_forward(const double* in, int w, int h, int cin, const double* wgt,
                     const double* bias, int cout, double* out);
void conv3x3_backward_data(const double* dout, int w, int h, int cout, const double* wgt,
                           int cin, double* din);
void conv3x3_backward_weights(const double* in, const double* dout, int w, int h, int cin,
                              int cout, double* dwgt, double* dbias);

void conv1x1_forward(const double* in, int npx, int cin, const double* wgt, const double* bias,
                     int cout, double* out);
void conv1x1_backward_data(const double* dout, int npx, int cout, const double* wgt, int cin,
                           double* din);
void conv1x1_backward_weights(const double* in, const double* dout, int npx, int cin, int cout,
                              double* dwgt, double* dbias);

void relu_forward(const double* z, size_t n, double* a);
// dz = (z > 0) ? da : 0
void relu_backward(const double* z, const double* da, size_t n, double* dz);

void softmax_pixels(const double* logits, size_t npx, int ch, double* out);
// dlogits from gradient w.r.t. the softmax output.
void softmax_backward(const double* sm, const double* dsm, size_t npx, int ch, double* dlogits);

bool all_finite(const double* p, size_t n);

}  // namespace kern

namespace ref {

void conv3x3_forward(const double* in, int w, int h, int cin, const double* wgt,
                     const double* bias, int cout, double* out);
void conv3x3_backward_data(const double* dout, int w, int h, int cout, const double* wgt,
                           int cin, double* din);
void conv3x3_backward_weights(const double* in, const double* dout, int w, int h, int cin,
                              int cout, double* dwgt, double* dbias);
void conv1x1_forward(const double* in, int npx, int cin, const double* wgt, const double* bias,
                     int cout, double* out);
void softmax_pixels(const double* logits, size_t npx, int ch, double* out);

}  // namespace ref

}  // namespace cda
