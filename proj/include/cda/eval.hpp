// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cda/labeldist.hpp"
#include "cda/tensor.hpp"

namespace cda {

// Scoring: confusion matrices, per-class/mean IoU, chi-square estimator
// reports, and class-wise late fusion. Evaluation always runs at the
// generation resolution (the resize-back step real pipelines need is a no-op
// here).

struct ConfusionMatrix {
  int c = 0;
  std::vector<int64_t> m;  // m[g*c + p]

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int c_) : c(c_), m(static_cast<size_t>(c_) * c_, 0) {}
  int64_t& at(int g, int p) { return m[static_cast<size_t>(g) * c + p]; }
  int64_t at(int g, int p) const { return m[static_cast<size_t>(g) * c + p]; }
  int64_t total() const;
};

ConfusionMatrix confusion_matrix(const std::vector<LabelMask>& preds,
                                 const std::vector<LabelMask>& gts, int c);

struct IoUReport {
  std::vector<double> iou;     // per class; meaningful only where defined
  std::vector<bool> defined;   // TP+FP+FN > 0
  double miou = 0.0;           // mean over defined classes
};

// eval_classes restricts the report to the first k classes (used when the
// prediction side carries an extra void id); default is every class.
IoUReport iou_report(const ConfusionMatrix& cm, int eval_classes = -1);

struct Chi2Row {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;
};

struct NamedEstimator {
  std::string name;
  std::function<LabelDistribution(const Image&)> fn;
};

// Mean/std of chi2(gt, estimate) over a validation set, one row per
// estimator.
std::vector<Chi2Row> chi2_report(const std::vector<NamedEstimator>& estimators,
                                 const std::vector<Image>& images,
                                 const std::vector<LabelMask>& masks, int c);
void save_chi2_csv(const std::string& path, const std::vector<Chi2Row>& rows);

// Per class, the model with the higher validation IoU; 0 = A, 1 = B, ties A.
std::vector<int> classwise_selection(const std::vector<LabelMask>& preds_a,
                                     const std::vector<LabelMask>& preds_b,
                                     const std::vector<LabelMask>& gts, int c);

// Pixel keeps A's label when that label is an A-selected class, otherwise
// takes B's label.
LabelMask late_fuse(const LabelMask& pred_a, const LabelMask& pred_b,
                    const std::vector<int>& selection);

LabelMask argmax_mask(const SoftPred& pred);

void save_confusion_csv(const std::string& path, const ConfusionMatrix& cm,
                        const std::vector<std::string>& class_names, bool normalized);

}  // namespace cda
