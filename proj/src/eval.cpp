// SPDX-License-Identifier: Apache-2.0
#include "cda/eval.hpp"

#include <cmath>
#include <cstdio>

namespace cda {

int64_t ConfusionMatrix::total() const {
  int64_t t = 0;
  for (int64_t v : m) t += v;
  return t;
}

ConfusionMatrix confusion_matrix(const std::vector<LabelMask>& preds,
                                 const std::vector<LabelMask>& gts, int c) {
  require(preds.size() == gts.size(), "confusion_matrix: list size mismatch");
  ConfusionMatrix cm(c);
  for (size_t i = 0; i < preds.size(); ++i) {
    const LabelMask& p = preds[i];
    const LabelMask& g = gts[i];
    require(p.w == g.w && p.h == g.h, "confusion_matrix: mask shape mismatch");
    for (size_t px = 0; px < p.ids.size(); ++px) {
      const int32_t gp = g.ids[px], pp = p.ids[px];
      require(gp >= 0 && gp < c, "confusion_matrix: ground-truth class id out of range");
      require(pp >= 0 && pp < c, "confusion_matrix: predicted class id out of range");
      ++cm.at(gp, pp);
    }
  }
  return cm;
}

IoUReport iou_report(const ConfusionMatrix& cm, int eval_classes) {
  const int k = eval_classes < 0 ? cm.c : eval_classes;
  require(k <= cm.c, "iou_report: eval_classes exceeds the matrix size");
  IoUReport rep;
  rep.iou.assign(k, 0.0);
  rep.defined.assign(k, false);
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < k; ++c) {
    const int64_t tp = cm.at(c, c);
    int64_t fp = 0, fn = 0;
    for (int g = 0; g < cm.c; ++g)
      if (g != c) fp += cm.at(g, c);
    for (int p = 0; p < cm.c; ++p)
      if (p != c) fn += cm.at(c, p);
    const int64_t denom = tp + fp + fn;
    if (denom > 0) {
      rep.iou[c] = static_cast<double>(tp) / static_cast<double>(denom);
      rep.defined[c] = true;
      sum += rep.iou[c];
      ++defined;
    }
  }
  rep.miou = defined > 0 ? sum / defined : 0.0;
  return rep;
}

std::vector<Chi2Row> chi2_report(const std::vector<NamedEstimator>& estimators,
                                 const std::vector<Image>& images,
                                 const std::vector<LabelMask>& masks, int c) {
  require(images.size() == masks.size() && !images.empty(), "chi2_report: bad validation set");
  std::vector<LabelDistribution> gt;
  gt.reserve(masks.size());
  for (const LabelMask& m : masks) gt.push_back(gt_label_distribution(m, c));

  std::vector<Chi2Row> rows;
  for (const NamedEstimator& est : estimators) {
    double sum = 0.0, sumsq = 0.0;
    for (size_t i = 0; i < images.size(); ++i) {
      const double d = chi2_distance(gt[i], est.fn(images[i]));
      sum += d;
      sumsq += d * d;
    }
    const double n = static_cast<double>(images.size());
    const double mean = sum / n;
    rows.push_back({est.name, mean, std::sqrt(std::max(0.0, sumsq / n - mean * mean))});
  }
  return rows;
}

void save_chi2_csv(const std::string& path, const std::vector<Chi2Row>& rows) {
  FILE* f = std::fopen(path.c_str(), "w");
  require(f != nullptr, "save_chi2_csv: cannot open '" + path + "'");
  std::fprintf(f, "estimator,mean_chi2,std_chi2\n");
  for (const Chi2Row& r : rows) std::fprintf(f, "%s,%.6f,%.6f\n", r.name.c_str(), r.mean, r.stddev);
  std::fclose(f);
}

std::vector<int> classwise_selection(const std::vector<LabelMask>& preds_a,
                                     const std::vector<LabelMask>& preds_b,
                                     const std::vector<LabelMask>& gts, int c) {
  const IoUReport a = iou_report(confusion_matrix(preds_a, gts, c));
  const IoUReport b = iou_report(confusion_matrix(preds_b, gts, c));
  std::vector<int> sel(c, 0);
  for (int cls = 0; cls < c; ++cls) {
    const double va = a.defined[cls] ? a.iou[cls] : 0.0;
    const double vb = b.defined[cls] ? b.iou[cls] : 0.0;
    sel[cls] = vb > va ? 1 : 0;  // ties go to A
  }
  return sel;
}

LabelMask late_fuse(const LabelMask& pred_a, const LabelMask& pred_b,
                    const std::vector<int>& selection) {
  require(pred_a.w == pred_b.w && pred_a.h == pred_b.h, "late_fuse: shape mismatch");
  LabelMask fused(pred_a.w, pred_a.h);
  for (size_t px = 0; px < fused.ids.size(); ++px) {
    const int32_t a = pred_a.ids[px];
    require(a >= 0 && a < static_cast<int32_t>(selection.size()),
            "late_fuse: class id outside the selection map");
    fused.ids[px] = selection[a] == 0 ? a : pred_b.ids[px];
  }
  return fused;
}

LabelMask argmax_mask(const SoftPred& pred) {
  LabelMask mask(pred.w, pred.h);
  for (size_t px = 0; px < pred.pixels(); ++px) {
    const double* p = pred.p.data() + px * pred.c;
    int best = 0;
    for (int c = 1; c < pred.c; ++c)
      if (p[c] > p[best]) best = c;
    mask.ids[px] = best;
  }
  return mask;
}

void save_confusion_csv(const std::string& path, const ConfusionMatrix& cm,
                        const std::vector<std::string>& class_names, bool normalized) {
  FILE* f = std::fopen(path.c_str(), "w");
  require(f != nullptr, "save_confusion_csv: cannot open '" + path + "'");
  std::fprintf(f, "gt\\pred");
  for (int p = 0; p < cm.c; ++p)
    std::fprintf(f, ",%s", p < static_cast<int>(class_names.size()) ? class_names[p].c_str()
                                                                    : std::to_string(p).c_str());
  std::fprintf(f, "\n");
  for (int g = 0; g < cm.c; ++g) {
    std::fprintf(f, "%s", g < static_cast<int>(class_names.size()) ? class_names[g].c_str()
                                                                   : std::to_string(g).c_str());
    int64_t row = 0;
    for (int p = 0; p < cm.c; ++p) row += cm.at(g, p);
    for (int p = 0; p < cm.c; ++p) {
      if (normalized)
        std::fprintf(f, ",%.6f", row > 0 ? static_cast<double>(cm.at(g, p)) / row : 0.0);
      else
        std::fprintf(f, ",%lld", static_cast<long long>(cm.at(g, p)));
    }
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

}  // namespace cda
