// SPDX-License-Identifier: Apache-2.0
#include "cda/superpix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "cda/common.hpp"

namespace cda {
namespace {

struct Center {
  double x, y, r, g, b;  // colors in [0,1]
};

}  // namespace

std::vector<int32_t> SuperpixelMap::pixels_of(int32_t id) const {
  std::vector<int32_t> out;
  for (int32_t px = 0; px < static_cast<int32_t>(ids.size()); ++px)
    if (ids[px] == id) out.push_back(px);
  return out;
}

SuperpixelMap slic_segment(const Image& image, int n, double compactness, int iters) {
  const int w = image.w, h = image.h;
  const int64_t npx = static_cast<int64_t>(w) * h;
  require(n >= 4, "slic_segment: n must be >= 4");
  require(n <= npx, "slic_segment: n exceeds the pixel count");
  require(compactness > 0.0, "slic_segment: compactness must be > 0");
  require(iters >= 1, "slic_segment: iters must be >= 1");

  const double step = std::sqrt(static_cast<double>(npx) / n);
  const int gx = std::max(1, static_cast<int>(std::floor(w / step + 0.5)));
  const int gy = std::max(1, static_cast<int>(std::floor(h / step + 0.5)));

  std::vector<Center> centers;
  centers.reserve(static_cast<size_t>(gx) * gy);
  for (int j = 0; j < gy; ++j)
    for (int i = 0; i < gx; ++i) {
      Center c;
      c.x = (i + 0.5) * w / gx - 0.5;
      c.y = (j + 0.5) * h / gy - 0.5;
      const int px = std::clamp(static_cast<int>(c.x + 0.5), 0, w - 1);
      const int py = std::clamp(static_cast<int>(c.y + 0.5), 0, h - 1);
      c.r = image.at(py, px, 0);
      c.g = image.at(py, px, 1);
      c.b = image.at(py, px, 2);
      centers.push_back(c);
    }
  const int k = static_cast<int>(centers.size());

  // Spatial buckets of width `step`; a 5x5 bucket window covers every center
  // within the 2S search radius.
  const int bx = static_cast<int>(std::ceil(w / step));
  const int by = static_cast<int>(std::ceil(h / step));
  std::vector<std::vector<int32_t>> buckets(static_cast<size_t>(bx) * by);

  std::vector<int32_t> labels(npx, -1);
  const double pos_w = (compactness * compactness) / (step * step);

  for (int iter = 0; iter < iters; ++iter) {
    for (auto& bucket : buckets) bucket.clear();
    for (int ci = 0; ci < k; ++ci) {
      const int cbx = std::clamp(static_cast<int>(centers[ci].x / step), 0, bx - 1);
      const int cby = std::clamp(static_cast<int>(centers[ci].y / step), 0, by - 1);
      buckets[static_cast<size_t>(cby) * bx + cbx].push_back(ci);
    }

#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      const int pby = std::clamp(static_cast<int>(y / step), 0, by - 1);
      for (int x = 0; x < w; ++x) {
        const int pbx = std::clamp(static_cast<int>(x / step), 0, bx - 1);
        const double r = image.at(y, x, 0), g = image.at(y, x, 1), b = image.at(y, x, 2);
        double best = -1.0;
        int32_t best_id = -1;
        for (int dby = std::max(0, pby - 2); dby <= std::min(by - 1, pby + 2); ++dby)
          for (int dbx = std::max(0, pbx - 2); dbx <= std::min(bx - 1, pbx + 2); ++dbx)
            for (int32_t ci : buckets[static_cast<size_t>(dby) * bx + dbx]) {
              const Center& c = centers[ci];
              if (std::abs(c.x - x) > 2.0 * step || std::abs(c.y - y) > 2.0 * step) continue;
              const double dr = 100.0 * (r - c.r), dg = 100.0 * (g - c.g), db = 100.0 * (b - c.b);
              const double dx = x - c.x, dy = y - c.y;
              const double d = dr * dr + dg * dg + db * db + pos_w * (dx * dx + dy * dy);
              if (best_id < 0 || d < best || (d == best && ci < best_id)) {
                best = d;
                best_id = ci;
              }
            }
        if (best_id < 0) {
          // No center inside the window (degenerate layouts); fall back to
          // a full scan so every pixel gets an owner.
          for (int32_t ci = 0; ci < k; ++ci) {
            const Center& c = centers[ci];
            const double dr = 100.0 * (r - c.r), dg = 100.0 * (g - c.g), db = 100.0 * (b - c.b);
            const double dx = x - c.x, dy = y - c.y;
            const double d = dr * dr + dg * dg + db * db + pos_w * (dx * dx + dy * dy);
            if (best_id < 0 || d < best) {
              best = d;
              best_id = ci;
            }
          }
        }
        labels[static_cast<size_t>(y) * w + x] = best_id;
      }
    }

    // Serial row-major recompute of the centers keeps the result independent
    // of the thread count.
    std::vector<double> sx(k, 0.0), sy(k, 0.0), sr(k, 0.0), sg(k, 0.0), sb(k, 0.0);
    std::vector<int64_t> cnt(k, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int32_t ci = labels[static_cast<size_t>(y) * w + x];
        sx[ci] += x;
        sy[ci] += y;
        sr[ci] += image.at(y, x, 0);
        sg[ci] += image.at(y, x, 1);
        sb[ci] += image.at(y, x, 2);
        ++cnt[ci];
      }
    for (int ci = 0; ci < k; ++ci) {
      if (cnt[ci] == 0) continue;  // empty cluster keeps its position
      const double inv = 1.0 / static_cast<double>(cnt[ci]);
      centers[ci] = {sx[ci] * inv, sy[ci] * inv, sr[ci] * inv, sg[ci] * inv, sb[ci] * inv};
    }
  }

  // Connectivity enforcement. Repeatedly: label 4-connected components in
  // scan order, keep the largest component of every cluster, and merge each
  // orphan into the neighboring component with the longest shared boundary
  // (ties to the smaller label). Merging can in rare cases split the target
  // cluster again, so iterate to a fixpoint.
  std::vector<int32_t> comp(npx, -1);
  std::vector<int32_t> stack;
  for (int pass = 0; pass < 10; ++pass) {
    std::fill(comp.begin(), comp.end(), -1);
    std::vector<int32_t> comp_label;
    std::vector<int64_t> comp_size;
    for (int64_t px = 0; px < npx; ++px) {
      if (comp[px] >= 0) continue;
      const int32_t cid = static_cast<int32_t>(comp_label.size());
      const int32_t lab = labels[px];
      comp_label.push_back(lab);
      comp_size.push_back(0);
      stack.assign(1, static_cast<int32_t>(px));
      comp[px] = cid;
      while (!stack.empty()) {
        const int32_t cur = stack.back();
        stack.pop_back();
        ++comp_size[cid];
        const int y = cur / w, x = cur % w;
        const int nbr[4] = {x > 0 ? cur - 1 : -1, x < w - 1 ? cur + 1 : -1,
                            y > 0 ? cur - w : -1, y < h - 1 ? cur + w : -1};
        for (int q : nbr)
          if (q >= 0 && comp[q] < 0 && labels[q] == lab) {
            comp[q] = cid;
            stack.push_back(q);
          }
      }
    }

    const int ncomp = static_cast<int>(comp_label.size());
    std::vector<int32_t> main_comp(k, -1);
    for (int cid = 0; cid < ncomp; ++cid) {
      const int32_t lab = comp_label[cid];
      if (main_comp[lab] < 0 || comp_size[cid] > comp_size[main_comp[lab]]) main_comp[lab] = cid;
    }

    // Shared-boundary tallies for every orphan in one sweep.
    std::vector<std::map<int32_t, int64_t>> shared(ncomp);
    bool any_orphan = false;
    for (int cid = 0; cid < ncomp; ++cid)
      if (main_comp[comp_label[cid]] != cid) any_orphan = true;
    if (!any_orphan) break;
    for (int64_t px = 0; px < npx; ++px) {
      const int32_t cid = comp[px];
      if (main_comp[comp_label[cid]] == cid) continue;
      const int y = static_cast<int>(px / w), x = static_cast<int>(px % w);
      const int nbr[4] = {x > 0 ? static_cast<int>(px) - 1 : -1,
                          x < w - 1 ? static_cast<int>(px) + 1 : -1,
                          y > 0 ? static_cast<int>(px) - w : -1,
                          y < h - 1 ? static_cast<int>(px) + w : -1};
      for (int q : nbr)
        if (q >= 0 && comp[q] != cid) ++shared[cid][comp_label[comp[q]]];
    }

    std::vector<int32_t> comp_final(ncomp);
    for (int cid = 0; cid < ncomp; ++cid) {
      comp_final[cid] = comp_label[cid];
      if (main_comp[comp_label[cid]] == cid || shared[cid].empty()) continue;
      int32_t best_lab = -1;
      int64_t best_len = -1;
      for (const auto& [lab, len] : shared[cid])
        if (len > best_len || (len == best_len && lab < best_lab)) {
          best_len = len;
          best_lab = lab;
        }
      comp_final[cid] = best_lab;
    }
    for (int64_t px = 0; px < npx; ++px) labels[px] = comp_final[comp[px]];
  }

  // Compact ids to [0,count) in order of first appearance.
  SuperpixelMap sp;
  sp.w = w;
  sp.h = h;
  sp.ids.assign(npx, -1);
  std::vector<int32_t> remap(k, -1);
  int32_t next = 0;
  for (int64_t px = 0; px < npx; ++px) {
    const int32_t lab = labels[px];
    if (remap[lab] < 0) remap[lab] = next++;
    sp.ids[px] = remap[lab];
  }
  sp.count = next;
  sp.cx.assign(next, 0.0);
  sp.cy.assign(next, 0.0);
  sp.sizes.assign(next, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int32_t id = sp.ids[static_cast<size_t>(y) * w + x];
      sp.cx[id] += x;
      sp.cy[id] += y;
      ++sp.sizes[id];
    }
  for (int32_t id = 0; id < next; ++id) {
    sp.cx[id] /= sp.sizes[id];
    sp.cy[id] /= sp.sizes[id];
  }
  return sp;
}

std::vector<SuperpixelFeature> superpixel_features(const Image& image,
                                                   const SuperpixelMap& sp) {
  require(image.w == sp.w && image.h == sp.h, "superpixel_features: shape mismatch");
  const int w = sp.w, h = sp.h, k = sp.count;

  // Local 9-D blocks.
  std::vector<std::array<double, 9>> block(k, std::array<double, 9>{});
  std::vector<std::array<double, 3>> sum(k, {0, 0, 0}), sq(k, {0, 0, 0});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int32_t id = sp.ids[static_cast<size_t>(y) * w + x];
      for (int c = 0; c < 3; ++c) {
        const double v = image.at(y, x, c);
        sum[id][c] += v;
        sq[id][c] += v * v;
      }
    }
  const double npx = static_cast<double>(w) * h;
  for (int id = 0; id < k; ++id) {
    const double inv = 1.0 / sp.sizes[id];
    for (int c = 0; c < 3; ++c) {
      const double m = sum[id][c] * inv;
      block[id][c] = m;
      block[id][3 + c] = std::sqrt(std::max(0.0, sq[id][c] * inv - m * m));
    }
    block[id][6] = w > 1 ? sp.cx[id] / (w - 1) : 0.0;
    block[id][7] = h > 1 ? sp.cy[id] / (h - 1) : 0.0;
    block[id][8] = sp.sizes[id] / npx;
  }

  // Neighbor in direction d: the superpixel under the probe at
  // centroid + 2S*d, clamped to the image; self is reused when the probe
  // lands inside the same superpixel.
  const double step2 = 2.0 * std::sqrt(npx / k);
  const int dirs[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};  // left,right,above,below
  std::vector<SuperpixelFeature> out(k);
  for (int id = 0; id < k; ++id) {
    std::copy(block[id].begin(), block[id].end(), out[id].v.begin());
    for (int d = 0; d < 4; ++d) {
      const int px = std::clamp(static_cast<int>(sp.cx[id] + dirs[d][0] * step2 + 0.5), 0, w - 1);
      const int py = std::clamp(static_cast<int>(sp.cy[id] + dirs[d][1] * step2 + 0.5), 0, h - 1);
      const int32_t nid = sp.ids[static_cast<size_t>(py) * w + px];
      std::copy(block[nid].begin(), block[nid].end(), out[id].v.begin() + 9 * (d + 1));
    }
  }
  return out;
}

std::vector<int32_t> dominant_labels(const SuperpixelMap& sp, const LabelMask& mask) {
  require(mask.w == sp.w && mask.h == sp.h, "dominant_labels: shape mismatch");
  int32_t c = 0;
  for (int32_t id : mask.ids) c = std::max(c, id + 1);
  std::vector<int64_t> counts(static_cast<size_t>(sp.count) * c, 0);
  for (size_t px = 0; px < mask.ids.size(); ++px)
    ++counts[static_cast<size_t>(sp.ids[px]) * c + mask.ids[px]];
  std::vector<int32_t> out(sp.count, 0);
  for (int id = 0; id < sp.count; ++id) {
    const int64_t* row = counts.data() + static_cast<size_t>(id) * c;
    int32_t best = 0;
    for (int32_t j = 1; j < c; ++j)
      if (row[j] > row[best]) best = j;  // ties keep the smaller class id
    out[id] = best;
  }
  return out;
}

void write_boundary_pgm(const std::string& path, const Image& image, const SuperpixelMap& sp) {
  FILE* f = std::fopen(path.c_str(), "wb");
  require(f != nullptr, "write_boundary_pgm: cannot open '" + path + "'");
  std::fprintf(f, "P5\n%d %d\n255\n", sp.w, sp.h);
  for (int y = 0; y < sp.h; ++y)
    for (int x = 0; x < sp.w; ++x) {
      const int32_t id = sp.ids[static_cast<size_t>(y) * sp.w + x];
      const bool edge = (x + 1 < sp.w && sp.ids[static_cast<size_t>(y) * sp.w + x + 1] != id) ||
                        (y + 1 < sp.h && sp.ids[(static_cast<size_t>(y) + 1) * sp.w + x] != id);
      const double gray =
          (image.at(y, x, 0) + image.at(y, x, 1) + image.at(y, x, 2)) / 3.0;
      const uint8_t v = edge ? 255 : static_cast<uint8_t>(gray * 200.0);
      std::fputc(v, f);
    }
  std::fclose(f);
}

}  // namespace cda
