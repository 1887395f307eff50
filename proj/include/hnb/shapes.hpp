// Copyright 2026 The hnb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <tuple>
#include <vector>

#include "hnb/error.hpp"
#include "hnb/field.hpp"
#include "hnb/grid.hpp"
#include "hnb/hypotheses.hpp"

namespace hnb {

inline std::int64_t mask_count(const Mask& m) {
  return std::count_if(m.data().begin(), m.data().end(), [](std::uint8_t v) { return v != 0; });
}

// Number of differing pixels, both masks anchored at the origin and padded
// with background.
inline std::int64_t shape_distance(const Mask& a, const Mask& b) {
  const int w = std::max(a.width(), b.width());
  const int h = std::max(a.height(), b.height());
  std::int64_t d = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool va = x < a.width() && y < a.height() && a(x, y);
      const bool vb = x < b.width() && y < b.height() && b(x, y);
      d += va != vb;
    }
  }
  return d;
}

// Nearest-neighbour rescale to extent round(s * size).
inline Mask scale_mask(const Mask& m, double sx, double sy) {
  const auto [ow, oh] = scaled_extent(m.width(), m.height(), sx, sy);
  if (ow < 1 || oh < 1) throw InvalidScale("scaled mask has no pixels");
  Mask out(ow, oh, 0);
  for (int y = 0; y < oh; ++y) {
    const int v = std::min(m.height() - 1, static_cast<int>(std::floor((y + 0.5) / sy)));
    for (int x = 0; x < ow; ++x) {
      const int u = std::min(m.width() - 1, static_cast<int>(std::floor((x + 0.5) / sx)));
      out(x, y) = m(u, v);
    }
  }
  return out;
}

// Scales `m`, shifts it by (tx, ty) and crops to a w x h frame.
inline Mask transform_mask(const Mask& m, const ScaleTranslate& t, int w, int h) {
  t.validate();
  const Mask s = scale_mask(m, t.sx, t.sy);
  Mask out(w, h, 0);
  for (int y = 0; y < s.height(); ++y) {
    for (int x = 0; x < s.width(); ++x) {
      const int u = x + t.tx, v = y + t.ty;
      if (s(x, y) && u >= 0 && v >= 0 && u < w && v < h) out(u, v) = 1;
    }
  }
  return out;
}

struct AlignSearch {
  std::vector<int> tx{0};
  std::vector<int> ty{0};
  std::vector<double> sx{1.0};
  std::vector<double> sy{1.0};
};

struct Alignment {
  ScaleTranslate transform;
  std::int64_t distance = 0;
};

// Exhaustive search for the transform of `a` closest to `b`. Pixels moved
// outside b's frame still count as differences. Ties go to the smallest
// translation, then the scale closest to 1, then lexicographic (sx, sy, tx, ty).
inline Alignment align_shapes(const Mask& a, const Mask& b, const AlignSearch& search) {
  if (search.tx.empty() || search.ty.empty() || search.sx.empty() || search.sy.empty()) {
    throw InvalidConfiguration("empty alignment search range");
  }
  const std::int64_t nb = mask_count(b);
  Alignment best;
  bool have = false;
  auto rank = [](const ScaleTranslate& t) {
    return std::make_tuple(static_cast<std::int64_t>(t.tx) * t.tx + static_cast<std::int64_t>(t.ty) * t.ty,
                           std::abs(t.sx - 1.0) + std::abs(t.sy - 1.0), t.sx, t.sy, t.tx, t.ty);
  };
  for (double sx : search.sx) {
    for (double sy : search.sy) {
      const Mask s = scale_mask(a, sx, sy);
      const std::int64_t na = mask_count(s);
      for (int ty : search.ty) {
        for (int tx : search.tx) {
          std::int64_t both = 0;
          const int y0 = std::max(0, -ty), y1 = std::min(s.height(), b.height() - ty);
          const int x0 = std::max(0, -tx), x1 = std::min(s.width(), b.width() - tx);
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) both += s(x, y) && b(x + tx, y + ty);
          const Alignment cand{ScaleTranslate{sx, sy, tx, ty}, na + nb - 2 * both};
          if (!have || cand.distance < best.distance ||
              (cand.distance == best.distance && rank(cand.transform) < rank(best.transform))) {
            best = cand;
            have = true;
          }
        }
      }
    }
  }
  return best;
}

struct Clustering {
  std::vector<std::size_t> medoids;     // indices into the input shapes, ascending
  std::vector<std::size_t> assignment;  // medoid slot per shape
  std::int64_t objective = 0;
  std::vector<std::int64_t> history;  // objective after each swap of the kept restart
};

// PAM k-medoids over a symmetric distance matrix, best of `restarts` seeded
// random initialisations.
inline Clustering k_medoids(const std::vector<std::vector<std::int64_t>>& d, std::size_t k,
                            std::uint64_t seed, int restarts = 8) {
  const std::size_t n = d.size();
  if (k < 1 || k > n) throw InvalidConfiguration("need 1 <= k <= number of shapes");
  auto cost = [&](const std::vector<std::size_t>& med) {
    std::int64_t c = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::int64_t b = std::numeric_limits<std::int64_t>::max();
      for (std::size_t m : med) b = std::min(b, d[i][m]);
      c += b;
    }
    return c;
  };
  std::mt19937_64 rng(seed);
  Clustering best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<std::size_t> med(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    std::int64_t c = cost(med);
    std::vector<std::int64_t> history{c};
    for (;;) {
      std::int64_t best_c = c;
      std::size_t best_slot = 0, best_o = 0;
      for (std::size_t slot = 0; slot < k; ++slot) {
        for (std::size_t o = 0; o < n; ++o) {
          if (std::find(med.begin(), med.end(), o) != med.end()) continue;
          std::vector<std::size_t> trial = med;
          trial[slot] = o;
          const std::int64_t tc = cost(trial);
          if (tc < best_c) {
            best_c = tc;
            best_slot = slot;
            best_o = o;
          }
        }
      }
      if (best_c >= c) break;
      med[best_slot] = best_o;
      c = best_c;
      history.push_back(c);
    }
    std::sort(med.begin(), med.end());
    if (!have || c < best.objective || (c == best.objective && med < best.medoids)) {
      best.medoids = med;
      best.objective = c;
      best.history = history;
      have = true;
    }
  }
  best.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t slot = 0;
    for (std::size_t s = 1; s < k; ++s)
      if (d[i][best.medoids[s]] < d[i][best.medoids[slot]]) slot = s;
    best.assignment[i] = slot;
  }
  return best;
}

// Symmetric aligned distance: the smaller of the two alignment directions.
inline std::vector<std::vector<std::int64_t>> aligned_distances(const std::vector<Mask>& shapes,
                                                                const AlignSearch& search) {
  const std::size_t n = shapes.size();
  std::vector<std::vector<std::int64_t>> d(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::int64_t v = std::min(align_shapes(shapes[i], shapes[j], search).distance,
                                      align_shapes(shapes[j], shapes[i], search).distance);
      d[i][j] = d[j][i] = v;
    }
  }
  return d;
}

// Clusters the training shapes of one class and turns each cluster into a
// prior: the fraction of members (aligned to the medoid) covering each pixel.
inline std::vector<PriorClass> build_priors(const std::vector<Mask>& shapes, std::size_t clusters,
                                            std::uint64_t seed, const AlignSearch& search = {},
                                            const std::string& label = "class",
                                            Clustering* info = nullptr) {
  if (shapes.empty()) throw InvalidInput("no training shapes");
  if (clusters < 1 || clusters > shapes.size()) {
    throw InvalidConfiguration("clusters_per_class exceeds the number of shapes");
  }
  const Clustering cl = k_medoids(aligned_distances(shapes, search), clusters, seed);
  std::vector<PriorClass> out;
  for (std::size_t slot = 0; slot < cl.medoids.size(); ++slot) {
    const Mask& medoid = shapes[cl.medoids[slot]];
    Grid<double> cover(medoid.width(), medoid.height(), 0.0);
    int members = 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      if (cl.assignment[i] != slot) continue;
      const ScaleTranslate t = align_shapes(shapes[i], medoid, search).transform;
      const Mask aligned = transform_mask(shapes[i], t, medoid.width(), medoid.height());
      for (std::size_t p = 0; p < cover.size(); ++p) cover.data()[p] += aligned.data()[p];
      ++members;
    }
    for (double& v : cover.data()) v /= members;
    PriorClass pc;
    pc.id = label + "#" + std::to_string(slot);
    pc.label = label;
    pc.prior = ProbabilityImage(cover);
    const auto bbox = nonzero_bbox(pc.prior);
    if (!bbox) throw InvalidInput("cluster prior of '" + label + "' is empty");
    pc.support = *bbox;
    out.push_back(std::move(pc));
  }
  if (info) *info = cl;
  return out;
}

}  // namespace hnb
