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
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hnb/error.hpp"
#include "hnb/field.hpp"
#include "hnb/grid.hpp"
#include "hnb/summaries.hpp"

namespace hnb {

// x -> Diag(sx, sy) x + (tx, ty): the prior frame origin lands on (tx, ty).
struct ScaleTranslate {
  double sx = 1.0;
  double sy = 1.0;
  int tx = 0;
  int ty = 0;

  void validate() const {
    if (!(sx > 0.0) || !(sy > 0.0) || !std::isfinite(sx) || !std::isfinite(sy)) {
      throw InvalidScale("scale factors must be positive");
    }
  }

  friend bool operator==(const ScaleTranslate&, const ScaleTranslate&) = default;
};

// A shape class: its prior success rates and the rectangle outside which they vanish.
struct PriorClass {
  std::string id;
  std::string label;  // class name used for classification reports
  ProbabilityImage prior;
  Region support;
};

inline void validate_prior(const PriorClass& pc) {
  if (!pc.support.inside(pc.prior.width(), pc.prior.height())) {
    throw InvalidInput("prior support outside its image");
  }
  for (int y = 0; y < pc.prior.height(); ++y) {
    for (int x = 0; x < pc.prior.width(); ++x) {
      const bool in = x >= pc.support.x0 && x < pc.support.x1() && y >= pc.support.y0 &&
                      y < pc.support.y1();
      if (!in && pc.prior(x, y) != 0.0) throw InvalidInput("prior nonzero outside its support");
    }
  }
}

// Bounding box of the nonzero success rates, if any.
inline std::optional<Region> nonzero_bbox(const ProbabilityImage& p) {
  int x0 = p.width(), y0 = p.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      if (p(x, y) > 0.0) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) return std::nullopt;
  return Region{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

// A prior resampled to one (sx, sy). Shared by every translation.
struct TransformedPrior {
  std::size_t class_index = 0;
  double sx = 1.0;
  double sy = 1.0;
  BernoulliField field;
  std::shared_ptr<const SummaryTables> tables;
  Region support;  // in the resampled frame
  double z_h = 0.0;  // sum log(1 - p) over the support
};

inline std::array<int, 2> scaled_extent(int w, int h, double sx, double sy) {
  return {static_cast<int>(std::lround(sx * w)), static_cast<int>(std::lround(sy * h))};
}

// Bilinear resampling of the success rates at the preimage of each output
// pixel centre (edge-clamped).
inline ProbabilityImage resample_prior(const ProbabilityImage& p, double sx, double sy) {
  ScaleTranslate{sx, sy, 0, 0}.validate();
  const auto [ow, oh] = scaled_extent(p.width(), p.height(), sx, sy);
  if (ow < 1 || oh < 1) throw InvalidScale("scaled prior has no pixels");
  ProbabilityImage out(ow, oh);
  const int w = p.width();
  const int h = p.height();
  for (int y = 0; y < oh; ++y) {
    const double v = std::clamp((y + 0.5) / sy - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(std::floor(v));
    const int y1 = std::min(y0 + 1, h - 1);
    const double b = v - y0;
    for (int x = 0; x < ow; ++x) {
      const double u = std::clamp((x + 0.5) / sx - 0.5, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(std::floor(u));
      const int x1 = std::min(x0 + 1, w - 1);
      const double a = u - x0;
      const double top = std::lerp(p(x0, y0), p(x1, y0), a);
      const double bot = std::lerp(p(x0, y1), p(x1, y1), a);
      out.set(x, y, std::clamp(std::lerp(top, bot, b), 0.0, 1.0));
    }
  }
  return out;
}

inline TransformedPrior transform_prior(const PriorClass& pc, double sx, double sy,
                                        const ClampPolicy& policy, int m,
                                        std::size_t class_index = 0) {
  TransformedPrior tp;
  tp.class_index = class_index;
  tp.sx = sx;
  tp.sy = sy;
  const ProbabilityImage resampled = resample_prior(pc.prior, sx, sy);
  const auto support = nonzero_bbox(resampled);
  if (!support) throw InvalidInput("prior '" + pc.id + "' has no nonzero success rate");
  tp.support = *support;
  tp.field = from_probabilities(resampled, policy);
  tp.tables = std::make_shared<const SummaryTables>(tp.field, m);
  tp.z_h = tp.field.z_over(tp.support);
  return tp;
}

// Build-once / read-many store of transformed priors keyed by (class, sx, sy).
// Concurrent requests for the same key wait on a single build.
class PriorCache {
 public:
  using Ptr = std::shared_ptr<const TransformedPrior>;

  PriorCache(std::vector<PriorClass> classes, ClampPolicy policy, int m)
      : classes_(std::move(classes)), policy_(policy), m_(m) {
    policy_.validate();
    if (m_ < 1) throw InvalidConfiguration("m must be >= 1");
  }

  [[nodiscard]] const std::vector<PriorClass>& classes() const { return classes_; }
  [[nodiscard]] const ClampPolicy& policy() const { return policy_; }
  [[nodiscard]] int m() const { return m_; }

  Ptr get(std::size_t class_index, double sx, double sy) {
    if (class_index >= classes_.size()) throw InvalidInput("unknown prior class index");
    const Key key{class_index, sx, sy};
    std::promise<Ptr> promise;
    std::shared_future<Ptr> future;
    bool builder = false;
    {
      std::lock_guard lock(mutex_);
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        future = promise.get_future().share();
        entries_.emplace(key, future);
        builder = true;
        ++builds_;
      } else {
        future = it->second;
      }
    }
    if (builder) {
      try {
        promise.set_value(std::make_shared<const TransformedPrior>(
            transform_prior(classes_[class_index], sx, sy, policy_, m_, class_index)));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

  [[nodiscard]] std::size_t builds() const {
    std::lock_guard lock(mutex_);
    return builds_;
  }

 private:
  using Key = std::tuple<std::size_t, double, double>;

  std::vector<PriorClass> classes_;
  ClampPolicy policy_;
  int m_;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_future<Ptr>> entries_;
  std::size_t builds_ = 0;
};

struct Hypothesis {
  std::size_t id = 0;
  std::size_t class_index = 0;
  ScaleTranslate transform;
  Region support_img;  // transformed support in image coordinates
};

// Hypothesis space: classes x scales x translations. Translations are frame
// offsets, or offsets of the support centre from `anchor` when it is set.
// A nonempty `translations` list replaces the tx x ty product.
struct HypothesisGrid {
  std::vector<std::size_t> classes;
  std::vector<double> sx{1.0};
  std::vector<double> sy{1.0};
  std::vector<int> tx;
  std::vector<int> ty;
  std::vector<std::array<int, 2>> translations;
  std::optional<std::array<int, 2>> anchor;

  [[nodiscard]] std::size_t translation_count() const {
    return translations.empty() ? tx.size() * ty.size() : translations.size();
  }
  // Size before filtering by the image bounds.
  [[nodiscard]] std::size_t size() const {
    return classes.size() * sx.size() * sy.size() * translation_count();
  }

  static std::vector<int> range(int lo, int hi) {
    std::vector<int> v;
    for (int t = lo; t <= hi; ++t) v.push_back(t);
    return v;
  }
};

// Support of (class, sx, sy) in its resampled frame.
using SupportFn = std::function<Region(std::size_t, double, double)>;

inline std::vector<Hypothesis> enumerate(const HypothesisGrid& grid, int image_w, int image_h,
                                         const SupportFn& support_of) {
  if (grid.classes.empty() || grid.sx.empty() || grid.sy.empty() ||
      grid.translation_count() == 0) {
    throw InvalidConfiguration("hypothesis grid has an empty axis");
  }
  std::vector<std::array<int, 2>> offsets;  // (ty, tx), sorted lexicographically
  if (grid.translations.empty()) {
    for (int y : grid.ty)
      for (int x : grid.tx) offsets.push_back({y, x});
  } else {
    for (const auto& t : grid.translations) offsets.push_back({t[1], t[0]});
  }
  std::sort(offsets.begin(), offsets.end());
  std::vector<double> sxs = grid.sx, sys = grid.sy;
  std::sort(sxs.begin(), sxs.end());
  std::sort(sys.begin(), sys.end());

  std::vector<Hypothesis> out;
  for (std::size_t c : grid.classes) {
    for (double sy : sys) {
      for (double sx : sxs) {
        ScaleTranslate{sx, sy, 0, 0}.validate();
        const Region sup = support_of(c, sx, sy);
        for (const auto& [oy, ox] : offsets) {
          int tx = ox;
          int ty = oy;
          if (grid.anchor) {
            tx = (*grid.anchor)[0] + ox - (sup.x0 + sup.w / 2);
            ty = (*grid.anchor)[1] + oy - (sup.y0 + sup.h / 2);
          }
          const Region img = sup.shifted(tx, ty);
          if (!img.inside(image_w, image_h)) continue;
          out.push_back(Hypothesis{out.size(), c, ScaleTranslate{sx, sy, tx, ty}, img});
        }
      }
    }
  }
  if (out.empty()) throw EmptyHypothesisSpace("no hypothesis has its support inside the image");
  return out;
}

}  // namespace hnb
