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
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "hnb/error.hpp"
#include "hnb/field.hpp"
#include "hnb/grid.hpp"
#include "hnb/hypotheses.hpp"
#include "hnb/margin_queue.hpp"
#include "hnb/summaries.hpp"

namespace hnb {

// ---------------------------------------------------------------------------
// Local bounds of one partition element, summary form.

// Lower bound from the two mean-summaries, and the discrete label it implies
// (foreground only when the summed log-odds are strictly positive).
struct LocalLower {
  double value = 0.0;
  bool label = false;
};

inline LocalLower local_lower(double mean_f, double mean_h) {
  const double s = mean_f + mean_h;
  return s > 0.0 ? LocalLower{s, true} : LocalLower{0.0, false};
}

// Ascending merge of two m-summaries, duplicates kept (length 4m+2).
inline std::vector<double> merge_summaries(const MSummary& f, const MSummary& h) {
  if (f.size() != h.size() || f.size() < 3 || f.size() % 2 == 0) {
    throw InvalidSummary("m-summaries must both have length 2m+1");
  }
  std::vector<double> merged;
  merged.reserve(f.size() + h.size());
  std::merge(f.values.begin(), f.values.end(), h.values.begin(), h.values.end(),
             std::back_inserter(merged));
  return merged;
}

// Upper bound on sup_q integral q (delta_f + delta_h) over one element, given
// only its two m-summaries:
//   (delta_max/m) * sum_{j=2m+1}^{4m+1} (j - 2m) (Y^{j+1} - Y^j)
// over the merged summary Y (1-based).
inline double local_upper(const MSummary& f, const MSummary& h, int m, double delta_max) {
  if (f.size() != static_cast<std::size_t>(2 * m + 1) ||
      h.size() != static_cast<std::size_t>(2 * m + 1)) {
    throw InvalidSummary("m-summary length does not match m");
  }
  const std::vector<double> y = merge_summaries(f, h);
  double acc = 0.0;
  for (int j = 2 * m + 1; j <= 4 * m + 1; ++j) {
    acc += (j - 2 * m) * (y[static_cast<std::size_t>(j)] - y[static_cast<std::size_t>(j - 1)]);
  }
  return delta_max / m * acc;
}

// ---------------------------------------------------------------------------
// Per-hypothesis bounding state.

struct BoundsConfig {
  double rho = 1.2;
  // Elements whose margin is at most floor_fraction * delta_max are resolved.
  double floor_fraction = 1e-6;
};

struct ElementRecord {
  Region region_img;
  Region region_pri;
  fixed_t mean_f = 0;
  fixed_t mean_h = 0;
  fixed_t local_lower = 0;
  fixed_t local_upper = 0;
  bool label = false;
  bool resolved = false;
  bool split = false;

  [[nodiscard]] fixed_t margin() const { return local_upper - local_lower; }
};

struct RefinementDelta {
  bool refined = false;
  std::size_t element = 0;
  int children = 0;
  fixed_t lower_before = 0;
  fixed_t lower_after = 0;
  fixed_t upper_before = 0;
  fixed_t upper_after = 0;
  double margin_popped = 0.0;  // fixed units
};

struct DiscreteShape {
  struct Cell {
    Region region;
    bool label = false;
  };
  std::vector<Cell> cells;

  // Binary mask over `frame` (image coordinates); pixels outside every cell are 0.
  [[nodiscard]] Mask rasterize(const Region& frame) const {
    Mask out(frame.w, frame.h, 0);
    for (const Cell& c : cells) {
      if (!c.label) continue;
      for (int y = c.region.y0; y < c.region.y1(); ++y) {
        for (int x = c.region.x0; x < c.region.x1(); ++x) {
          const int u = x - frame.x0;
          const int v = y - frame.y0;
          if (u >= 0 && v >= 0 && u < frame.w && v < frame.h) out(u, v) = 1;
        }
      }
    }
    return out;
  }
};

struct SemidiscreteShape {
  struct Cell {
    Region region;
    double lo = 0.0;  // admissible coverage interval, pixel-area units
    double hi = 0.0;
    [[nodiscard]] double representative() const { return lo; }
  };
  std::vector<Cell> cells;

  // Coverage fraction representative/|cell| per pixel over `frame`.
  [[nodiscard]] Grid<double> rasterize(const Region& frame) const {
    Grid<double> out(frame.w, frame.h, 0.0);
    for (const Cell& c : cells) {
      const double frac = c.representative() / static_cast<double>(c.region.area());
      for (int y = c.region.y0; y < c.region.y1(); ++y) {
        for (int x = c.region.x0; x < c.region.x1(); ++x) {
          const int u = x - frame.x0;
          const int v = y - frame.y0;
          if (u >= 0 && v >= 0 && u < frame.w && v < frame.h) out(u, v) = frac;
        }
      }
    }
    return out;
  }
};

// Lower/upper bounds on the evidence of one hypothesis over a quadtree
// partition of its support, refined one element at a time.
//
// Totals are kept in fixed point and updated incrementally; a split replaces
// the parent's local bounds by the sum of its children's. The upper bound of
// an element integrates the positive part of the two fields' threshold
// staircases, each capped by that field's exact maximum over the element, so
// it is tight wherever either field is uniform.
class HypothesisBounds {
 public:
  HypothesisBounds(std::shared_ptr<const SummaryTables> image,
                   std::shared_ptr<const SummaryTables> prior, const Hypothesis& hyp, double z_h,
                   const BoundsConfig& cfg = {})
      : image_(std::move(image)),
        prior_(std::move(prior)),
        id_(hyp.id),
        dx_(hyp.transform.tx),
        dy_(hyp.transform.ty),
        z_h_(z_h),
        floor_(cfg.floor_fraction * image_->delta_max() * kFixedScale),
        queue_(cfg.rho, floor_,
               2.0 * std::max(image_->delta_max(), prior_->delta_max()) * kFixedScale *
                   static_cast<double>(std::max<std::int64_t>(hyp.support_img.area(), 1))) {
    if (image_->m() != prior_->m()) throw InvalidConfiguration("image and prior tables differ in m");
    const Region& s = hyp.support_img;
    if (!s.inside(image_->width(), image_->height())) {
      throw InvalidHypothesis("hypothesis support " + to_string(s) + " exceeds the image");
    }
    const Region sp = s.shifted(-dx_, -dy_);
    if (!sp.inside(prior_->width(), prior_->height())) {
      throw InvalidHypothesis("hypothesis support " + to_string(sp) + " exceeds the prior");
    }
    const std::size_t levels = static_cast<std::size_t>(image_->levels());
    scratch_.resize(2 * levels);

    ElementRecord root = evaluate(s);
    lower_ = root.local_lower;
    upper_ = root.local_upper;
    bound_pairs_ = 1;
    elements_.push_back(root);
    enqueue(0);
    fully_refined_ = queue_.empty();
  }

  [[nodiscard]] std::size_t id() const { return id_; }
  [[nodiscard]] double z_h() const { return z_h_; }

  [[nodiscard]] double lower() const { return z_h_ + from_fixed(lower_); }
  [[nodiscard]] double upper() const { return z_h_ + from_fixed(upper_); }
  [[nodiscard]] double margin() const { return upper() - lower(); }
  [[nodiscard]] fixed_t lower_fixed() const { return lower_; }
  [[nodiscard]] fixed_t upper_fixed() const { return upper_; }

  [[nodiscard]] bool fully_refined() const { return fully_refined_; }
  [[nodiscard]] std::uint64_t bound_pairs() const { return bound_pairs_; }
  [[nodiscard]] std::uint64_t refinements() const { return refinements_; }
  [[nodiscard]] std::size_t leaf_count() const { return leaf_count_; }
  [[nodiscard]] std::size_t queued() const { return queue_.size(); }

  [[nodiscard]] std::vector<ElementRecord> leaves() const {
    std::vector<ElementRecord> out;
    out.reserve(leaf_count_);
    for (const ElementRecord& e : elements_) {
      if (!e.split) out.push_back(e);
    }
    return out;
  }

  // Recomputes both totals from the leaves; true when they match the
  // incrementally maintained values exactly.
  [[nodiscard]] bool check_totals() const {
    fixed_t lo = 0, up = 0;
    for (const ElementRecord& e : elements_) {
      if (e.split) continue;
      lo += e.local_lower;
      up += e.local_upper;
    }
    return lo == lower_ && up == upper_;
  }

  // Splits a near-maximal-margin element into quadrants (halves for 1-wide
  // or 1-tall elements).
  RefinementDelta refine_once() {
    RefinementDelta d;
    d.lower_before = d.lower_after = lower_;
    d.upper_before = d.upper_after = upper_;
    if (fully_refined_) return d;

    auto [margin, index] = queue_.pop_max();
    d.margin_popped = margin;
    d.element = index;
    const ElementRecord parent = elements_[index];
    elements_[index].split = true;
    --leaf_count_;

    fixed_t lower = lower_ - parent.local_lower;
    fixed_t upper = upper_ - parent.local_upper;
    for (const Region& child : split(parent.region_img)) {
      ElementRecord e = evaluate(child);
      lower += e.local_lower;
      upper += e.local_upper;
      elements_.push_back(e);
      enqueue(elements_.size() - 1);
      ++d.children;
    }
    bound_pairs_ += static_cast<std::uint64_t>(d.children);
    ++refinements_;
    lower_ = lower;
    upper_ = upper;
    if (queue_.empty()) fully_refined_ = true;

    d.refined = true;
    d.lower_after = lower_;
    d.upper_after = upper_;
    return d;
  }

  [[nodiscard]] DiscreteShape extract_discrete_shape() const {
    DiscreteShape out;
    for (const ElementRecord& e : elements_) {
      if (!e.split) out.cells.push_back({e.region_img, e.label});
    }
    return out;
  }

  [[nodiscard]] SemidiscreteShape extract_semidiscrete_shape() const {
    SemidiscreteShape out;
    const int m = image_->m();
    for (const ElementRecord& e : elements_) {
      if (e.split) continue;
      const std::vector<double> y =
          merge_summaries(image_->m_summary(e.region_img), prior_->m_summary(e.region_pri));
      const auto area = static_cast<double>(e.region_img.area());
      out.cells.push_back({e.region_img, area - y[static_cast<std::size_t>(2 * m)],
                           area - y[static_cast<std::size_t>(2 * m - 1)]});
    }
    return out;
  }

  // Local bounds of an image-coordinate region under this hypothesis.
  [[nodiscard]] ElementRecord evaluate(const Region& ri) const {
    ElementRecord e;
    e.region_img = ri;
    e.region_pri = ri.shifted(-dx_, -dy_);
    e.mean_f = image_->sum_fixed(e.region_img);
    e.mean_h = prior_->sum_fixed(e.region_pri);
    const fixed_t s = e.mean_f + e.mean_h;
    e.label = s > 0;
    e.local_lower = e.label ? s : 0;

    const std::size_t levels = static_cast<std::size_t>(image_->levels());
    std::span<std::int32_t> cf(scratch_.data(), levels);
    std::span<std::int32_t> ch(scratch_.data() + levels, levels);
    image_->counts(e.region_img, cf);
    prior_->counts(e.region_pri, ch);
    e.local_upper = staircase_upper(image_->thresholds(), cf, image_->max_fixed(e.region_img),
                                    prior_->thresholds(), ch, prior_->max_fixed(e.region_pri),
                                    ri.area());
    const bool unit = ri.w == 1 && ri.h == 1;
    e.resolved = unit || static_cast<double>(e.margin()) <= floor_;
    return e;
  }

  // Integral over a in [0, area) of max(0, U_f(a) + U_h(a)), where
  // U(a) = min(t_{J(a)}, cap) and J(a) is the first threshold whose count
  // exceeds a. Exact in fixed point.
  static fixed_t staircase_upper(std::span<const fixed_t> tf, std::span<const std::int32_t> cf,
                                 fixed_t cap_f, std::span<const fixed_t> th,
                                 std::span<const std::int32_t> ch, fixed_t cap_h,
                                 std::int64_t area) {
    fixed_t acc = 0;
    std::size_t i = 0, k = 0;
    std::int64_t a = 0;
    while (a < area) {
      while (cf[i] <= a) ++i;
      while (ch[k] <= a) ++k;
      const std::int64_t next = std::min<std::int64_t>(cf[i], ch[k]);
      const fixed_t v = std::min(tf[i], cap_f) + std::min(th[k], cap_h);
      if (v > 0) acc += v * (next - a);
      a = next;
    }
    return acc;
  }

  static std::vector<Region> split(const Region& r) {
    std::vector<Region> out;
    const int w1 = (r.w + 1) / 2, w2 = r.w / 2;
    const int h1 = (r.h + 1) / 2, h2 = r.h / 2;
    if (r.w == 1 && r.h == 1) return out;
    if (r.w == 1) {
      out.push_back({r.x0, r.y0, 1, h1});
      out.push_back({r.x0, r.y0 + h1, 1, h2});
    } else if (r.h == 1) {
      out.push_back({r.x0, r.y0, w1, 1});
      out.push_back({r.x0 + w1, r.y0, w2, 1});
    } else {
      out.push_back({r.x0, r.y0, w1, h1});
      out.push_back({r.x0 + w1, r.y0, w2, h1});
      out.push_back({r.x0, r.y0 + h1, w1, h2});
      out.push_back({r.x0 + w1, r.y0 + h1, w2, h2});
    }
    return out;
  }

 private:
  void enqueue(std::size_t index) {
    ElementRecord& e = elements_[index];
    ++leaf_count_;
    if (!e.resolved) queue_.insert(static_cast<double>(e.margin()), static_cast<std::uint32_t>(index));
  }

  std::shared_ptr<const SummaryTables> image_;
  std::shared_ptr<const SummaryTables> prior_;
  std::size_t id_ = 0;
  int dx_ = 0;
  int dy_ = 0;
  double z_h_ = 0.0;
  double floor_ = 0.0;  // fixed units
  MarginQueue<std::uint32_t> queue_;
  std::vector<ElementRecord> elements_;
  mutable std::vector<std::int32_t> scratch_;
  fixed_t lower_ = 0;
  fixed_t upper_ = 0;
  std::uint64_t bound_pairs_ = 0;
  std::uint64_t refinements_ = 0;
  std::size_t leaf_count_ = 0;
  bool fully_refined_ = false;
};

// ---------------------------------------------------------------------------
// Exact evidence by full pixel scan: z_h + sum over the support of
// max(0, delta_f + delta_h).

inline fixed_t exact_evidence_fixed(const BernoulliField& image, const BernoulliField& prior,
                                    const Hypothesis& hyp) {
  const Region& s = hyp.support_img;
  if (!s.inside(image.width(), image.height())) {
    throw InvalidHypothesis("hypothesis support " + to_string(s) + " exceeds the image");
  }
  const Region sp = s.shifted(-hyp.transform.tx, -hyp.transform.ty);
  if (!sp.inside(prior.width(), prior.height())) {
    throw InvalidHypothesis("hypothesis support " + to_string(sp) + " exceeds the prior");
  }
  fixed_t acc = 0;
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      const fixed_t v = image.delta_fixed(s.x0 + x, s.y0 + y) + prior.delta_fixed(sp.x0 + x, sp.y0 + y);
      if (v > 0) acc += v;
    }
  }
  return acc;
}

inline double exact_evidence(const BernoulliField& image, const BernoulliField& prior,
                             const Hypothesis& hyp, double z_h) {
  return z_h + from_fixed(exact_evidence_fixed(image, prior, hyp));
}

inline double exact_evidence(const BernoulliField& image, const TransformedPrior& prior,
                             const Hypothesis& hyp) {
  return exact_evidence(image, prior.field, hyp, prior.z_h);
}

}  // namespace hnb
