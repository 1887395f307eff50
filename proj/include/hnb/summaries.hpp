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
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hnb/error.hpp"
#include "hnb/field.hpp"
#include "hnb/grid.hpp"

namespace hnb {

// j-th threshold (0-based) of 2m+1 equispaced values from -dmax to +dmax.
inline fixed_t threshold_fixed(int j, int m, fixed_t dmax) {
  if (j <= 0) return -dmax;
  if (j >= 2 * m) return dmax;
  return static_cast<fixed_t>(j - m) * dmax / m;
}

// Threshold counts of one region: values[j] = |{x : delta(x) <= t_{j+1}}|.
struct MSummary {
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  double operator[](std::size_t j) const { return values[j]; }
};

// O(1) region queries over a BernoulliField:
//  - sum of log-odds (mean-summary, an integral over the region),
//  - counts of pixels at or below each of 2m+1 equispaced thresholds
//    t_1 = -delta_max, t_{m+1} = 0, t_{2m+1} = +delta_max (inclusive),
//  - exact min/max of the log-odds (square sparse table).
class SummaryTables {
 public:
  SummaryTables(const BernoulliField& field, int m)
      : w_(field.width()), h_(field.height()), m_(m), delta_max_(field.policy().delta_max) {
    if (m < 1) throw InvalidConfiguration("m must be >= 1");
    const fixed_t dmax = field.policy().delta_max_fixed();
    // Local upper bounds reach 2*dmax*area; keep that inside int64.
    const long double worst = 2.0L * static_cast<long double>(dmax) * w_ * h_;
    if (worst > 9.0e18L) throw InvalidConfiguration("field too large for fixed-point accumulators");

    const int levels = 2 * m + 1;
    thresholds_.resize(levels);
    for (int j = 0; j < levels; ++j) thresholds_[j] = threshold_fixed(j, m, dmax);

    const std::size_t stride = static_cast<std::size_t>(w_) + 1;
    sat_.assign(stride * (static_cast<std::size_t>(h_) + 1), 0);
    counts_.assign(stride * (static_cast<std::size_t>(h_) + 1) * levels, 0);

    fixed_t direct = 0;
    for (int y = 0; y < h_; ++y) {
      fixed_t row_sum = 0;
      std::vector<std::int32_t> row_counts(levels, 0);
      for (int x = 0; x < w_; ++x) {
        const fixed_t d = field.delta_fixed(x, y);
        direct += d;
        row_sum += d;
        sat_[idx(x + 1, y + 1)] = sat_[idx(x + 1, y)] + row_sum;
        const auto first = static_cast<int>(
            std::lower_bound(thresholds_.begin(), thresholds_.end(), d) - thresholds_.begin());
        for (int j = first; j < levels; ++j) ++row_counts[j];
        std::int32_t* dst = &counts_[idx(x + 1, y + 1) * levels];
        const std::int32_t* up = &counts_[idx(x + 1, y) * levels];
        for (int j = 0; j < levels; ++j) dst[j] = up[j] + row_counts[j];
      }
    }
    if (sat_[idx(w_, h_)] != direct) throw Error("summed-area table failed its full-grid check");

    build_minmax(field);
  }

  [[nodiscard]] int m() const { return m_; }
  [[nodiscard]] int levels() const { return 2 * m_ + 1; }
  [[nodiscard]] int width() const { return w_; }
  [[nodiscard]] int height() const { return h_; }
  [[nodiscard]] double delta_max() const { return delta_max_; }
  [[nodiscard]] std::span<const fixed_t> thresholds() const { return thresholds_; }

  [[nodiscard]] double threshold(int j) const { return from_fixed(thresholds_.at(j - 1)); }

  void check(const Region& r) const {
    if (!r.inside(w_, h_)) throw RangeError("region " + to_string(r) + " outside summary tables");
  }

  // Sum of log-odds over r, fixed point. Unchecked.
  [[nodiscard]] fixed_t sum_fixed(const Region& r) const {
    return sat_[idx(r.x1(), r.y1())] - sat_[idx(r.x0, r.y1())] - sat_[idx(r.x1(), r.y0)] +
           sat_[idx(r.x0, r.y0)];
  }

  [[nodiscard]] double mean_summary(const Region& r) const {
    check(r);
    return from_fixed(sum_fixed(r));
  }

  // Writes the 2m+1 threshold counts of r into out. Unchecked.
  void counts(const Region& r, std::span<std::int32_t> out) const {
    const int levels = 2 * m_ + 1;
    const std::int32_t* a = &counts_[idx(r.x1(), r.y1()) * levels];
    const std::int32_t* b = &counts_[idx(r.x0, r.y1()) * levels];
    const std::int32_t* c = &counts_[idx(r.x1(), r.y0) * levels];
    const std::int32_t* d = &counts_[idx(r.x0, r.y0) * levels];
    for (int j = 0; j < levels; ++j) out[j] = a[j] - b[j] - c[j] + d[j];
  }

  [[nodiscard]] MSummary m_summary(const Region& r) const {
    check(r);
    std::vector<std::int32_t> c(levels());
    counts(r, c);
    return MSummary{std::vector<double>(c.begin(), c.end())};
  }

  [[nodiscard]] fixed_t max_fixed(const Region& r) const { return extremum<true>(r); }
  [[nodiscard]] fixed_t min_fixed(const Region& r) const { return extremum<false>(r); }

  [[nodiscard]] bool uniform(const Region& r) const { return max_fixed(r) == min_fixed(r); }

 private:
  [[nodiscard]] std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * (static_cast<std::size_t>(w_) + 1) +
           static_cast<std::size_t>(x);
  }

  struct Level {
    int side = 1;
    int cols = 0;
    std::vector<fixed_t> lo, hi;
  };

  void build_minmax(const BernoulliField& field) {
    Level base{1, w_, {}, {}};
    base.lo.assign(field.delta_grid().begin(), field.delta_grid().end());
    base.hi = base.lo;
    levels_.push_back(std::move(base));
    for (int side = 2; side <= std::min(w_, h_); side *= 2) {
      const Level& prev = levels_.back();
      const int half = side / 2;
      Level next{side, w_ - side + 1, {}, {}};
      const int rows = h_ - side + 1;
      next.lo.resize(static_cast<std::size_t>(next.cols) * rows);
      next.hi.resize(next.lo.size());
      for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < next.cols; ++x) {
          const auto at = [&](int xx, int yy) {
            return static_cast<std::size_t>(yy) * prev.cols + static_cast<std::size_t>(xx);
          };
          const std::size_t o = static_cast<std::size_t>(y) * next.cols + x;
          next.lo[o] = std::min({prev.lo[at(x, y)], prev.lo[at(x + half, y)],
                                 prev.lo[at(x, y + half)], prev.lo[at(x + half, y + half)]});
          next.hi[o] = std::max({prev.hi[at(x, y)], prev.hi[at(x + half, y)],
                                 prev.hi[at(x, y + half)], prev.hi[at(x + half, y + half)]});
        }
      }
      levels_.push_back(std::move(next));
    }
  }

  template <bool kMax>
  [[nodiscard]] fixed_t extremum(const Region& r) const {
    const int shortest = std::min(r.w, r.h);
    const int level = std::bit_width(static_cast<unsigned>(shortest)) - 1;
    const Level& lv = levels_[static_cast<std::size_t>(level)];
    const int s = lv.side;
    const std::vector<fixed_t>& t = kMax ? lv.hi : lv.lo;
    fixed_t best = t[static_cast<std::size_t>(r.y0) * lv.cols + r.x0];
    for (int y = r.y0;; y = std::min(y + s, r.y1() - s)) {
      for (int x = r.x0;; x = std::min(x + s, r.x1() - s)) {
        const fixed_t v = t[static_cast<std::size_t>(y) * lv.cols + x];
        best = kMax ? std::max(best, v) : std::min(best, v);
        if (x == r.x1() - s) break;
      }
      if (y == r.y1() - s) break;
    }
    return best;
  }

  int w_ = 0;
  int h_ = 0;
  int m_ = 1;
  double delta_max_ = 5.0;
  std::vector<fixed_t> thresholds_;
  std::vector<fixed_t> sat_;
  std::vector<std::int32_t> counts_;
  std::vector<Level> levels_;
};

// ---------------------------------------------------------------------------
// Exact LCDF of a region and the summary-based majorant of its inverse. These
// are reference computations: the bounding engine never calls them.

struct Lcdf {
  std::vector<double> sorted;     // ascending log-odds of the region
  std::int64_t crossing_area = 0;  // number of values < 0

  [[nodiscard]] std::int64_t area() const { return static_cast<std::int64_t>(sorted.size()); }
};

inline Lcdf lcdf_exact(const BernoulliField& field, const Region& r) {
  if (!r.inside(field.width(), field.height())) {
    throw RangeError("region " + to_string(r) + " outside field");
  }
  Lcdf out;
  out.sorted.reserve(static_cast<std::size_t>(r.area()));
  for (int y = r.y0; y < r.y1(); ++y) {
    for (int x = r.x0; x < r.x1(); ++x) out.sorted.push_back(field.delta(x, y));
  }
  std::sort(out.sorted.begin(), out.sorted.end());
  out.crossing_area = std::lower_bound(out.sorted.begin(), out.sorted.end(), 0.0) -
                      out.sorted.begin();
  return out;
}

// Largest integral of delta over a (fractional) shape of mass s inside the
// region: the floor(s) largest values plus the fractional part of the next.
inline double top_mass_integral(const Lcdf& lcdf, double s) {
  const auto n = static_cast<double>(lcdf.area());
  if (!(s >= 0.0 && s <= n)) throw RangeError("mass outside [0, |region|]");
  const auto whole = static_cast<std::size_t>(std::floor(s));
  const double frac = s - static_cast<double>(whole);
  fixed_t acc = 0;
  auto it = lcdf.sorted.rbegin();
  for (std::size_t k = 0; k < whole; ++k, ++it) acc += to_fixed(*it);
  double out = from_fixed(acc);
  if (frac > 0.0 && it != lcdf.sorted.rend()) out += frac * *it;
  return out;
}

// Integral over [alpha, area] of the staircase majorant of the inverse LCDF
// implied by an m-summary: on [c_{j-1}, c_j) the j-th smallest threshold
// bounds every value from above.
inline double integrate_inverse_upper(const MSummary& ms, double alpha, int m, double delta_max,
                                      double area) {
  if (m < 1) throw InvalidConfiguration("m must be >= 1");
  if (ms.size() != static_cast<std::size_t>(2 * m + 1)) {
    throw InvalidSummary("m-summary length does not match m");
  }
  if (!(alpha >= 0.0 && alpha <= area)) throw RangeError("alpha outside [0, area]");
  if (ms.values.back() != area) throw InvalidSummary("m-summary does not cover the region");
  const fixed_t dmax = ClampPolicy{delta_max}.delta_max_fixed();
  fixed_t whole = 0;  // integer-width pieces, exact
  double part = 0.0;  // fractional-width pieces
  double lo = 0.0;
  for (int j = 0; j < 2 * m + 1; ++j) {
    const double hi = ms[static_cast<std::size_t>(j)];
    if (hi < lo) throw InvalidSummary("m-summary is not nondecreasing");
    const double a = std::max(lo, alpha);
    if (hi > a) {
      const fixed_t t = threshold_fixed(j, m, dmax);
      const double width = hi - a;
      if (width == std::floor(width)) {
        whole += t * static_cast<fixed_t>(width);
      } else {
        part += from_fixed(t) * width;
      }
    }
    lo = hi;
  }
  return from_fixed(whole) + part;
}

}  // namespace hnb
