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
#include <random>
#include <string>
#include <variant>

#include "hnb/error.hpp"
#include "hnb/grid.hpp"

namespace hnb {

// Log-odds and every region sum of them are carried as signed 2^-40 fixed
// point. Integer sums are exact and associative, so incrementally maintained
// bounds can be compared against pixel scans without tolerance.
using fixed_t = std::int64_t;
inline constexpr int kFixedFractionBits = 40;
inline constexpr double kFixedScale = 1099511627776.0;  // 2^40

inline fixed_t to_fixed(double v) { return static_cast<fixed_t>(std::llround(v * kFixedScale)); }
inline double from_fixed(fixed_t v) { return static_cast<double>(v) / kFixedScale; }

struct ClampPolicy {
  double delta_max = 5.0;

  void validate() const {
    if (!std::isfinite(delta_max) || delta_max <= 0.0) {
      throw InvalidConfiguration("delta_max must be finite and positive");
    }
    // 2^22 keeps per-pixel fixed values far from int64 limits for any image we can hold.
    if (delta_max > 4194304.0) throw InvalidConfiguration("delta_max too large");
  }

  [[nodiscard]] double p_min() const { return 1.0 / (1.0 + std::exp(delta_max)); }

  // Largest representable |delta| in fixed units; every stored delta lies in
  // [-delta_max_fixed(), +delta_max_fixed()].
  [[nodiscard]] fixed_t delta_max_fixed() const {
    return static_cast<fixed_t>(std::floor(delta_max * kFixedScale));
  }
};

// Per-pixel success rates. Values are held on a 2^-53 grid, which makes the
// complement 1 - p exact (salt-and-pepper flips are involutions).
class ProbabilityImage {
 public:
  ProbabilityImage() = default;
  ProbabilityImage(int width, int height, double fill = 0.0) : p_(width, height, snap(fill)) {
    if (width <= 0 || height <= 0) throw InvalidInput("probability image must be non-empty");
    check_value(fill);
  }
  explicit ProbabilityImage(const Grid<double>& p) : p_(p.width(), p.height()) {
    if (p.width() <= 0 || p.height() <= 0) throw InvalidInput("probability image must be non-empty");
    for (int y = 0; y < p.height(); ++y) {
      for (int x = 0; x < p.width(); ++x) set(x, y, p(x, y));
    }
  }

  [[nodiscard]] int width() const { return p_.width(); }
  [[nodiscard]] int height() const { return p_.height(); }
  [[nodiscard]] Region bounds() const { return p_.bounds(); }

  double operator()(int x, int y) const { return p_(x, y); }
  void set(int x, int y, double v) {
    check_value(v);
    p_.at(x, y) = snap(v);
  }

  [[nodiscard]] const Grid<double>& grid() const { return p_; }

  static double snap(double v) {
    constexpr double kGrid = 9007199254740992.0;  // 2^53
    return std::nearbyint(v * kGrid) / kGrid;
  }

  friend bool operator==(const ProbabilityImage&, const ProbabilityImage&) = default;

 private:
  static void check_value(double v) {
    if (!std::isfinite(v)) throw InvalidInput("probability is not finite");
    if (v < 0.0 || v > 1.0) throw InvalidInput("probability outside [0,1]");
  }

  Grid<double> p_;
};

class BernoulliField;
BernoulliField from_probabilities(const ProbabilityImage& img, const ClampPolicy& policy);

// Clamped log-odds of a probability image plus its normalizer
// z = sum log(1 - p) over the (clamped) success rates.
class BernoulliField {
 public:
  BernoulliField() = default;

  [[nodiscard]] int width() const { return delta_.width(); }
  [[nodiscard]] int height() const { return delta_.height(); }
  [[nodiscard]] Region bounds() const { return delta_.bounds(); }
  [[nodiscard]] const ClampPolicy& policy() const { return policy_; }

  [[nodiscard]] fixed_t delta_fixed(int x, int y) const { return delta_(x, y); }
  [[nodiscard]] double delta(int x, int y) const { return from_fixed(delta_(x, y)); }
  [[nodiscard]] const Grid<fixed_t>& delta_grid() const { return delta_; }

  // Success rate implied by the stored log-odds.
  [[nodiscard]] double probability(int x, int y) const {
    return 1.0 / (1.0 + std::exp(-delta(x, y)));
  }

  [[nodiscard]] double z_term() const { return z_term_; }

  // sum log(1 - p) over a rectangle, by direct scan.
  [[nodiscard]] double z_over(const Region& r) const {
    if (!r.inside(width(), height())) throw RangeError("region " + to_string(r) + " outside field");
    long double acc = 0.0L;
    for (int y = r.y0; y < r.y1(); ++y) {
      for (int x = r.x0; x < r.x1(); ++x) acc += log_one_minus_p(delta_(x, y));
    }
    return static_cast<double>(acc);
  }

  static double log_one_minus_p(fixed_t d) {
    // log(1 - logistic(d)) = -log(1 + e^d), written to stay accurate for large |d|.
    const double v = from_fixed(d);
    return v > 0.0 ? -v - std::log1p(std::exp(-v)) : -std::log1p(std::exp(v));
  }

 private:
  friend BernoulliField from_probabilities(const ProbabilityImage& img, const ClampPolicy& policy);

  Grid<fixed_t> delta_;
  double z_term_ = 0.0;
  ClampPolicy policy_;
};

inline BernoulliField from_probabilities(const ProbabilityImage& img, const ClampPolicy& policy) {
  policy.validate();
  if (img.width() <= 0 || img.height() <= 0) throw InvalidInput("empty probability image");
  const double p_min = policy.p_min();
  const fixed_t dmax = policy.delta_max_fixed();

  BernoulliField f;
  f.policy_ = policy;
  f.delta_ = Grid<fixed_t>(img.width(), img.height());
  long double z = 0.0L;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double p = img(x, y);
      if (!std::isfinite(p)) throw InvalidInput("non-finite probability");
      const double pc = std::clamp(p, p_min, 1.0 - p_min);
      const fixed_t d = std::clamp(to_fixed(std::log(pc) - std::log1p(-pc)), -dmax, dmax);
      f.delta_(x, y) = d;
      z += BernoulliField::log_one_minus_p(d);
    }
  }
  f.z_term_ = static_cast<double>(z);
  return f;
}

// p = fg / (fg + bg), per pixel.
inline ProbabilityImage from_likelihoods(const Grid<double>& fg_lik, const Grid<double>& bg_lik) {
  if (fg_lik.width() != bg_lik.width() || fg_lik.height() != bg_lik.height()) {
    throw InvalidInput("likelihood grids differ in extent");
  }
  if (fg_lik.empty()) throw InvalidInput("empty likelihood grids");
  ProbabilityImage out(fg_lik.width(), fg_lik.height());
  for (int y = 0; y < fg_lik.height(); ++y) {
    for (int x = 0; x < fg_lik.width(); ++x) {
      const double f = fg_lik(x, y);
      const double b = bg_lik(x, y);
      if (!std::isfinite(f) || !std::isfinite(b) || f < 0.0 || b < 0.0) {
        throw InvalidInput("likelihoods must be finite and non-negative");
      }
      if (f + b <= 0.0) {
        throw DegeneratePixel("both likelihoods are zero at (" + std::to_string(x) + "," +
                              std::to_string(y) + ")");
      }
      out.set(x, y, f / (b + f));
    }
  }
  return out;
}

struct GaussianNoise {
  double sigma = 0.0;
};
struct SaltPepperNoise {
  double probability = 0.0;
};
// Flips every pixel whose row or column index is a positive multiple of ell.
struct StructuredNoise {
  int ell = 1;
};

struct NoiseSpec {
  std::variant<GaussianNoise, SaltPepperNoise, StructuredNoise> variant;
  std::uint64_t seed = 0;
};

inline ProbabilityImage apply_noise(const ProbabilityImage& img, const NoiseSpec& spec) {
  ProbabilityImage out = img;
  std::mt19937_64 rng(spec.seed);
  const int w = img.width();
  const int h = img.height();

  if (const auto* g = std::get_if<GaussianNoise>(&spec.variant)) {
    if (!(g->sigma >= 0.0) || !std::isfinite(g->sigma)) throw InvalidInput("sigma must be >= 0");
    if (g->sigma == 0.0) return out;
    std::normal_distribution<double> noise(0.0, g->sigma);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.set(x, y, std::clamp(img(x, y) + noise(rng), 0.0, 1.0));
    }
  } else if (const auto* sp = std::get_if<SaltPepperNoise>(&spec.variant)) {
    if (!(sp->probability >= 0.0 && sp->probability <= 1.0)) {
      throw InvalidInput("salt-and-pepper probability outside [0,1]");
    }
    std::bernoulli_distribution flip(sp->probability);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (flip(rng)) out.set(x, y, 1.0 - img(x, y));
      }
    }
  } else {
    const int ell = std::get<StructuredNoise>(spec.variant).ell;
    if (ell < 1) throw InvalidInput("structured noise period must be >= 1");
    for (int y = 0; y < h; ++y) {
      const bool row = y > 0 && y % ell == 0;
      for (int x = 0; x < w; ++x) {
        const bool col = x > 0 && x % ell == 0;
        if (row || col) out.set(x, y, 1.0 - img(x, y));
      }
    }
  }
  return out;
}

inline ProbabilityImage binary_shape_to_probability(const Mask& mask, double fg_p, double bg_p) {
  if (!(bg_p >= 0.0 && bg_p < fg_p && fg_p <= 1.0)) {
    throw InvalidConfiguration("need 0 <= bg_p < fg_p <= 1");
  }
  if (mask.empty()) throw InvalidInput("empty mask");
  ProbabilityImage out(mask.width(), mask.height(), bg_p);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y) != 0) out.set(x, y, fg_p);
    }
  }
  return out;
}

}  // namespace hnb
