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
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "hnb/error.hpp"

namespace hnb {

// A pose given by the translation of a reference point and the two scales.
struct Pose {
  double tx = 0.0;
  double ty = 0.0;
  double sx = 1.0;
  double sy = 1.0;
};

struct MetricsSummary {
  double mu_t = 0.0;     // pixels
  double sigma_t = 0.0;  // pixels
  double mu_s = 0.0;     // percent
  double sigma_s = 0.0;  // percent
  double tau = 0.0;
  std::size_t solution_count = 0;
};

// Bias (norm of the mean error) and RMS error of translation and scale.
inline MetricsSummary pose_metrics(const std::vector<Pose>& solutions, const Pose& truth) {
  if (solutions.empty()) throw EmptyMetrics("pose metrics need at least one solution");
  double mx = 0, my = 0, ssq = 0, msx = 0, msy = 0, ssq_s = 0;
  for (const Pose& p : solutions) {
    const double dx = p.tx - truth.tx, dy = p.ty - truth.ty;
    const double ex = p.sx / truth.sx - 1.0, ey = p.sy / truth.sy - 1.0;
    mx += dx;
    my += dy;
    ssq += dx * dx + dy * dy;
    msx += ex;
    msy += ey;
    ssq_s += ex * ex + ey * ey;
  }
  const auto n = static_cast<double>(solutions.size());
  MetricsSummary m;
  m.mu_t = std::hypot(mx / n, my / n);
  m.sigma_t = std::sqrt(ssq / n);
  m.mu_s = 100.0 * std::hypot(msx / n, msy / n);
  m.sigma_s = 100.0 * std::sqrt(ssq_s / n);
  m.solution_count = solutions.size();
  return m;
}

struct ScoredSolution {
  std::size_t id = 0;
  std::string label;
  double lower = 0.0;
  double upper = 0.0;
};

// Keeps solutions whose upper bound reaches lower* + beta (upper* - lower*),
// where lower* and upper* are the largest bounds in the set.
inline std::vector<ScoredSolution> solution_filter(const std::vector<ScoredSolution>& s, double beta) {
  if (s.empty()) return {};
  double lo = s.front().lower, up = s.front().upper;
  for (const auto& x : s) {
    lo = std::max(lo, x.lower);
    up = std::max(up, x.upper);
  }
  const double g = beta == 0.0 ? lo : beta == 1.0 ? up : lo + beta * (up - lo);
  std::vector<ScoredSolution> out;
  for (const auto& x : s)
    if (x.upper >= g) out.push_back(x);
  return out;
}

struct LabelledRun {
  std::string truth;
  std::vector<ScoredSolution> solutions;
};

// Pooled solution counts: row = true class, column = class of the solution.
struct ConfusionMatrix {
  double beta = 0.0;
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;
  double p_total = 0.0;

  [[nodiscard]] std::vector<std::vector<double>> fractions() const {
    std::vector<std::vector<double>> f(counts.size(), std::vector<double>(labels.size(), 0.0));
    for (std::size_t i = 0; i < counts.size(); ++i) {
      std::size_t row = 0;
      for (std::size_t c : counts[i]) row += c;
      if (row == 0) continue;
      for (std::size_t j = 0; j < labels.size(); ++j) f[i][j] = static_cast<double>(counts[i][j]) / row;
    }
    return f;
  }
};

inline ConfusionMatrix confusion(const std::vector<LabelledRun>& runs, double beta,
                                 std::vector<std::string> labels = {}) {
  auto add = [&](const std::string& l) {
    if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
  };
  for (const auto& r : runs) {
    add(r.truth);
    for (const auto& s : r.solutions) add(s.label);
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;
  ConfusionMatrix cm;
  cm.beta = beta;
  cm.labels = labels;
  cm.counts.assign(labels.size(), std::vector<std::size_t>(labels.size(), 0));
  std::size_t total = 0, correct = 0;
  for (const auto& r : runs) {
    for (const auto& s : solution_filter(r.solutions, beta)) {
      ++cm.counts[index[r.truth]][index[s.label]];
      ++total;
      correct += s.label == r.truth;
    }
  }
  cm.p_total = total ? static_cast<double>(correct) / total : 0.0;
  return cm;
}

}  // namespace hnb
