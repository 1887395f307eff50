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

#include <memory>
#include <vector>

#include "hnb/bounds.hpp"
#include "hnb/foam.hpp"
#include "hnb/hypotheses.hpp"
#include "hnb/summaries.hpp"

namespace hnb {

static_assert(RefinableBounds<HypothesisBounds>);

inline HypothesisBounds init_bounds(const std::shared_ptr<const SummaryTables>& image,
                                    PriorCache& priors, const Hypothesis& h,
                                    const BoundsConfig& bcfg = {}) {
  const PriorCache::Ptr tp = priors.get(h.class_index, h.transform.sx, h.transform.sy);
  return HypothesisBounds(image, tp->tables, h, tp->z_h, bcfg);
}

// Runs the scheduler over `hyps` against one image.
inline FoamResult run(const std::vector<Hypothesis>& hyps,
                      const std::shared_ptr<const SummaryTables>& image, PriorCache& priors,
                      const FoamConfig& cfg = {}, BoundsConfig bcfg = {}) {
  if (hyps.empty()) throw InvalidInput("empty hypothesis list");
  if (image->m() != priors.m()) throw InvalidConfiguration("image and priors differ in m");
  bcfg.rho = cfg.rho;
  Foam<HypothesisBounds> foam(cfg);
  foam.initialize(hyps.size(), [&](std::size_t i) { return init_bounds(image, priors, hyps[i], bcfg); });
  return foam.run();
}

// Exact evidence of every hypothesis by full pixel scan.
inline std::vector<double> exact_evidence_all(const std::vector<Hypothesis>& hyps,
                                              const BernoulliField& image, PriorCache& priors) {
  std::vector<double> out;
  out.reserve(hyps.size());
  for (const Hypothesis& h : hyps) {
    const PriorCache::Ptr tp = priors.get(h.class_index, h.transform.sx, h.transform.sy);
    out.push_back(exact_evidence(image, *tp, h));
  }
  return out;
}

}  // namespace hnb
