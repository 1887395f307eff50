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
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hnb/error.hpp"

namespace hnb {

// Anything whose evidence bounds can be tightened one step at a time.
template <class B>
concept RefinableBounds = requires(B b, const B cb) {
  { cb.lower() } -> std::convertible_to<double>;
  { cb.upper() } -> std::convertible_to<double>;
  { cb.fully_refined() } -> std::convertible_to<bool>;
  { cb.bound_pairs() } -> std::convertible_to<std::uint64_t>;
  b.refine_once();
};

enum class Strategy { potential_reduction, max_upper };
enum class Status { unique_optimum, indistinguishable_set, budget_exhausted };

inline const char* to_string(Strategy s) {
  return s == Strategy::potential_reduction ? "potential_reduction" : "max_upper";
}
inline const char* to_string(Status s) {
  switch (s) {
    case Status::unique_optimum: return "unique_optimum";
    case Status::indistinguishable_set: return "indistinguishable_set";
    case Status::budget_exhausted: return "budget_exhausted";
  }
  return "?";
}

struct FoamConfig {
  double alpha = 0.9;  // EWMA weight of the previous prediction
  double beta = 0.25;  // initial prediction as a fraction of the first margin
  double rho = 1.2;    // bucket ratio of the per-hypothesis element queues
  std::optional<std::uint64_t> max_cycles;
  Strategy strategy = Strategy::potential_reduction;
  unsigned parallel = 1;  // hypotheses refined concurrently per cycle batch
  bool record_trace = false;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConfiguration("alpha must lie in (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidConfiguration("beta must lie in (0,1)");
    if (!(rho > 1.0)) throw InvalidConfiguration("rho must be > 1");
    if (parallel < 1) throw InvalidConfiguration("parallel must be >= 1");
  }
};

struct TraceRecord {
  std::uint64_t cycle = 0;  // 0 for the initialization stage
  std::size_t hypothesis_id = 0;
  double lower = 0.0;
  double upper = 0.0;
  double gamma = 0.0;
  std::size_t active_count = 0;
};

// One JSON object per line.
inline void write_trace_jsonl(std::ostream& os, const std::vector<TraceRecord>& trace) {
  const auto prec = os.precision(17);
  for (const TraceRecord& r : trace) {
    os << "{\"cycle\":" << r.cycle << ",\"hypothesis_id\":" << r.hypothesis_id
       << ",\"lower\":" << r.lower << ",\"upper\":" << r.upper << ",\"gamma\":" << r.gamma
       << ",\"active_count\":" << r.active_count << "}\n";
  }
  os.precision(prec);
}

struct FoamResult {
  std::vector<std::size_t> solutions;  // ascending ids
  double gamma = -std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> cycles;  // refinement cycles per hypothesis
  std::vector<double> lower;          // final bounds per hypothesis
  std::vector<double> upper;
  std::uint64_t total_cycles = 0;
  std::uint64_t total_bound_pairs = 0;
  Status status = Status::unique_optimum;
  std::vector<TraceRecord> trace;

  [[nodiscard]] double tau() const {
    return cycles.empty() ? 0.0 : static_cast<double>(total_bound_pairs) / cycles.size();
  }
};

// EWMA of the per-refinement margin reduction.
inline double predict_margin_reduction(double previous, double observed, double alpha) {
  return alpha * previous + (1.0 - alpha) * observed;
}

// Expected decrease of the potential if the hypothesis is refined once.
inline double expected_potential_reduction(double lower, double predicted, double gamma,
                                           std::size_t active_count) {
  const double dgamma = std::max(lower + predicted / 2.0 - gamma, 0.0);
  return dgamma > 0.0 ? predicted / 2.0 + static_cast<double>(active_count) * dgamma
                      : predicted / 2.0;
}

// Focus-of-attention scheduler. Bounds for every hypothesis are computed once,
// then the hypothesis with the largest expected potential reduction is refined
// one cycle at a time until one hypothesis provably dominates, all survivors
// are fully refined, or the cycle budget runs out. A hypothesis is discarded
// only when its upper bound drops below gamma, the largest lower bound.
template <RefinableBounds B>
class Foam {
 public:
  struct Entry {
    B bounds;
    double predicted = 0.0;  // predicted margin reduction of the next refinement
    double key = 0.0;
    std::uint64_t cycles = 0;
    bool discarded = false;
    bool open = false;  // counted in unrefined_active_
  };

  explicit Foam(FoamConfig cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }

  // Initialization stage: `init(i)` computes the first bounds of hypothesis i.
  template <class Init>
  void initialize(std::size_t count, Init&& init) {
    if (count == 0) throw InvalidInput("no hypotheses to schedule");
    entries_.clear();
    entries_.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      entries_.push_back(Entry{init(i)});
      Entry& e = entries_.back();
      const double lo = e.bounds.lower();
      const double up = e.bounds.upper();
      if (lo > gamma_) gamma_ = lo;
      active_.insert({up, i});
      if (!e.bounds.fully_refined()) {
        e.open = true;
        ++unrefined_active_;
      }
      if (up >= gamma_) {
        e.predicted = cfg_.beta * (up - lo);
        e.key = key_of(e);
        if (!e.bounds.fully_refined()) heap_.push({e.key, i});
      }
      discard_below_gamma();
      if (cfg_.record_trace) trace_.push_back({0, i, lo, up, gamma_, active_.size()});
    }
    update_status();
  }

  [[nodiscard]] bool terminated() const { return status_.has_value(); }
  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] std::size_t active_count() const { return active_.size(); }
  [[nodiscard]] std::uint64_t total_cycles() const { return total_cycles_; }
  [[nodiscard]] const std::vector<Entry>& entries() const { return entries_; }

  [[nodiscard]] std::vector<std::size_t> active_ids() const {
    std::vector<std::size_t> ids;
    for (const auto& [up, id] : active_) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  // Sum over active hypotheses of (upper - gamma).
  [[nodiscard]] double potential() const {
    double p = 0.0;
    for (const auto& [up, id] : active_) p += up - gamma_;
    return p;
  }

  // One selection-refinement cycle (or a batch of `parallel` of them).
  // Returns false once terminated.
  bool step() {
    if (terminated()) return false;
    if (cfg_.parallel > 1) return step_batch();
    while (!heap_.empty()) {
      const std::size_t id = heap_.top().second;
      heap_.pop();
      Entry& e = entries_[id];
      if (e.discarded) continue;
      if (e.bounds.upper() < gamma_) {
        discard(id);
        continue;
      }
      refine(id);
      settle(id);
      break;
    }
    update_status();
    return !terminated();
  }

  FoamResult run() {
    while (step()) {
    }
    return result();
  }

  [[nodiscard]] FoamResult result() const {
    FoamResult r;
    r.solutions = active_ids();
    r.gamma = gamma_;
    r.total_cycles = total_cycles_;
    r.status = status_.value_or(Status::budget_exhausted);
    r.cycles.reserve(entries_.size());
    for (const Entry& e : entries_) {
      r.cycles.push_back(e.cycles);
      r.lower.push_back(e.bounds.lower());
      r.upper.push_back(e.bounds.upper());
      r.total_bound_pairs += e.bounds.bound_pairs();
    }
    r.trace = trace_;
    return r;
  }

 private:
  struct HeapOrder {
    bool operator()(const std::pair<double, std::size_t>& a,
                    const std::pair<double, std::size_t>& b) const {
      // max-heap on key, ties to the lowest id
      if (a.first != b.first) return a.first < b.first;
      return a.second > b.second;
    }
  };

  [[nodiscard]] double key_of(const Entry& e) const {
    if (cfg_.strategy == Strategy::max_upper) return e.bounds.upper();
    return expected_potential_reduction(e.bounds.lower(), e.predicted, gamma_, active_.size());
  }

  void refine(std::size_t id) {
    Entry& e = entries_[id];
    const double before = e.bounds.upper() - e.bounds.lower();
    old_upper_ = e.bounds.upper();
    e.bounds.refine_once();
    const double after = e.bounds.upper() - e.bounds.lower();
    e.predicted = predict_margin_reduction(e.predicted, std::max(before - after, 0.0), cfg_.alpha);
  }

  // Book-keeping after hypothesis `id` was refined once.
  void settle(std::size_t id) {
    Entry& e = entries_[id];
    ++e.cycles;
    ++total_cycles_;
    active_.erase({old_upper_, id});
    active_.insert({e.bounds.upper(), id});
    if (e.bounds.lower() > gamma_) gamma_ = e.bounds.lower();
    if (e.bounds.fully_refined()) {
      close(e);
    } else {
      e.key = key_of(e);
      heap_.push({e.key, id});
    }
    discard_below_gamma();
    if (cfg_.record_trace) {
      trace_.push_back({total_cycles_, id, e.bounds.lower(), e.bounds.upper(), gamma_,
                        active_.size()});
    }
  }

  bool step_batch() {
    std::vector<std::size_t> batch;
    while (!heap_.empty() && batch.size() < cfg_.parallel) {
      const std::size_t id = heap_.top().second;
      heap_.pop();
      Entry& e = entries_[id];
      if (e.discarded) continue;
      if (e.bounds.upper() < gamma_) {
        discard(id);
        continue;
      }
      batch.push_back(id);
    }
    std::vector<double> before_upper(batch.size()), before_margin(batch.size());
    std::vector<std::future<void>> jobs;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      B& b = entries_[batch[k]].bounds;
      before_upper[k] = b.upper();
      before_margin[k] = b.upper() - b.lower();
      jobs.push_back(std::async(std::launch::async, [&b] { b.refine_once(); }));
    }
    for (auto& j : jobs) j.get();
    // Merge in pop order; gamma only grows, so discards stay valid.
    for (std::size_t k = 0; k < batch.size(); ++k) {
      Entry& e = entries_[batch[k]];
      const double after = e.bounds.upper() - e.bounds.lower();
      e.predicted =
          predict_margin_reduction(e.predicted, std::max(before_margin[k] - after, 0.0), cfg_.alpha);
      old_upper_ = before_upper[k];
      if (e.discarded) {
        // discarded by an earlier member of this batch raising gamma
        ++e.cycles;
        ++total_cycles_;
        continue;
      }
      settle(batch[k]);
    }
    update_status();
    return !terminated();
  }

  void discard(std::size_t id) {
    Entry& e = entries_[id];
    if (e.discarded) return;
    e.discarded = true;
    active_.erase({e.bounds.upper(), id});
    close(e);
  }

  void close(Entry& e) {
    if (e.open) {
      e.open = false;
      --unrefined_active_;
    }
  }

  void discard_below_gamma() {
    while (!active_.empty() && active_.begin()->first < gamma_) {
      const std::size_t id = active_.begin()->second;
      Entry& e = entries_[id];
      e.discarded = true;
      close(e);
      active_.erase(active_.begin());
    }
  }

  void update_status() {
    if (active_.size() == 1) {
      status_ = Status::unique_optimum;
    } else if (unrefined_active_ == 0) {
      status_ = Status::indistinguishable_set;
    } else if (cfg_.max_cycles && total_cycles_ >= *cfg_.max_cycles) {
      status_ = Status::budget_exhausted;
    }
  }

  FoamConfig cfg_;
  std::vector<Entry> entries_;
  std::priority_queue<std::pair<double, std::size_t>, std::vector<std::pair<double, std::size_t>>,
                      HeapOrder>
      heap_;
  std::set<std::pair<double, std::size_t>> active_;  // (upper, id) of active hypotheses
  std::size_t unrefined_active_ = 0;
  double gamma_ = -std::numeric_limits<double>::infinity();
  double old_upper_ = 0.0;
  std::uint64_t total_cycles_ = 0;
  std::optional<Status> status_;
  std::vector<TraceRecord> trace_;
};

}  // namespace hnb
