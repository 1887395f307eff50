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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "hnb/error.hpp"

namespace hnb {

// Untidy priority queue: bucket j holds priorities in
// [floor*rho^(j-1), floor*rho^j), each bucket a singly-linked list threaded
// through a pooled node array. Insert and pop_max are O(1) amortized and
// pop_max returns an item whose priority is at least max/rho. Pops within a
// bucket are LIFO. Priorities above the ceiling share the top bucket; those
// below the floor share bucket 0.
template <class T>
class MarginQueue {
 public:
  MarginQueue(double rho, double floor, double ceiling) : rho_(rho), floor_(floor) {
    if (!(rho > 1.0)) throw InvalidConfiguration("rho must be > 1");
    if (!(floor > 0.0)) throw InvalidConfiguration("queue floor must be > 0");
    log_rho_ = std::log(rho);
    const double span = std::max(ceiling / floor, rho);
    const auto n = static_cast<std::size_t>(std::ceil(std::log(span) / log_rho_)) + 1;
    heads_.assign(n + 1, kNil);
  }

  void insert(double priority, T item) {
    const std::size_t j = bucket_of(priority);
    std::uint32_t slot;
    if (free_ != kNil) {
      slot = free_;
      free_ = nodes_[slot].next;
      nodes_[slot] = Node{priority, std::move(item), heads_[j]};
    } else {
      slot = static_cast<std::uint32_t>(nodes_.size());
      nodes_.push_back(Node{priority, std::move(item), heads_[j]});
    }
    heads_[j] = slot;
    ++size_;
    if (j > top_ || size_ == 1) top_ = j;
  }

  // Removes an item from the highest non-empty bucket.
  std::pair<double, T> pop_max() {
    if (size_ == 0) throw Error("pop_max on empty margin queue");
    const std::uint32_t slot = heads_[top_];
    Node& n = nodes_[slot];
    heads_[top_] = n.next;
    std::pair<double, T> out{n.priority, std::move(n.item)};
    n.next = free_;
    free_ = slot;
    --size_;
    while (top_ > 0 && heads_[top_] == kNil) --top_;
    return out;
  }

  [[nodiscard]] bool empty() const { return size_ == 0; }
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t bucket_count() const { return heads_.size(); }
  [[nodiscard]] std::size_t top_bucket() const { return top_; }
  [[nodiscard]] double rho() const { return rho_; }

  // Lower edge of bucket j (j >= 1).
  [[nodiscard]] double edge(std::size_t j) const {
    return floor_ * std::pow(rho_, static_cast<double>(j) - 1.0);
  }

  [[nodiscard]] std::size_t bucket_of(double priority) const {
    if (!(priority >= floor_)) return 0;
    const std::size_t last = heads_.size() - 1;
    auto j = static_cast<std::size_t>(std::min(
        std::floor(std::log(priority / floor_) / log_rho_) + 1.0, static_cast<double>(last)));
    // Snap against the edges so membership is consistent at boundaries.
    while (j > 1 && priority < edge(j)) --j;
    while (j < last && priority >= edge(j + 1)) ++j;
    return j;
  }

 private:
  static constexpr std::uint32_t kNil = 0xffffffffu;

  struct Node {
    double priority;
    T item;
    std::uint32_t next;
  };

  double rho_;
  double floor_;
  double log_rho_ = 0.0;
  std::vector<std::uint32_t> heads_;
  std::vector<Node> nodes_;
  std::uint32_t free_ = kNil;
  std::size_t size_ = 0;
  std::size_t top_ = 0;
};

}  // namespace hnb
