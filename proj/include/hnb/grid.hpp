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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hnb/error.hpp"

namespace hnb {

// Axis-aligned pixel rectangle, top-left inclusive.
struct Region {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  [[nodiscard]] std::int64_t area() const { return std::int64_t{w} * h; }
  [[nodiscard]] int x1() const { return x0 + w; }
  [[nodiscard]] int y1() const { return y0 + h; }
  [[nodiscard]] bool empty() const { return w <= 0 || h <= 0; }

  [[nodiscard]] bool inside(int width, int height) const {
    return w >= 1 && h >= 1 && x0 >= 0 && y0 >= 0 && x1() <= width && y1() <= height;
  }

  [[nodiscard]] Region shifted(int dx, int dy) const { return {x0 + dx, y0 + dy, w, h}; }

  friend bool operator==(const Region&, const Region&) = default;
};

inline std::string to_string(const Region& r) {
  return "[" + std::to_string(r.x0) + "," + std::to_string(r.y0) + " " + std::to_string(r.w) +
         "x" + std::to_string(r.h) + "]";
}

// Dense row-major 2D array.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidInput("grid extent must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }
  [[nodiscard]] Region bounds() const { return {0, 0, width_, height_}; }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  T& at(int x, int y) {
    check(x, y);
    return data_[index(x, y)];
  }
  const T& at(int x, int y) const {
    check(x, y);
    return data_[index(x, y)];
  }

  [[nodiscard]] std::vector<T>& data() { return data_; }
  [[nodiscard]] const std::vector<T>& data() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  void check(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) {
      throw RangeError("pixel (" + std::to_string(x) + "," + std::to_string(y) +
                       ") outside grid");
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

}  // namespace hnb
