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
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hnb/error.hpp"
#include "hnb/grid.hpp"

namespace hnb::glyphs {

struct Point {
  double x = 0.0;
  double y = 0.0;
};
using Polyline = std::vector<Point>;

// Stroke outline of one glyph in the unit box, y pointing down. Filled
// glyphs carry closed polygons instead of strokes.
struct Outline {
  std::vector<Polyline> strokes;
  std::vector<Polyline> fills;
};

struct Style {
  double thickness = 0.13;  // stroke width, fraction of the glyph height
  double slant = 0.0;       // horizontal shear, x += slant * (0.5 - y)
  double margin = 0.0;      // empty border, fraction of each side
  double jitter = 0.0;      // random displacement of stroke vertices
  std::uint64_t seed = 0;
};

namespace detail {

inline Polyline arc(double cx, double cy, double rx, double ry, double from_deg, double to_deg,
                    int steps = 24) {
  Polyline p;
  for (int i = 0; i <= steps; ++i) {
    const double a = (from_deg + (to_deg - from_deg) * i / steps) * std::numbers::pi / 180.0;
    p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return p;
}

inline Polyline concat(Polyline a, const Polyline& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

inline bool inside_polygon(Point p, const Polyline& poly) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

inline Polyline star(int points, double r_out, double r_in) {
  Polyline p;
  for (int i = 0; i < 2 * points; ++i) {
    const double a = -std::numbers::pi / 2 + i * std::numbers::pi / points;
    const double r = i % 2 == 0 ? r_out : r_in;
    p.push_back({0.5 + r * std::cos(a), 0.5 + r * std::sin(a)});
  }
  return p;
}

}  // namespace detail

inline const std::vector<std::string>& letters() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (char c = 'A'; c <= 'Z'; ++c) out.emplace_back(1, c);
    return out;
  }();
  return v;
}

inline const std::vector<std::string>& symbols() {
  static const std::vector<std::string> v{"square", "disc", "triangle", "club", "star"};
  return v;
}

inline Outline outline(const std::string& name) {
  using detail::arc;
  using detail::concat;
  Outline o;
  auto& s = o.strokes;
  if (name == "square") {
    o.fills.push_back({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  } else if (name == "disc") {
    o.fills.push_back(arc(0.5, 0.5, 0.5, 0.5, 0, 360, 96));
  } else if (name == "triangle") {
    o.fills.push_back({{0.5, 0}, {1, 1}, {0, 1}});
  } else if (name == "star") {
    o.fills.push_back(detail::star(5, 0.5, 0.2));
  } else if (name == "club") {
    o.fills.push_back(arc(0.5, 0.25, 0.22, 0.22, 0, 360, 48));
    o.fills.push_back(arc(0.26, 0.55, 0.22, 0.22, 0, 360, 48));
    o.fills.push_back(arc(0.74, 0.55, 0.22, 0.22, 0, 360, 48));
    o.fills.push_back({{0.44, 0.5}, {0.56, 0.5}, {0.68, 1}, {0.32, 1}});
  } else if (name.size() == 1) {
    switch (name[0]) {
      case 'A': s = {{{0.08, 1}, {0.5, 0}, {0.92, 1}}, {{0.27, 0.62}, {0.73, 0.62}}}; break;
      case 'B':
        s = {{{0.15, 0}, {0.15, 1}},
             concat({{0.15, 0}, {0.58, 0}}, concat(arc(0.58, 0.25, 0.24, 0.25, -90, 90), {{0.15, 0.5}})),
             concat({{0.15, 0.5}, {0.62, 0.5}}, concat(arc(0.62, 0.75, 0.25, 0.25, -90, 90), {{0.15, 1}}))};
        break;
      case 'C': s = {arc(0.55, 0.5, 0.45, 0.5, 40, 320)}; break;
      case 'D': s = {{{0.15, 0}, {0.15, 1}}, concat({{0.15, 0}, {0.45, 0}}, concat(arc(0.45, 0.5, 0.42, 0.5, -90, 90), {{0.15, 1}}))}; break;
      case 'E': s = {{{0.85, 0}, {0.15, 0}, {0.15, 1}, {0.85, 1}}, {{0.15, 0.5}, {0.7, 0.5}}}; break;
      case 'F': s = {{{0.85, 0}, {0.15, 0}, {0.15, 1}}, {{0.15, 0.5}, {0.7, 0.5}}}; break;
      case 'G': s = {arc(0.55, 0.5, 0.45, 0.5, 40, 320), {{0.55, 0.58}, {0.92, 0.58}, {0.92, 0.8}}}; break;
      case 'H': s = {{{0.15, 0}, {0.15, 1}}, {{0.85, 0}, {0.85, 1}}, {{0.15, 0.5}, {0.85, 0.5}}}; break;
      case 'I': s = {{{0.5, 0}, {0.5, 1}}, {{0.25, 0}, {0.75, 0}}, {{0.25, 1}, {0.75, 1}}}; break;
      case 'J': s = {concat({{0.75, 0}, {0.75, 0.7}}, arc(0.47, 0.7, 0.28, 0.3, 0, 180)), {{0.45, 0}, {0.9, 0}}}; break;
      case 'K': s = {{{0.15, 0}, {0.15, 1}}, {{0.85, 0}, {0.15, 0.6}}, {{0.38, 0.42}, {0.88, 1}}}; break;
      case 'L': s = {{{0.15, 0}, {0.15, 1}, {0.85, 1}}}; break;
      case 'M': s = {{{0.08, 1}, {0.12, 0}, {0.5, 0.65}, {0.88, 0}, {0.92, 1}}}; break;
      case 'N': s = {{{0.15, 1}, {0.15, 0}, {0.85, 1}, {0.85, 0}}}; break;
      case 'O': s = {arc(0.5, 0.5, 0.42, 0.5, 0, 360, 48)}; break;
      case 'P': s = {{{0.15, 1}, {0.15, 0}}, concat({{0.15, 0}, {0.58, 0}}, concat(arc(0.58, 0.27, 0.27, 0.27, -90, 90), {{0.15, 0.54}}))}; break;
      case 'Q': s = {arc(0.5, 0.5, 0.42, 0.5, 0, 360, 48), {{0.58, 0.7}, {0.92, 1}}}; break;
      case 'R': s = {{{0.15, 1}, {0.15, 0}}, concat({{0.15, 0}, {0.58, 0}}, concat(arc(0.58, 0.27, 0.27, 0.27, -90, 90), {{0.15, 0.54}})), {{0.5, 0.54}, {0.88, 1}}}; break;
      case 'S': s = {concat(arc(0.5, 0.25, 0.33, 0.25, -20, -270), arc(0.5, 0.75, 0.33, 0.25, -90, 160))}; break;
      case 'T': s = {{{0.08, 0}, {0.92, 0}}, {{0.5, 0}, {0.5, 1}}}; break;
      case 'U': s = {concat({{0.15, 0}, {0.15, 0.62}}, concat(arc(0.5, 0.62, 0.35, 0.38, 180, 0), {{0.85, 0}}))}; break;
      case 'V': s = {{{0.08, 0}, {0.5, 1}, {0.92, 0}}}; break;
      case 'W': s = {{{0.04, 0}, {0.26, 1}, {0.5, 0.35}, {0.74, 1}, {0.96, 0}}}; break;
      case 'X': s = {{{0.1, 0}, {0.9, 1}}, {{0.9, 0}, {0.1, 1}}}; break;
      case 'Y': s = {{{0.08, 0}, {0.5, 0.5}, {0.92, 0}}, {{0.5, 0.5}, {0.5, 1}}}; break;
      case 'Z': s = {{{0.12, 0}, {0.88, 0}, {0.12, 1}, {0.88, 1}}}; break;
      default: throw InvalidInput("no glyph named '" + name + "'");
    }
  } else {
    throw InvalidInput("no glyph named '" + name + "'");
  }
  return o;
}

// Rasterizes a glyph into a w x h mask by testing pixel centres. Strokes are
// inset by half their thickness so they touch but do not cross the frame.
inline Mask rasterize(const std::string& name, int w, int h, const Style& style = {}) {
  if (w < 1 || h < 1) throw InvalidInput("glyph extent must be positive");
  Outline o = outline(name);
  std::mt19937_64 rng(style.seed);
  std::normal_distribution<double> jit(0.0, style.jitter);
  const double half = o.strokes.empty() ? 0.0 : style.thickness / 2.0;
  const double inset = style.margin + half;
  auto place = [&](Point p) {
    if (style.jitter > 0.0) {
      p.x += jit(rng);
      p.y += jit(rng);
    }
    p.x += style.slant * (0.5 - p.y);
    return Point{inset + (1.0 - 2.0 * inset) * p.x, inset + (1.0 - 2.0 * inset) * p.y};
  };
  for (auto* group : {&o.strokes, &o.fills})
    for (Polyline& line : *group)
      for (Point& p : line) p = place(p);

  Mask out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point c{(x + 0.5) / w, (y + 0.5) / h};
      bool on = false;
      for (const Polyline& f : o.fills) {
        if (detail::inside_polygon(c, f)) {
          on = true;
          break;
        }
      }
      for (std::size_t k = 0; !on && k < o.strokes.size(); ++k) {
        const Polyline& line = o.strokes[k];
        for (std::size_t i = 0; i + 1 < line.size(); ++i) {
          if (detail::segment_distance(c, line[i], line[i + 1]) <= half) {
            on = true;
            break;
          }
        }
      }
      out(x, y) = on;
    }
  }
  return out;
}

// Training variants: stroke weight, slant and vertex jitter drawn per seed.
inline Style variant(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> thick(0.09, 0.17), slant(-0.12, 0.12);
  Style s;
  s.thickness = thick(rng);
  s.slant = slant(rng);
  s.jitter = 0.015;
  s.seed = seed;
  return s;
}

}  // namespace hnb::glyphs
