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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hnb/error.hpp"
#include "hnb/field.hpp"
#include "hnb/grid.hpp"
#include "hnb/hypotheses.hpp"

namespace hnb::pgm {

namespace fs = std::filesystem;

// Raw P5 image: samples in [0, maxval], row-major.
struct Raw {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::vector<std::uint16_t> samples;
};

inline void write_raw(const fs::path& path, const Raw& img) {
  if (img.maxval < 1 || img.maxval > 65535) throw InvalidInput("PGM maxval outside [1, 65535]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n" << img.maxval << "\n";
  const bool wide = img.maxval > 255;
  std::vector<char> bytes;
  bytes.reserve(img.samples.size() * (wide ? 2 : 1));
  for (std::uint16_t v : img.samples) {
    if (wide) bytes.push_back(static_cast<char>(v >> 8));
    bytes.push_back(static_cast<char>(v & 0xff));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

inline Raw read_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
      } else {
        t.push_back(c);
      }
    }
    return t;
  };
  if (token() != "P5") throw IoError(path.string() + " is not a binary PGM (P5)");
  Raw r;
  try {
    r.width = std::stoi(token());
    r.height = std::stoi(token());
    r.maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw IoError("malformed PGM header in " + path.string());
  }
  if (r.width < 1 || r.height < 1 || r.maxval < 1 || r.maxval > 65535) {
    throw IoError("invalid PGM header values in " + path.string());
  }
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  const bool wide = r.maxval > 255;
  std::vector<unsigned char> bytes(n * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw IoError("truncated PGM " + path.string());
  r.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.samples[i] = wide ? static_cast<std::uint16_t>(bytes[2 * i] << 8 | bytes[2 * i + 1]) : bytes[i];
    if (r.samples[i] > r.maxval) throw IoError("PGM sample exceeds maxval in " + path.string());
  }
  return r;
}

inline fs::path sidecar_path(const fs::path& path) {
  fs::path p = path;
  p += ".json";
  return p;
}

inline std::uint16_t quantize16(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

// 16-bit probability image plus a JSON sidecar with delta_max and provenance.
inline void write_probability(const fs::path& path, const ProbabilityImage& img, double delta_max,
                              const nlohmann::json& provenance = nlohmann::json::object()) {
  Raw r{img.width(), img.height(), 65535, {}};
  r.samples.reserve(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) r.samples.push_back(quantize16(img(x, y)));
  write_raw(path, r);
  std::ofstream side(sidecar_path(path));
  if (!side) throw IoError("cannot write " + sidecar_path(path).string());
  side << nlohmann::json{{"delta_max", delta_max}, {"provenance", provenance}}.dump(2) << "\n";
}

struct ProbabilityFile {
  ProbabilityImage image;
  std::optional<double> delta_max;
  nlohmann::json provenance;
};

inline ProbabilityFile read_probability(const fs::path& path) {
  const Raw r = read_raw(path);
  ProbabilityFile out;
  out.image = ProbabilityImage(r.width, r.height);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x)
      out.image.set(x, y, r.samples[static_cast<std::size_t>(y) * r.width + x] / static_cast<double>(r.maxval));
  const fs::path side = sidecar_path(path);
  if (fs::exists(side)) {
    std::ifstream in(side);
    try {
      const nlohmann::json j = nlohmann::json::parse(in);
      if (j.contains("delta_max")) out.delta_max = j.at("delta_max").get<double>();
      out.provenance = j.value("provenance", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
      throw IoError("bad sidecar " + side.string() + ": " + e.what());
    }
  }
  return out;
}

// 8-bit mask, 255 for foreground.
inline void write_mask(const fs::path& path, const Mask& m) {
  Raw r{m.width(), m.height(), 255, {}};
  for (std::uint8_t v : m.data()) r.samples.push_back(v ? 255 : 0);
  write_raw(path, r);
}

inline Mask read_mask(const fs::path& path) {
  const Raw r = read_raw(path);
  Mask m(r.width, r.height, 0);
  for (std::size_t i = 0; i < r.samples.size(); ++i) m.data()[i] = 2 * r.samples[i] > r.maxval;
  return m;
}

// 16-bit coverage fractions.
inline void write_coverage(const fs::path& path, const Grid<double>& g) {
  Raw r{g.width(), g.height(), 65535, {}};
  for (double v : g.data()) r.samples.push_back(quantize16(v));
  write_raw(path, r);
}

// ---------------------------------------------------------------------------
// Prior bundle: manifest.json plus one 16-bit PGM per class.

inline void write_bundle(const fs::path& dir, const std::vector<PriorClass>& classes, double delta_max,
                         const nlohmann::json& provenance = nlohmann::json::object()) {
  fs::create_directories(dir);
  nlohmann::json manifest{{"delta_max", delta_max}, {"provenance", provenance}, {"classes", nlohmann::json::array()}};
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const PriorClass& pc = classes[i];
    const std::string file = "prior_" + std::to_string(i) + ".pgm";
    write_probability(dir / file, pc.prior, delta_max, {{"class", pc.id}});
    const Region& s = pc.support;
    manifest["classes"].push_back(
        {{"id", pc.id}, {"label", pc.label}, {"file", file}, {"support", {s.x0, s.y0, s.w, s.h}}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

struct Bundle {
  std::vector<PriorClass> classes;
  double delta_max = 5.0;
  nlohmann::json provenance;
};

inline Bundle read_bundle(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  std::ifstream in(mpath);
  if (!in) throw IoError("cannot open " + mpath.string());
  Bundle b;
  try {
    const nlohmann::json m = nlohmann::json::parse(in);
    b.delta_max = m.value("delta_max", 5.0);
    b.provenance = m.value("provenance", nlohmann::json::object());
    for (const auto& c : m.at("classes")) {
      PriorClass pc;
      pc.id = c.at("id").get<std::string>();
      pc.label = c.value("label", pc.id);
      pc.prior = read_probability(dir / c.at("file").get<std::string>()).image;
      const auto s = c.at("support").get<std::vector<int>>();
      if (s.size() != 4) throw IoError("support must be [x0, y0, w, h]");
      pc.support = Region{s[0], s[1], s[2], s[3]};
      b.classes.push_back(std::move(pc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad manifest " + mpath.string() + ": " + e.what());
  }
  return b;
}

}  // namespace hnb::pgm
