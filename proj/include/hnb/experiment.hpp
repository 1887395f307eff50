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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hnb/bounds.hpp"
#include "hnb/field.hpp"
#include "hnb/foam.hpp"
#include "hnb/glyphs.hpp"
#include "hnb/hypotheses.hpp"
#include "hnb/metrics.hpp"
#include "hnb/pgm.hpp"
#include "hnb/search.hpp"
#include "hnb/shapes.hpp"

namespace hnb {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Scenario description

struct ObjectSpec {
  std::string glyph;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  double fg = 0.98;
  glyphs::Style style;
};

struct ImageSpec {
  int width = 0;
  int height = 0;
  double background = 0.02;
  std::vector<ObjectSpec> objects;
  std::optional<NoiseSpec> noise;
  std::optional<fs::path> pgm;  // use a stored probability image instead
};

struct PriorGlyphSpec {
  std::string name;
  std::string label;
  int width = 0;
  int height = 0;
  double fg = 0.98;
  double bg = 0.02;
  glyphs::Style style;
};

struct TrainSpec {
  std::vector<std::string> classes;
  int variants = 6;
  int clusters = 1;
  int size = 32;
  std::uint64_t seed = 0;
  AlignSearch search{HypothesisGrid::range(-2, 2), HypothesisGrid::range(-2, 2), {1.0}, {1.0}};
};

struct PriorSpec {
  std::optional<fs::path> bundle;
  std::vector<PriorGlyphSpec> glyphs;
  std::optional<TrainSpec> train;
};

struct TruthSpec {
  std::string label;
  ScaleTranslate transform;  // frame translation and scale of the true prior
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  int m = 4;
  double delta_max = 5.0;
  ImageSpec image;
  PriorSpec priors;
  HypothesisGrid grid;
  std::vector<std::string> grid_labels;  // empty: every class
  std::optional<TruthSpec> truth;
  FoamConfig foam;
  json raw;
  fs::path base_dir;
};

namespace detail {

inline glyphs::Style parse_style(const json& j) {
  glyphs::Style s;
  if (j.is_null()) return s;
  s.thickness = j.value("thickness", s.thickness);
  s.slant = j.value("slant", s.slant);
  s.margin = j.value("margin", s.margin);
  s.jitter = j.value("jitter", s.jitter);
  s.seed = j.value("seed", s.seed);
  return s;
}

inline std::vector<int> parse_axis(const json& j, const char* list, const char* range,
                                   std::vector<int> fallback) {
  if (j.contains(list)) return j.at(list).get<std::vector<int>>();
  if (j.contains(range)) {
    const auto r = j.at(range).get<std::vector<int>>();
    if (r.size() != 2 || r[0] > r[1]) throw InvalidConfiguration(std::string(range) + " must be [lo, hi]");
    return HypothesisGrid::range(r[0], r[1]);
  }
  return fallback;
}

inline NoiseSpec parse_noise(const json& j, std::uint64_t seed) {
  NoiseSpec n;
  n.seed = j.value("seed", seed);
  const std::string type = j.at("type").get<std::string>();
  if (type == "gaussian") {
    n.variant = GaussianNoise{j.at("sigma").get<double>()};
  } else if (type == "salt_pepper") {
    n.variant = SaltPepperNoise{j.at("probability").get<double>()};
  } else if (type == "structured") {
    n.variant = StructuredNoise{j.at("ell").get<int>()};
  } else {
    throw InvalidConfiguration("unknown noise type '" + type + "'");
  }
  return n;
}

}  // namespace detail

inline Scenario parse_scenario(const json& j, const fs::path& base_dir = {}) {
  Scenario s;
  try {
    s.raw = j;
    s.base_dir = base_dir;
    s.name = j.value("name", s.name);
    s.seed = j.value("seed", s.seed);
    s.m = j.value("m", s.m);
    s.delta_max = j.value("delta_max", s.delta_max);

    const json& im = j.at("image");
    if (im.contains("pgm")) s.image.pgm = base_dir / im.at("pgm").get<std::string>();
    s.image.width = im.value("width", 0);
    s.image.height = im.value("height", 0);
    s.image.background = im.value("background", s.image.background);
    for (const json& o : im.value("objects", json::array())) {
      ObjectSpec os;
      os.glyph = o.at("glyph").get<std::string>();
      os.x = o.value("x", 0);
      os.y = o.value("y", 0);
      os.width = o.at("width").get<int>();
      os.height = o.value("height", os.width);
      os.fg = o.value("fg", os.fg);
      os.style = detail::parse_style(o.value("style", json()));
      s.image.objects.push_back(os);
    }
    if (im.contains("noise") && !im.at("noise").is_null()) s.image.noise = detail::parse_noise(im.at("noise"), s.seed);

    const json& pr = j.at("priors");
    if (pr.contains("bundle")) s.priors.bundle = base_dir / pr.at("bundle").get<std::string>();
    for (const json& g : pr.value("glyphs", json::array())) {
      PriorGlyphSpec ps;
      ps.name = g.at("name").get<std::string>();
      ps.label = g.value("label", ps.name);
      ps.width = g.at("width").get<int>();
      ps.height = g.value("height", ps.width);
      ps.fg = g.value("fg", ps.fg);
      ps.bg = g.value("bg", ps.bg);
      ps.style = detail::parse_style(g.value("style", json()));
      s.priors.glyphs.push_back(ps);
    }
    if (pr.contains("train")) {
      const json& t = pr.at("train");
      TrainSpec ts;
      ts.classes = t.at("classes").get<std::vector<std::string>>();
      ts.variants = t.value("variants", ts.variants);
      ts.clusters = t.value("clusters", ts.clusters);
      ts.size = t.value("size", ts.size);
      ts.seed = t.value("seed", s.seed);
      const int shift = t.value("align_shift", 2);
      ts.search.tx = ts.search.ty = HypothesisGrid::range(-shift, shift);
      s.priors.train = ts;
    }

    const json& g = j.at("grid");
    s.grid.tx = detail::parse_axis(g, "tx", "tx_range", {0});
    s.grid.ty = detail::parse_axis(g, "ty", "ty_range", {0});
    if (g.contains("translations")) {
      for (const auto& t : g.at("translations")) s.grid.translations.push_back({t.at(0).get<int>(), t.at(1).get<int>()});
    }
    s.grid.sx = g.value("sx", std::vector<double>{1.0});
    s.grid.sy = g.value("sy", std::vector<double>{1.0});
    if (g.contains("anchor")) {
      const auto a = g.at("anchor").get<std::vector<int>>();
      if (a.size() != 2) throw InvalidConfiguration("anchor must be [x, y]");
      s.grid.anchor = std::array<int, 2>{a[0], a[1]};
    }
    s.grid_labels = g.value("classes", std::vector<std::string>{});

    if (j.contains("truth") && !j.at("truth").is_null()) {
      const json& t = j.at("truth");
      s.truth = TruthSpec{t.at("label").get<std::string>(),
                          ScaleTranslate{t.value("sx", 1.0), t.value("sy", 1.0), t.value("x", 0), t.value("y", 0)}};
    }

    const json f = j.value("foam", json::object());
    s.foam.alpha = f.value("alpha", s.foam.alpha);
    s.foam.beta = f.value("beta", s.foam.beta);
    s.foam.rho = f.value("rho", s.foam.rho);
    if (f.contains("max_cycles") && !f.at("max_cycles").is_null()) s.foam.max_cycles = f.at("max_cycles").get<std::uint64_t>();
    const std::string strategy = f.value("strategy", std::string("potential_reduction"));
    if (strategy == "potential_reduction") {
      s.foam.strategy = Strategy::potential_reduction;
    } else if (strategy == "max_upper") {
      s.foam.strategy = Strategy::max_upper;
    } else {
      throw InvalidConfiguration("unknown strategy '" + strategy + "'");
    }
    s.foam.parallel = f.value("parallel", 1u);
    s.foam.record_trace = j.value("trace", false);
  } catch (const json::exception& e) {
    throw InvalidConfiguration("scenario '" + s.name + "': " + e.what());
  }
  if (s.m < 1) throw InvalidConfiguration("m must be >= 1");
  ClampPolicy{s.delta_max}.validate();
  s.foam.validate();
  if (!s.image.pgm && (s.image.width < 1 || s.image.height < 1)) {
    throw InvalidConfiguration("image needs a positive width and height or a pgm path");
  }
  if (!s.priors.bundle && s.priors.glyphs.empty() && !s.priors.train) {
    throw InvalidConfiguration("scenario defines no priors");
  }
  return s;
}

inline Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidConfiguration("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_scenario(j, path.parent_path());
}

// Same scenario with every pixel quantity multiplied by `k`.
inline json scale_scenario(json j, int k) {
  auto mul = [k](json& v) {
    if (v.is_number_integer()) v = v.get<int>() * k;
  };
  auto mul_list = [&](json& v) {
    for (auto& e : v) {
      if (e.is_array()) {
        for (auto& x : e) mul(x);
      } else {
        mul(e);
      }
    }
  };
  json& im = j["image"];
  for (const char* key : {"width", "height"})
    if (im.contains(key)) mul(im[key]);
  for (auto& o : im["objects"])
    for (const char* key : {"x", "y", "width", "height"})
      if (o.contains(key)) mul(o[key]);
  for (auto& g : j["priors"]["glyphs"])
    for (const char* key : {"width", "height"})
      if (g.contains(key)) mul(g[key]);
  json& g = j["grid"];
  for (const char* key : {"tx", "ty", "tx_range", "ty_range", "translations", "anchor"})
    if (g.contains(key)) mul_list(g[key]);
  if (j.contains("truth"))
    for (const char* key : {"x", "y"})
      if (j["truth"].contains(key)) mul(j["truth"][key]);
  if (j.contains("name")) j["name"] = j["name"].get<std::string>() + "@x" + std::to_string(k);
  return j;
}

// ---------------------------------------------------------------------------
// Inputs

struct SynthesizedImage {
  ProbabilityImage clean;
  ProbabilityImage noisy;
  Mask truth;
};

inline SynthesizedImage synthesize(const Scenario& s) {
  SynthesizedImage out;
  if (s.image.pgm) {
    out.clean = pgm::read_probability(*s.image.pgm).image;
    out.truth = Mask(out.clean.width(), out.clean.height(), 0);
  } else {
    out.clean = ProbabilityImage(s.image.width, s.image.height, s.image.background);
    out.truth = Mask(s.image.width, s.image.height, 0);
    for (const ObjectSpec& o : s.image.objects) {
      const Mask g = glyphs::rasterize(o.glyph, o.width, o.height, o.style);
      for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
          const int u = o.x + x, v = o.y + y;
          if (!g(x, y) || u < 0 || v < 0 || u >= out.clean.width() || v >= out.clean.height()) continue;
          out.clean.set(u, v, o.fg);
          out.truth(u, v) = 1;
        }
      }
    }
  }
  out.noisy = s.image.noise ? apply_noise(out.clean, *s.image.noise) : out.clean;
  return out;
}

inline PriorClass glyph_prior(const PriorGlyphSpec& g) {
  const Mask m = glyphs::rasterize(g.name, g.width, g.height, g.style);
  PriorClass pc;
  pc.id = g.label;
  pc.label = g.label;
  pc.prior = binary_shape_to_probability(m, g.fg, g.bg);
  pc.support = *nonzero_bbox(pc.prior);
  return pc;
}

// Training masks of one glyph: `count` style variants.
inline std::vector<Mask> training_shapes(const std::string& glyph, int count, int size, std::uint64_t seed) {
  std::vector<Mask> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(glyphs::rasterize(glyph, size, size, glyphs::variant(seed * 1000003u + static_cast<std::uint64_t>(i) * 7919u + glyph[0])));
  }
  return out;
}

inline std::vector<PriorClass> build_classes(const Scenario& s) {
  std::vector<PriorClass> out;
  if (s.priors.bundle) {
    auto b = pgm::read_bundle(*s.priors.bundle);
    for (auto& c : b.classes) out.push_back(std::move(c));
  }
  for (const auto& g : s.priors.glyphs) out.push_back(glyph_prior(g));
  if (s.priors.train) {
    const TrainSpec& t = *s.priors.train;
    for (const std::string& c : t.classes) {
      auto priors = build_priors(training_shapes(c, t.variants, t.size, t.seed),
                                 static_cast<std::size_t>(t.clusters), t.seed, t.search, c);
      for (auto& p : priors) out.push_back(std::move(p));
    }
  }
  for (const auto& c : out) validate_prior(c);
  return out;
}

// ---------------------------------------------------------------------------
// Running a scenario

struct SolutionRecord {
  std::size_t id = 0;
  std::string label;
  ScaleTranslate transform;
  Region support;
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t cycles = 0;
};

struct RunReport {
  std::string name;
  json config;
  std::size_t hypothesis_count = 0;
  FoamResult result;
  std::vector<SolutionRecord> solutions;
  std::optional<MetricsSummary> metrics;
  std::optional<std::string> truth_label;
  std::optional<std::size_t> truth_id;
  bool truth_in_solutions = false;
  double elapsed_ms = 0.0;
  json artifacts = json::object();

  [[nodiscard]] json to_json() const;
};

inline json RunReport::to_json() const {
  json sols = json::array();
  for (const auto& s : solutions) {
    sols.push_back({{"id", s.id},
                    {"label", s.label},
                    {"tx", s.transform.tx},
                    {"ty", s.transform.ty},
                    {"sx", s.transform.sx},
                    {"sy", s.transform.sy},
                    {"support", {s.support.x0, s.support.y0, s.support.w, s.support.h}},
                    {"lower", s.lower},
                    {"upper", s.upper},
                    {"cycles", s.cycles}});
  }
  json j{{"name", name},
         {"config", config},
         {"status", to_string(result.status)},
         {"hypothesis_count", hypothesis_count},
         {"gamma", result.gamma},
         {"total_cycles", result.total_cycles},
         {"total_bound_pairs", result.total_bound_pairs},
         {"tau", result.tau()},
         {"solutions", sols},
         {"elapsed_ms", elapsed_ms},
         {"artifacts", artifacts}};
  if (metrics) {
    j["metrics"] = {{"mu_t", metrics->mu_t},       {"sigma_t", metrics->sigma_t},
                    {"mu_s", metrics->mu_s},       {"sigma_s", metrics->sigma_s},
                    {"tau", metrics->tau},         {"solution_count", metrics->solution_count}};
  }
  if (truth_label) {
    j["truth"] = {{"label", *truth_label},
                  {"id", truth_id ? json(*truth_id) : json()},
                  {"in_solutions", truth_in_solutions}};
  }
  return j;
}

struct Prepared {
  SynthesizedImage image;
  BernoulliField field;
  std::shared_ptr<const SummaryTables> tables;
  std::unique_ptr<PriorCache> priors;
  std::vector<Hypothesis> hypotheses;
};

inline Prepared prepare(const Scenario& s) {
  Prepared p;
  p.image = synthesize(s);
  const ClampPolicy policy{s.delta_max};
  p.field = from_probabilities(p.image.noisy, policy);
  p.tables = std::make_shared<const SummaryTables>(p.field, s.m);
  p.priors = std::make_unique<PriorCache>(build_classes(s), policy, s.m);
  HypothesisGrid grid = s.grid;
  grid.classes.clear();
  const auto& classes = p.priors->classes();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (s.grid_labels.empty() ||
        std::find(s.grid_labels.begin(), s.grid_labels.end(), classes[i].label) != s.grid_labels.end()) {
      grid.classes.push_back(i);
    }
  }
  if (grid.classes.empty()) throw EmptyHypothesisSpace("no prior class matches the grid's class list");
  PriorCache& cache = *p.priors;
  p.hypotheses = enumerate(grid, p.field.width(), p.field.height(),
                           [&](std::size_t c, double sx, double sy) { return cache.get(c, sx, sy)->support; });
  return p;
}

inline Pose pose_of(const Region& support, double sx, double sy) {
  return Pose{support.x0 + support.w / 2.0, support.y0 + support.h / 2.0, sx, sy};
}

// Bounds of one hypothesis replayed to the state the scheduler left it in.
inline HypothesisBounds replay(const Prepared& p, std::size_t id, std::uint64_t cycles) {
  HypothesisBounds b = init_bounds(p.tables, *p.priors, p.hypotheses[id]);
  for (std::uint64_t i = 0; i < cycles; ++i) b.refine_once();
  return b;
}

inline RunReport run_experiment(const Scenario& s, const Prepared& p) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport r;
  r.name = s.name;
  r.config = s.raw;
  r.hypothesis_count = p.hypotheses.size();
  r.result = run(p.hypotheses, p.tables, *p.priors, s.foam);
  const auto& classes = p.priors->classes();
  for (std::size_t id : r.result.solutions) {
    const Hypothesis& h = p.hypotheses[id];
    r.solutions.push_back({id, classes[h.class_index].label, h.transform, h.support_img, r.result.lower[id],
                           r.result.upper[id], r.result.cycles[id]});
  }
  if (s.truth) {
    r.truth_label = s.truth->label;
    for (const Hypothesis& h : p.hypotheses) {
      if (classes[h.class_index].label == s.truth->label && h.transform == s.truth->transform) {
        r.truth_id = h.id;
        break;
      }
    }
    r.truth_in_solutions = r.truth_id && std::binary_search(r.result.solutions.begin(), r.result.solutions.end(), *r.truth_id);
    // Truth pose from the support of the first class carrying the true label.
    for (std::size_t c = 0; c < classes.size(); ++c) {
      if (classes[c].label != s.truth->label) continue;
      const ScaleTranslate& t = s.truth->transform;
      const Region sup = p.priors->get(c, t.sx, t.sy)->support.shifted(t.tx, t.ty);
      std::vector<Pose> poses;
      for (const auto& sol : r.solutions)
        poses.push_back(pose_of(sol.support, sol.transform.sx, sol.transform.sy));
      r.metrics = pose_metrics(poses, pose_of(sup, t.sx, t.sy));
      break;
    }
  }
  if (!r.metrics) {
    r.metrics = MetricsSummary{};
    r.metrics->solution_count = r.solutions.size();
  }
  r.metrics->tau = r.result.tau();
  r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline RunReport run_experiment(const Scenario& s) { return run_experiment(s, prepare(s)); }

// Exact evidence of every hypothesis; the argmax set is every hypothesis whose
// evidence equals the maximum.
struct OracleRow {
  std::size_t id = 0;
  std::string label;
  std::string class_id;
  ScaleTranslate transform;
  double evidence = 0.0;
  bool is_argmax = false;
};

inline std::vector<OracleRow> oracle_evidence(const Prepared& p) {
  const std::vector<double> ev = exact_evidence_all(p.hypotheses, p.field, *p.priors);
  const double best = *std::max_element(ev.begin(), ev.end());
  const auto& classes = p.priors->classes();
  std::vector<OracleRow> out;
  out.reserve(ev.size());
  for (const Hypothesis& h : p.hypotheses) {
    const PriorClass& c = classes[h.class_index];
    out.push_back({h.id, c.label, c.id, h.transform, ev[h.id], ev[h.id] == best});
  }
  return out;
}

// Writes report.json, trace.jsonl and the best solution's shapes into `dir`.
inline void write_artifacts(const fs::path& dir, RunReport& r, const Prepared& p) {
  fs::create_directories(dir);
  if (!r.result.trace.empty()) {
    std::ofstream t(dir / "trace.jsonl");
    if (!t) throw IoError("cannot write trace in " + dir.string());
    write_trace_jsonl(t, r.result.trace);
    r.artifacts["trace"] = "trace.jsonl";
  }
  if (!r.solutions.empty()) {
    const auto best = std::max_element(r.solutions.begin(), r.solutions.end(),
                                       [](const auto& a, const auto& b) { return a.lower < b.lower; });
    const HypothesisBounds b = replay(p, best->id, best->cycles);
    const Region frame = p.field.bounds();
    pgm::write_mask(dir / "shape_discrete.pgm", b.extract_discrete_shape().rasterize(frame));
    pgm::write_coverage(dir / "shape_semidiscrete.pgm", b.extract_semidiscrete_shape().rasterize(frame));
    r.artifacts["shape_discrete"] = "shape_discrete.pgm";
    r.artifacts["shape_semidiscrete"] = "shape_semidiscrete.pgm";
    r.artifacts["best_solution"] = best->id;
  }
  std::ofstream out(dir / "report.json");
  if (!out) throw IoError("cannot write report in " + dir.string());
  out << r.to_json().dump(2) << "\n";
}

}  // namespace hnb
