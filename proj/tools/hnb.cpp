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

// Command-line driver: prior bundles, synthetic images, matching runs,
// exact-evidence oracle, resolution sweeps and confusion matrices.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hnb/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kEmptySpace = 3,
  kBudget = 4,
  kIo = 5,
};

// Flags shared by every scenario-driven subcommand; each one overrides the
// matching scenario key, so reports embed the configuration actually run.
struct Overrides {
  std::optional<int> m;
  std::optional<double> delta_max;
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> max_cycles;
  std::optional<unsigned> parallel;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    app->add_option("--m", m, "summary resolution m (>= 1)");
    app->add_option("--delta-max", delta_max, "log-odds clamp");
    app->add_option("--strategy", strategy, "potential_reduction or max_upper")
        ->check(CLI::IsMember({"potential_reduction", "max_upper"}));
    app->add_option("--max-cycles", max_cycles, "refinement budget");
    app->add_option("--parallel", parallel, "hypotheses refined per batch");
    app->add_option("--seed", seed, "scenario seed (noise, training variants)");
  }

  void apply(json& j) const {
    if (m) j["m"] = *m;
    if (delta_max) j["delta_max"] = *delta_max;
    if (seed) {
      j["seed"] = *seed;
      // An explicit noise seed would shadow the scenario seed.
      if (j.contains("image") && j["image"].contains("noise") && j["image"]["noise"].is_object())
        j["image"]["noise"].erase("seed");
    }
    if (strategy) j["foam"]["strategy"] = *strategy;
    if (max_cycles) j["foam"]["max_cycles"] = *max_cycles;
    if (parallel) j["foam"]["parallel"] = *parallel;
  }
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw hnb::IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw hnb::InvalidConfiguration("cannot parse " + path.string() + ": " + e.what());
  }
}

hnb::Scenario load(const fs::path& path, const Overrides& o, int scale = 1) {
  json j = read_json(path);
  if (scale != 1) j = hnb::scale_scenario(j, scale);
  o.apply(j);
  return hnb::parse_scenario(j, path.parent_path());
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_out(const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw hnb::IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

// Class label of a training mask: file stem up to the first '_'.
std::string label_of(const fs::path& p) {
  const std::string stem = p.stem().string();
  return stem.substr(0, stem.find('_'));
}

// ---------------------------------------------------------------------------
// Subcommands

struct RenderArgs {
  std::vector<std::string> names;
  int size = 32;
  int variants = 1;
  std::uint64_t seed = 0;
  fs::path out = "glyphs";
};

int cmd_render(const RenderArgs& a) {
  fs::create_directories(a.out);
  for (const std::string& name : a.names) {
    for (int i = 0; i < a.variants; ++i) {
      const hnb::glyphs::Style style =
          a.variants == 1 ? hnb::glyphs::Style{} : hnb::glyphs::variant(a.seed * 1000003u + static_cast<std::uint64_t>(i));
      hnb::pgm::write_mask(a.out / (name + "_" + std::to_string(i) + ".pgm"),
                           hnb::glyphs::rasterize(name, a.size, a.size, style));
    }
  }
  return kOk;
}

struct MakePriorArgs {
  fs::path shapes;
  fs::path out;
  std::size_t clusters = 1;
  int align_shift = 2;
  std::uint64_t seed = 0;
  double delta_max = 5.0;
};

int cmd_make_prior(const MakePriorArgs& a) {
  if (!fs::is_directory(a.shapes)) throw hnb::IoError("not a directory: " + a.shapes.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.shapes))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  if (files.empty()) throw hnb::IoError("no .pgm shapes in " + a.shapes.string());
  std::sort(files.begin(), files.end());

  std::map<std::string, std::vector<fs::path>> by_label;
  for (const auto& f : files) by_label[label_of(f)].push_back(f);

  const hnb::AlignSearch search{hnb::HypothesisGrid::range(-a.align_shift, a.align_shift),
                                hnb::HypothesisGrid::range(-a.align_shift, a.align_shift), {1.0}, {1.0}};
  std::vector<hnb::PriorClass> classes;
  json prov{{"source", a.shapes.string()}, {"clusters_per_class", a.clusters}, {"align_shift", a.align_shift},
            {"seed", a.seed}, {"classes", json::object()}};
  for (const auto& [label, paths] : by_label) {
    std::vector<hnb::Mask> shapes;
    for (const auto& p : paths) shapes.push_back(hnb::pgm::read_mask(p));
    hnb::Clustering info;
    auto priors = hnb::build_priors(shapes, std::min(a.clusters, shapes.size()), a.seed, search, label, &info);
    json members = json::array();
    for (const auto& p : paths) members.push_back(p.filename().string());
    prov["classes"][label] = {{"files", members}, {"medoids", info.medoids}, {"objective", info.objective}};
    for (auto& p : priors) classes.push_back(std::move(p));
  }
  hnb::pgm::write_bundle(a.out, classes, a.delta_max, prov);
  std::cout << "wrote " << classes.size() << " priors for " << by_label.size() << " classes to " << a.out.string()
            << "\n";
  return kOk;
}

struct SynthArgs {
  fs::path scenario;
  fs::path out;
  std::optional<fs::path> clean;
  std::optional<fs::path> truth;
};

int cmd_synth(const SynthArgs& a, const Overrides& o) {
  const hnb::Scenario s = load(a.scenario, o);
  const hnb::SynthesizedImage img = hnb::synthesize(s);
  const json prov{{"scenario", s.name}, {"seed", s.seed}};
  for (const auto& p : {std::optional<fs::path>(a.out), a.clean, a.truth})
    if (p) ensure_parent(*p);
  hnb::pgm::write_probability(a.out, img.noisy, s.delta_max, prov);
  if (a.clean) hnb::pgm::write_probability(*a.clean, img.clean, s.delta_max, prov);
  if (a.truth) hnb::pgm::write_mask(*a.truth, img.truth);
  return kOk;
}

struct MatchArgs {
  fs::path scenario;
  fs::path out = "run";
};

int cmd_match(const MatchArgs& a, const Overrides& o) {
  const hnb::Scenario s = load(a.scenario, o);
  const hnb::Prepared p = hnb::prepare(s);
  hnb::RunReport r = hnb::run_experiment(s, p);
  hnb::write_artifacts(a.out, r, p);
  std::cout << s.name << ": " << to_string(r.result.status) << ", " << r.solutions.size() << " of "
            << r.hypothesis_count << " hypotheses remain, tau " << r.result.tau() << "\n";
  return r.result.status == hnb::Status::budget_exhausted ? kBudget : kOk;
}

struct OracleArgs {
  fs::path scenario;
  fs::path out = "oracle.csv";
};

int cmd_oracle(const OracleArgs& a, const Overrides& o) {
  const hnb::Scenario s = load(a.scenario, o);
  const hnb::Prepared p = hnb::prepare(s);
  std::ofstream out = open_out(a.out);
  out << "id,class_id,label,tx,ty,sx,sy,evidence,is_argmax\n";
  for (const auto& r : hnb::oracle_evidence(p)) {
    out << r.id << "," << r.class_id << "," << r.label << "," << r.transform.tx << "," << r.transform.ty << ","
        << r.transform.sx << "," << r.transform.sy << "," << r.evidence << "," << (r.is_argmax ? 1 : 0) << "\n";
  }
  return kOk;
}

struct BenchArgs {
  std::vector<fs::path> scenarios;
  std::vector<int> scales{1, 2};
  fs::path out = "bench.csv";
};

int cmd_bench(const BenchArgs& a, const Overrides& o) {
  std::ofstream out = open_out(a.out);
  out << "scenario,scale,width,height,strategy,hypotheses,solutions,status,total_cycles,total_bound_pairs,tau,"
         "elapsed_ms\n";
  bool exhausted = false;
  for (const auto& path : a.scenarios) {
    for (int k : a.scales) {
      if (k < 1) throw hnb::InvalidConfiguration("scale factors must be >= 1");
      const hnb::Scenario s = load(path, o, k);
      const hnb::Prepared p = hnb::prepare(s);
      const hnb::RunReport r = hnb::run_experiment(s, p);
      exhausted |= r.result.status == hnb::Status::budget_exhausted;
      out << s.name << "," << k << "," << p.field.width() << "," << p.field.height() << ","
          << to_string(s.foam.strategy) << "," << r.hypothesis_count << "," << r.solutions.size() << ","
          << to_string(r.result.status) << "," << r.result.total_cycles << "," << r.result.total_bound_pairs << ","
          << r.result.tau() << "," << r.elapsed_ms << "\n";
    }
  }
  return exhausted ? kBudget : kOk;
}

struct ConfusionArgs {
  fs::path reports;
  fs::path out = "confusion.csv";
  std::optional<fs::path> summary;
};

int cmd_confusion(const ConfusionArgs& a) {
  if (!fs::is_directory(a.reports)) throw hnb::IoError("not a directory: " + a.reports.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a.reports))
    if (e.is_regular_file() && e.path().filename() == "report.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<hnb::LabelledRun> runs;
  for (const auto& f : files) {
    const json j = read_json(f);
    if (!j.contains("truth")) continue;
    hnb::LabelledRun run;
    try {
      run.truth = j.at("truth").at("label").get<std::string>();
      for (const auto& s : j.at("solutions")) {
        run.solutions.push_back({s.at("id").get<std::size_t>(), s.at("label").get<std::string>(),
                                 s.at("lower").get<double>(), s.at("upper").get<double>()});
      }
    } catch (const json::exception& e) {
      throw hnb::InvalidConfiguration("bad report " + f.string() + ": " + e.what());
    }
    runs.push_back(std::move(run));
  }
  if (runs.empty()) throw hnb::IoError("no report.json with a truth label under " + a.reports.string());

  std::ofstream out = open_out(a.out);
  out << "beta,truth,label,count,fraction\n";
  std::ostringstream totals;
  totals << std::setprecision(17) << "beta,images,solutions,p_total\n";
  for (double beta : {0.0, 0.5, 1.0}) {
    const hnb::ConfusionMatrix cm = hnb::confusion(runs, beta);
    const auto frac = cm.fractions();
    std::size_t solutions = 0;
    for (std::size_t i = 0; i < cm.labels.size(); ++i) {
      for (std::size_t j = 0; j < cm.labels.size(); ++j) {
        solutions += cm.counts[i][j];
        out << beta << "," << cm.labels[i] << "," << cm.labels[j] << "," << cm.counts[i][j] << "," << frac[i][j]
            << "\n";
      }
    }
    totals << beta << "," << runs.size() << "," << solutions << "," << cm.p_total << "\n";
  }
  if (a.summary) {
    std::ofstream s = open_out(*a.summary);
    s << totals.str();
  } else {
    std::cout << totals.str();
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypothesize-and-bound shape matching"};
  app.require_subcommand(1);
  Overrides over;

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "rasterize built-in glyphs to binary PGM masks");
  render->add_option("names", ra.names, "glyph names (A-Z, square, disc, triangle, club, star)")->required();
  render->add_option("--size", ra.size, "mask width and height")->check(CLI::PositiveNumber);
  render->add_option("--variants", ra.variants, "style variants per glyph")->check(CLI::PositiveNumber);
  render->add_option("--seed", ra.seed, "variant seed");
  render->add_option("-o,--out", ra.out, "output directory");

  MakePriorArgs mp;
  auto* make_prior = app.add_subcommand("make-prior", "cluster training masks into a prior bundle");
  make_prior->add_option("shapes", mp.shapes, "directory of <label>_<n>.pgm masks")->required();
  make_prior->add_option("-o,--out", mp.out, "bundle directory")->required();
  make_prior->add_option("--clusters", mp.clusters, "priors per class")->check(CLI::PositiveNumber);
  make_prior->add_option("--align-shift", mp.align_shift, "alignment search radius in pixels");
  make_prior->add_option("--seed", mp.seed, "k-medoids seed");
  make_prior->add_option("--delta-max", mp.delta_max, "log-odds clamp recorded in the bundle");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "render a scenario's (noisy) probability image");
  synth->add_option("scenario", sa.scenario, "scenario JSON")->required();
  synth->add_option("-o,--out", sa.out, "noisy image PGM")->required();
  synth->add_option("--clean", sa.clean, "also write the noiseless image");
  synth->add_option("--truth", sa.truth, "also write the true foreground mask");
  over.add_to(synth);

  MatchArgs ma;
  auto* match = app.add_subcommand("match", "run the scheduler on a scenario");
  match->add_option("scenario", ma.scenario, "scenario JSON")->required();
  match->add_option("-o,--out", ma.out, "output directory");
  over.add_to(match);

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "exact evidence of every hypothesis");
  oracle->add_option("scenario", oa.scenario, "scenario JSON")->required();
  oracle->add_option("-o,--out", oa.out, "CSV path");
  over.add_to(oracle);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "resolution sweep of one or more scenarios");
  bench->add_option("scenarios", ba.scenarios, "scenario JSON files")->required();
  bench->add_option("--scales", ba.scales, "integer resolution factors")->delimiter(',');
  bench->add_option("-o,--out", ba.out, "CSV path");
  over.add_to(bench);

  ConfusionArgs ca;
  auto* conf = app.add_subcommand("confusion", "confusion matrices over a directory of reports");
  conf->add_option("reports", ca.reports, "directory searched for report.json")->required();
  conf->add_option("-o,--out", ca.out, "matrix CSV path");
  conf->add_option("--summary", ca.summary, "P_beta CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*render) return cmd_render(ra);
    if (*make_prior) return cmd_make_prior(mp);
    if (*synth) return cmd_synth(sa, over);
    if (*match) return cmd_match(ma, over);
    if (*oracle) return cmd_oracle(oa, over);
    if (*bench) return cmd_bench(ba, over);
    if (*conf) return cmd_confusion(ca);
  } catch (const hnb::EmptyHypothesisSpace& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEmptySpace;
  } catch (const hnb::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const hnb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
