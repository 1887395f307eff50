#include <catch_amalgamated.hpp>

#include "hnb/experiment.hpp"

using namespace hnb;

namespace {

json small_scenario() {
  return json::parse(R"({
    "name": "small",
    "seed": 7,
    "m": 3,
    "image": {"width": 48, "height": 40,
              "objects": [{"glyph": "H", "x": 12, "y": 9, "width": 20}]},
    "priors": {"glyphs": [{"name": "H", "width": 20}, {"name": "disc", "width": 20, "label": "O"}]},
    "grid": {"tx_range": [6, 18], "ty_range": [3, 15]},
    "truth": {"label": "H", "x": 12, "y": 9},
    "trace": true
  })");
}

}  // namespace

TEST_CASE("scenario parsing", "[experiment]") {
  const Scenario s = parse_scenario(small_scenario());
  CHECK(s.name == "small");
  CHECK(s.m == 3);
  CHECK(s.image.objects.size() == 1);
  CHECK(s.image.objects[0].height == 20);
  CHECK(s.priors.glyphs[1].label == "O");
  CHECK(s.grid.tx.size() == 13);
  REQUIRE(s.truth);
  CHECK(s.truth->transform == ScaleTranslate{1, 1, 12, 9});
  CHECK(s.foam.record_trace);
  CHECK(s.foam.strategy == Strategy::potential_reduction);

  auto bad = [](auto edit) {
    json j = small_scenario();
    edit(j);
    return j;
  };
  CHECK_THROWS_AS(parse_scenario(bad([](json& j) { j.erase("image"); })), InvalidConfiguration);
  CHECK_THROWS_AS(parse_scenario(bad([](json& j) { j["m"] = 0; })), InvalidConfiguration);
  CHECK_THROWS_AS(parse_scenario(bad([](json& j) { j["delta_max"] = -1.0; })), InvalidConfiguration);
  CHECK_THROWS_AS(parse_scenario(bad([](json& j) { j["foam"]["strategy"] = "fastest"; })), InvalidConfiguration);
  CHECK_THROWS_AS(parse_scenario(bad([](json& j) { j["foam"]["alpha"] = 1.5; })), InvalidConfiguration);
  CHECK_THROWS_AS(parse_scenario(bad([](json& j) { j["grid"]["tx_range"] = {5, 1}; })), InvalidConfiguration);
  CHECK_THROWS_AS(parse_scenario(bad([](json& j) { j["image"]["noise"] = {{"type", "blur"}}; })),
                  InvalidConfiguration);
  CHECK_THROWS_AS(parse_scenario(bad([](json& j) { j["priors"] = json::object(); })), InvalidConfiguration);
  CHECK_THROWS_AS(parse_scenario(bad([](json& j) { j["m"] = "four"; })), InvalidConfiguration);
  CHECK_THROWS_AS(load_scenario("no/such/scenario.json"), IoError);
}

TEST_CASE("scenario scaling", "[experiment]") {
  const json j = scale_scenario(small_scenario(), 2);
  CHECK(j["name"] == "small@x2");
  CHECK(j["image"]["width"] == 96);
  CHECK(j["image"]["objects"][0]["x"] == 24);
  CHECK(j["image"]["objects"][0]["width"] == 40);
  CHECK(j["priors"]["glyphs"][0]["width"] == 40);
  CHECK(j["grid"]["tx_range"] == json({12, 36}));
  CHECK(j["truth"]["x"] == 24);
  CHECK(j["m"] == 3);
}

TEST_CASE("experiment run", "[experiment]") {
  const Scenario s = parse_scenario(small_scenario());
  const Prepared p = prepare(s);
  CHECK(p.hypotheses.size() == 2 * 13 * 13);
  const RunReport r = run_experiment(s, p);
  CHECK(r.truth_in_solutions);
  REQUIRE(r.truth_id);
  CHECK(p.hypotheses[*r.truth_id].transform.tx == 12);
  REQUIRE(r.metrics);
  CHECK(r.metrics->tau == r.result.tau());
  CHECK_FALSE(r.result.trace.empty());
  for (const auto& sol : r.solutions) CHECK(sol.label == "H");

  SECTION("the oracle argmax is among the solutions") {
    for (const auto& row : oracle_evidence(p))
      if (row.is_argmax) CHECK(std::binary_search(r.result.solutions.begin(), r.result.solutions.end(), row.id));
  }

  SECTION("replay reproduces the final bounds") {
    for (const auto& sol : r.solutions) {
      const HypothesisBounds b = replay(p, sol.id, sol.cycles);
      CHECK(b.lower() == sol.lower);
      CHECK(b.upper() == sol.upper);
    }
  }

  SECTION("noiseless runs agree across seeds") {
    json j = small_scenario();
    j["seed"] = 99;
    const RunReport other = run_experiment(parse_scenario(j));
    CHECK(other.result.solutions == r.result.solutions);
    CHECK(other.result.total_bound_pairs == r.result.total_bound_pairs);
  }

  SECTION("the embedded config reproduces the run") {
    const RunReport again = run_experiment(parse_scenario(r.to_json().at("config")));
    CHECK(again.result.solutions == r.result.solutions);
    CHECK(again.result.lower == r.result.lower);
    CHECK(again.result.upper == r.result.upper);
    CHECK(again.metrics->sigma_t == r.metrics->sigma_t);
  }

  SECTION("artifacts") {
    const fs::path dir = fs::temp_directory_path() / "hnb_test_experiment";
    fs::remove_all(dir);
    RunReport w = r;
    write_artifacts(dir, w, p);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "trace.jsonl"));
    const Mask shape = pgm::read_mask(dir / "shape_discrete.pgm");
    CHECK(shape.width() == 48);
    CHECK(shape.height() == 40);
    std::ifstream in(dir / "report.json");
    const json rep = json::parse(in);
    CHECK(rep.at("truth").at("in_solutions") == true);
    CHECK(rep.at("artifacts").at("trace") == "trace.jsonl");
  }
}

TEST_CASE("noisy runs depend on the seed only through the image", "[experiment]") {
  json j = small_scenario();
  j["image"]["noise"] = {{"type", "salt_pepper"}, {"probability", 0.05}};
  const Scenario s = parse_scenario(j);
  const RunReport a = run_experiment(s), b = run_experiment(s);
  CHECK(a.result.solutions == b.result.solutions);
  CHECK(a.result.cycles == b.result.cycles);
  j["seed"] = 8;
  CHECK_FALSE(synthesize(parse_scenario(j)).noisy == synthesize(s).noisy);
}

TEST_CASE("empty hypothesis spaces", "[experiment]") {
  json j = small_scenario();
  j["grid"] = {{"tx", {40}}, {"ty", {40}}};
  CHECK_THROWS_AS(prepare(parse_scenario(j)), EmptyHypothesisSpace);
  j = small_scenario();
  j["grid"]["classes"] = {"Z"};
  CHECK_THROWS_AS(prepare(parse_scenario(j)), EmptyHypothesisSpace);
}

TEST_CASE("trained priors", "[experiment]") {
  json j = small_scenario();
  j["priors"] = {{"train", {{"classes", {"H", "O"}}, {"variants", 4}, {"clusters", 2}, {"size", 20}}}};
  const Scenario s = parse_scenario(j);
  const auto classes = build_classes(s);
  REQUIRE(classes.size() == 4);
  CHECK(classes[0].id == "H#0");
  CHECK(classes[1].id == "H#1");
  CHECK(classes[3].label == "O");
  const RunReport r = run_experiment(s);
  REQUIRE_FALSE(r.solutions.empty());
  for (const auto& sol : r.solutions) CHECK(sol.label == "H");
}
