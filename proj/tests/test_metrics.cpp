#include <catch_amalgamated.hpp>

#include <random>

#include "hnb/metrics.hpp"

using namespace hnb;
using Catch::Approx;

TEST_CASE("pose metrics", "[metrics]") {
  const Pose truth{0, 0, 1, 1};
  const MetricsSummary a = pose_metrics({{0, 0, 1, 1}, {1, 0, 1, 1}, {-1, 0, 1, 1}}, truth);
  CHECK(a.mu_t == 0.0);
  CHECK(a.sigma_t == Approx(std::sqrt(2.0 / 3.0)));
  CHECK(a.sigma_t == Approx(0.816).margin(5e-4));
  CHECK(a.solution_count == 3);

  const MetricsSummary b = pose_metrics({{4, 7, 1, 1}}, {4, 7, 1, 1});
  CHECK(b.mu_t == 0.0);
  CHECK(b.sigma_t == 0.0);
  CHECK(b.mu_s == 0.0);
  CHECK(b.sigma_s == 0.0);

  // Scale errors in one axis: RMS over both axes of +-2% and 0.
  const MetricsSummary c = pose_metrics({{0, 0, 0.98, 1}, {0, 0, 1.02, 1}}, truth);
  CHECK(c.mu_s == Approx(0.0).margin(1e-12));
  CHECK(c.sigma_s == Approx(2.0));

  const MetricsSummary d = pose_metrics({{3, 4, 1, 1}, {3, 4, 1, 1}}, truth);
  CHECK(d.mu_t == 5.0);
  CHECK(d.sigma_t == 5.0);

  CHECK_THROWS_AS(pose_metrics({}, truth), EmptyMetrics);
}

TEST_CASE("solution filter", "[metrics]") {
  const std::vector<ScoredSolution> s{{0, "A", 6, 10}, {1, "B", 5, 7}};
  const auto half = solution_filter(s, 0.5);
  REQUIRE(half.size() == 1);
  CHECK(half[0].id == 0);
  CHECK(solution_filter(s, 0.0).size() == 2);
  CHECK(solution_filter(s, 1.0).size() == 1);
  CHECK(solution_filter({}, 0.5).empty());

  SECTION("beta 0 is the identity and beta 1 keeps the max-upper ties") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> v(-20, 20), len(1, 9);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<ScoredSolution> x;
      const int n = len(rng);
      const int gamma = v(rng);
      // Solutions of one scheduler run: every upper reaches the max lower.
      for (int i = 0; i < n; ++i) {
        const int up = gamma + std::abs(v(rng)) % 7;
        x.push_back({static_cast<std::size_t>(i), "c", static_cast<double>(std::min(gamma, up) - std::abs(v(rng)) % 3), static_cast<double>(up)});
      }
      x[0].lower = gamma;
      const auto same = solution_filter(x, 0.0);
      REQUIRE(same.size() == x.size());
      double top = x[0].upper;
      for (const auto& e : x) top = std::max(top, e.upper);
      for (const auto& e : solution_filter(x, 1.0)) REQUIRE(e.upper == top);
    }
  }
}

TEST_CASE("confusion", "[metrics]") {
  SECTION("mixed row") {
    const LabelledRun r{"A", {{0, "A", 1, 2}, {1, "A", 1, 2}, {2, "B", 1, 2}}};
    const ConfusionMatrix cm = confusion({r}, 0.0);
    REQUIRE(cm.labels == std::vector<std::string>{"A", "B"});
    CHECK(cm.counts[0] == std::vector<std::size_t>{2, 1});
    const auto f = cm.fractions();
    CHECK(f[0][0] == Approx(2.0 / 3.0));
    CHECK(f[0][1] == Approx(1.0 / 3.0));
    CHECK(f[1] == std::vector<double>{0.0, 0.0});
    CHECK(cm.p_total == Approx(2.0 / 3.0));
  }

  SECTION("all correct") {
    const std::vector<LabelledRun> runs{{"A", {{0, "A", 1, 1}}}, {"B", {{0, "B", 3, 4}, {1, "B", 3, 3}}}};
    const ConfusionMatrix cm = confusion(runs, 0.5, {"A", "B", "C"});
    CHECK(cm.p_total == 1.0);
    const auto f = cm.fractions();
    CHECK(f[0] == std::vector<double>{1, 0, 0});
    CHECK(f[1] == std::vector<double>{0, 1, 0});
  }

  SECTION("beta filters before counting") {
    const LabelledRun r{"A", {{0, "A", 6, 10}, {1, "B", 5, 7}}};
    CHECK(confusion({r}, 0.0).p_total == 0.5);
    CHECK(confusion({r}, 1.0).p_total == 1.0);
  }
}
