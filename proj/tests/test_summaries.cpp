#include <catch_amalgamated.hpp>

#include <random>

#include "hnb/summaries.hpp"
#include "oracles.hpp"

using namespace hnb;
using Catch::Approx;

namespace {

BernoulliField constant(int w, int h, double p, double delta_max = 5.0) {
  return from_probabilities(ProbabilityImage(w, h, p), ClampPolicy{delta_max});
}

std::vector<double> vals(const MSummary& s) { return s.values; }

}  // namespace

TEST_CASE("threshold layout", "[summaries]") {
  const SummaryTables t(constant(4, 4, 0.5), 4);
  REQUIRE(t.levels() == 9);
  CHECK(t.threshold(1) == -5.0);
  CHECK(t.threshold(5) == 0.0);
  CHECK(t.threshold(9) == 5.0);
  for (int j = 1; j < 9; ++j) CHECK(t.threshold(j + 1) - t.threshold(j) == Approx(1.25));
  CHECK_THROWS_AS(SummaryTables(constant(2, 2, 0.5), 0), InvalidConfiguration);
}

TEST_CASE("constant fields", "[summaries]") {
  SECTION("delta 0") {
    const SummaryTables t(constant(4, 4, 0.5), 1);
    CHECK(vals(t.m_summary({0, 0, 4, 4})) == std::vector<double>{0, 16, 16});
    CHECK(vals(t.m_summary({1, 1, 2, 2})) == std::vector<double>{0, 4, 4});
  }
  SECTION("delta +max") {
    const SummaryTables t(constant(4, 4, 1.0), 1);
    CHECK(vals(t.m_summary({0, 0, 4, 4})) == std::vector<double>{0, 0, 16});
    CHECK(vals(t.m_summary({2, 2, 2, 2})) == std::vector<double>{0, 0, 4});
  }
  SECTION("mean summary is the integral") {
    const BernoulliField f = constant(5, 3, 0.8);
    const SummaryTables t(f, 2);
    const double c = f.delta(0, 0);
    CHECK(t.mean_summary({0, 0, 5, 3}) == Approx(15 * c).epsilon(1e-12));
    CHECK(t.mean_summary({4, 2, 1, 1}) == Approx(c).epsilon(1e-15));
  }
}

TEST_CASE("counts and sums agree with brute force on every rectangle", "[summaries][property]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 4; ++trial) {
    const BernoulliField f = from_probabilities(oracle::random_image(8, 8, rng), ClampPolicy{});
    const SummaryTables t(f, 1 + trial);
    int rects = 0;
    for (int y0 = 0; y0 < 8; ++y0)
      for (int x0 = 0; x0 < 8; ++x0)
        for (int h = 1; y0 + h <= 8; ++h)
          for (int w = 1; x0 + w <= 8; ++w) {
            const Region r{x0, y0, w, h};
            const auto expect = oracle::brute_counts(f, r, t.thresholds());
            const MSummary ms = t.m_summary(r);
            for (std::size_t j = 0; j < expect.size(); ++j) REQUIRE(ms[j] == expect[j]);
            REQUIRE(t.mean_summary(r) == Approx(oracle::brute_sum(f, r)).margin(1e-9));
            ++rects;
          }
    CHECK(rects == 1296);
  }
}

TEST_CASE("region queries are range checked", "[summaries]") {
  const SummaryTables t(constant(4, 4, 0.5), 1);
  CHECK_THROWS_AS(t.mean_summary({3, 3, 2, 1}), RangeError);
  CHECK_THROWS_AS(t.m_summary({-1, 0, 1, 1}), RangeError);
  CHECK_THROWS_AS(lcdf_exact(constant(2, 2, 0.5), {0, 0, 3, 1}), RangeError);
}

TEST_CASE("min and max over regions", "[summaries][property]") {
  std::mt19937_64 rng(17);
  const BernoulliField f = from_probabilities(oracle::random_image(37, 29, rng), ClampPolicy{});
  const SummaryTables t(f, 4);
  for (int i = 0; i < 500; ++i) {
    const Region r = oracle::random_region(37, 29, rng);
    fixed_t lo = f.delta_fixed(r.x0, r.y0), hi = lo;
    for (int y = r.y0; y < r.y1(); ++y)
      for (int x = r.x0; x < r.x1(); ++x) {
        lo = std::min(lo, f.delta_fixed(x, y));
        hi = std::max(hi, f.delta_fixed(x, y));
      }
    REQUIRE(t.min_fixed(r) == lo);
    REQUIRE(t.max_fixed(r) == hi);
  }
}

TEST_CASE("summary nesting and additivity under a split", "[summaries][property]") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const BernoulliField f = from_probabilities(oracle::random_image(24, 24, rng), ClampPolicy{});
    const SummaryTables t(f, 4);
    Region r = oracle::random_region(24, 24, rng);
    if (r.w < 2 || r.h < 2) continue;
    const MSummary parent = t.m_summary(r);
    for (std::size_t j = 0; j + 1 < parent.size(); ++j) REQUIRE(parent[j] <= parent[j + 1]);
    const int w1 = (r.w + 1) / 2, h1 = (r.h + 1) / 2;
    const Region kids[4] = {{r.x0, r.y0, w1, h1},
                            {r.x0 + w1, r.y0, r.w - w1, h1},
                            {r.x0, r.y0 + h1, w1, r.h - h1},
                            {r.x0 + w1, r.y0 + h1, r.w - w1, r.h - h1}};
    std::vector<double> total(parent.size(), 0.0);
    for (const Region& k : kids) {
      if (k.empty()) continue;
      const MSummary c = t.m_summary(k);
      for (std::size_t j = 0; j < c.size(); ++j) {
        REQUIRE(c[j] <= parent[j]);
        total[j] += c[j];
      }
    }
    REQUIRE(total == parent.values);
  }
}

TEST_CASE("exact lcdf", "[summaries]") {
  const Lcdf a = lcdf_exact(constant(3, 1, 1.0 / (1.0 + std::exp(1.0))), {0, 0, 3, 1});
  REQUIRE(a.sorted.size() == 3);
  for (double v : a.sorted) CHECK(v == Approx(-1.0).margin(1e-12));
  CHECK(a.crossing_area == 3);

  ProbabilityImage img(3, 1);
  img.set(0, 0, oracle::logistic(2.0));
  img.set(1, 0, oracle::logistic(-1.0));
  img.set(2, 0, 0.5);
  const BernoulliField f = from_probabilities(img, ClampPolicy{});
  const Lcdf b = lcdf_exact(f, {0, 0, 3, 1});
  CHECK(b.sorted[0] == Approx(-1.0).margin(1e-12));
  CHECK(b.sorted[1] == 0.0);
  CHECK(b.sorted[2] == Approx(2.0).margin(1e-12));
  CHECK(b.crossing_area == 1);

  SECTION("top mass integral") {
    Lcdf l{{-1.0, 0.0, 2.0}, 1};
    CHECK(top_mass_integral(l, 1.0) == 2.0);
    CHECK(top_mass_integral(l, 3.0) == 1.0);
    CHECK(top_mass_integral(l, 1.5) == 2.0);
    CHECK(top_mass_integral(l, 0.0) == 0.0);
    CHECK(top_mass_integral(l, 2.5) == Approx(1.5));
    CHECK_THROWS_AS(top_mass_integral(l, 3.5), RangeError);
    CHECK_THROWS_AS(top_mass_integral(l, -0.1), RangeError);
  }
}

TEST_CASE("integrate_inverse_upper", "[summaries]") {
  MSummary ms{{0, 0, 4}};
  CHECK(integrate_inverse_upper(ms, 0.0, 1, 5.0, 4.0) == 20.0);
  CHECK(integrate_inverse_upper(ms, 4.0, 1, 5.0, 4.0) == 0.0);
  CHECK_THROWS_AS(integrate_inverse_upper(ms, 4.5, 1, 5.0, 4.0), RangeError);
  CHECK_THROWS_AS(integrate_inverse_upper(MSummary{{0, 4}}, 0.0, 1, 5.0, 4.0), InvalidSummary);
  CHECK_THROWS_AS(integrate_inverse_upper(MSummary{{0, 3, 2}}, 0.0, 1, 5.0, 2.0), InvalidSummary);
}

TEST_CASE("summary majorant dominates the exact top mass", "[summaries][property]") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + trial % 6;
    const BernoulliField f = from_probabilities(oracle::random_image(12, 12, rng), ClampPolicy{});
    const SummaryTables t(f, m);
    const Region r = oracle::random_region(12, 12, rng);
    const Lcdf l = lcdf_exact(f, r);
    const MSummary ms = t.m_summary(r);
    const auto area = static_cast<double>(r.area());
    for (int k = 0; k <= r.area(); ++k) {
      const double s = k;
      const double upper = integrate_inverse_upper(ms, area - s, m, 5.0, area);
      const double exact = top_mass_integral(l, s);
      REQUIRE(upper >= exact);
      REQUIRE(upper - exact <= 5.0 / m * area + 1e-9);
    }
    REQUIRE(top_mass_integral(l, area - static_cast<double>(l.crossing_area)) ==
            oracle::k_largest(l.sorted, static_cast<std::size_t>(r.area() - l.crossing_area)));
  }
}

TEST_CASE("top mass over the non-negative part is the positive sum", "[summaries][property]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const BernoulliField f = from_probabilities(oracle::random_image(9, 7, rng), ClampPolicy{});
    const Region r = oracle::random_region(9, 7, rng);
    const Lcdf l = lcdf_exact(f, r);
    fixed_t pos = 0;
    for (int y = r.y0; y < r.y1(); ++y)
      for (int x = r.x0; x < r.x1(); ++x) pos += std::max<fixed_t>(0, f.delta_fixed(x, y));
    REQUIRE(top_mass_integral(l, static_cast<double>(l.area() - l.crossing_area)) == from_fixed(pos));
  }
}
