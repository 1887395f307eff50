#include <catch_amalgamated.hpp>

#include <random>
#include <thread>

#include "hnb/search.hpp"
#include "oracles.hpp"

using namespace hnb;
using Catch::Approx;

namespace {

PriorClass random_class(std::mt19937_64& rng, int w, int h) {
  const ProbabilityImage p = oracle::random_image(w, h, rng);
  return PriorClass{"c", "c", p, *nonzero_bbox(p)};
}

SupportFn fixed_support(Region r) {
  return [r](std::size_t, double, double) { return r; };
}

}  // namespace

TEST_CASE("scale validation", "[hypotheses]") {
  CHECK_THROWS_AS((ScaleTranslate{0.0, 1.0, 0, 0}.validate()), InvalidScale);
  CHECK_THROWS_AS((ScaleTranslate{1.0, -2.0, 0, 0}.validate()), InvalidScale);
  CHECK_NOTHROW((ScaleTranslate{0.5, 2.0, -3, 4}.validate()));
}

TEST_CASE("transform_prior", "[hypotheses]") {
  std::mt19937_64 rng(1);
  SECTION("identity reproduces the field") {
    const PriorClass pc = random_class(rng, 20, 14);
    const TransformedPrior tp = transform_prior(pc, 1.0, 1.0, ClampPolicy{}, 4);
    const BernoulliField f = from_probabilities(pc.prior, ClampPolicy{});
    CHECK(tp.field.delta_grid() == f.delta_grid());
    CHECK(tp.z_h == Approx(f.z_over(tp.support)));
  }
  SECTION("extent arithmetic") {
    const PriorClass pc{"c", "c", ProbabilityImage(128, 128, 0.6), {0, 0, 128, 128}};
    const TransformedPrior tp = transform_prior(pc, 0.5, 1.0, ClampPolicy{}, 4);
    CHECK(tp.field.width() == 64);
    CHECK(tp.field.height() == 128);
    CHECK_THROWS_AS(transform_prior(pc, 0.001, 1.0, ClampPolicy{}, 4), InvalidScale);
  }
  SECTION("constant prior stays constant") {
    const PriorClass pc{"c", "c", ProbabilityImage(9, 7, 0.7), {0, 0, 9, 7}};
    for (double s : {0.37, 0.8, 1.3, 2.5}) {
      const ProbabilityImage r = resample_prior(pc.prior, s, 1.7 / s);
      for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x) REQUIRE(r(x, y) == Approx(0.7).margin(1e-15));
    }
  }
  SECTION("support is the nonzero bounding box") {
    ProbabilityImage p(10, 10, 0.0);
    p.set(3, 4, 0.9);
    p.set(6, 5, 0.9);
    const TransformedPrior tp = transform_prior(PriorClass{"c", "c", p, {3, 4, 4, 2}}, 1.0, 1.0, ClampPolicy{}, 4);
    CHECK(tp.support == Region{3, 4, 4, 2});
    CHECK_THROWS_AS(transform_prior(PriorClass{"z", "z", ProbabilityImage(3, 3, 0.0), {0, 0, 3, 3}}, 1, 1,
                                    ClampPolicy{}, 4),
                    InvalidInput);
  }
}

TEST_CASE("enumerate", "[hypotheses]") {
  SECTION("sliding a 128 prior inside 512") {
    HypothesisGrid g;
    g.classes = {0};
    g.tx = HypothesisGrid::range(-10, 400);
    g.ty = HypothesisGrid::range(-10, 400);
    CHECK(enumerate(g, 512, 512, fixed_support({0, 0, 128, 128})).size() == 148225u);
  }
  SECTION("product count without filtering") {
    HypothesisGrid g;
    g.classes.resize(156);
    for (std::size_t i = 0; i < 156; ++i) g.classes[i] = i;
    g.sx = {0.9, 0.95, 1.0, 1.05, 1.1};
    g.sy = g.sx;
    g.tx = HypothesisGrid::range(-5, 5);
    g.ty = HypothesisGrid::range(-5, 5);
    CHECK(g.size() == 471900u);
    g.classes = {0, 1};
    CHECK(enumerate(g, 100, 100, fixed_support({10, 10, 20, 20})).size() == 2u * 25 * 121);
  }
  SECTION("single hypothesis") {
    HypothesisGrid g;
    g.classes = {0};
    g.tx = {0};
    g.ty = {0};
    const auto h = enumerate(g, 4, 4, fixed_support({0, 0, 4, 4}));
    REQUIRE(h.size() == 1);
    CHECK(h[0].id == 0);
    CHECK(h[0].support_img == Region{0, 0, 4, 4});
  }
  SECTION("ids follow (class, sy, sx, ty, tx)") {
    HypothesisGrid g;
    g.classes = {0, 1};
    g.sx = {1.0, 0.5};
    g.sy = {1.0};
    g.tx = {1, 0};
    g.ty = {0, 1};
    const auto h = enumerate(g, 50, 50, fixed_support({0, 0, 4, 4}));
    REQUIRE(h.size() == 16);
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i].id == i);
    CHECK(h[0].transform == ScaleTranslate{0.5, 1.0, 0, 0});
    CHECK(h[1].transform == ScaleTranslate{0.5, 1.0, 1, 0});
    CHECK(h[2].transform == ScaleTranslate{0.5, 1.0, 0, 1});
    CHECK(h[4].transform == ScaleTranslate{1.0, 1.0, 0, 0});
    CHECK(h[8].class_index == 1);
  }
  SECTION("anchored translations centre the support") {
    HypothesisGrid g;
    g.classes = {0};
    g.translations = {{0, 0}, {2, -1}};
    g.anchor = std::array<int, 2>{20, 20};
    const auto h = enumerate(g, 50, 50, fixed_support({1, 1, 6, 4}));
    REQUIRE(h.size() == 2);
    // offsets sort by (ty, tx); support centre = anchor + offset
    CHECK(h[0].support_img == Region{19, 17, 6, 4});
    CHECK(h[1].support_img == Region{17, 18, 6, 4});
    CHECK(h[1].transform.tx == 16);
    CHECK(h[1].transform.ty == 17);
  }
  SECTION("empty results and empty axes") {
    HypothesisGrid g;
    g.classes = {0};
    g.tx = {100};
    g.ty = {0};
    CHECK_THROWS_AS(enumerate(g, 50, 50, fixed_support({0, 0, 4, 4})), EmptyHypothesisSpace);
    g.tx.clear();
    CHECK_THROWS_AS(enumerate(g, 50, 50, fixed_support({0, 0, 4, 4})), InvalidConfiguration);
  }
}

TEST_CASE("prior cache coalesces builds", "[hypotheses]") {
  std::mt19937_64 rng(2);
  PriorCache cache({random_class(rng, 16, 16), random_class(rng, 12, 10)}, ClampPolicy{}, 4);
  std::vector<std::thread> threads;
  std::vector<PriorCache::Ptr> got(8);
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&, i] { got[i] = cache.get(i % 2, 1.25, 0.8); });
  for (auto& t : threads) t.join();
  CHECK(cache.builds() == 2);
  for (int i = 2; i < 8; ++i) CHECK(got[i].get() == got[i % 2].get());
}

TEST_CASE("shared transformed priors match per-hypothesis builds", "[hypotheses][property]") {
  std::mt19937_64 rng(3);
  const PriorClass pc = random_class(rng, 14, 11);
  const BernoulliField field = from_probabilities(oracle::random_image(40, 40, rng), ClampPolicy{});
  auto tables = std::make_shared<const SummaryTables>(field, 4);
  PriorCache cache({pc}, ClampPolicy{}, 4);
  HypothesisGrid g;
  g.classes = {0};
  g.sx = {0.8, 1.0, 1.3};
  g.sy = {0.9, 1.2};
  g.tx = HypothesisGrid::range(0, 20);
  g.ty = HypothesisGrid::range(0, 20);
  const auto hyps = enumerate(g, 40, 40, [&](std::size_t c, double sx, double sy) {
    return cache.get(c, sx, sy)->support;
  });
  CHECK(cache.builds() == 6);
  std::uniform_int_distribution<std::size_t> pick(0, hyps.size() - 1);
  for (int i = 0; i < 30; ++i) {
    const Hypothesis& h = hyps[pick(rng)];
    const auto shared = cache.get(h.class_index, h.transform.sx, h.transform.sy);
    const TransformedPrior fresh = transform_prior(pc, h.transform.sx, h.transform.sy, ClampPolicy{}, 4);
    REQUIRE(fresh.z_h == shared->z_h);
    HypothesisBounds a(tables, shared->tables, h, shared->z_h);
    HypothesisBounds b(tables, fresh.tables, h, fresh.z_h);
    for (int k = 0; k < 10; ++k) {
      REQUIRE(a.lower_fixed() == b.lower_fixed());
      REQUIRE(a.upper_fixed() == b.upper_fixed());
      a.refine_once();
      b.refine_once();
    }
  }
  SECTION("z_h does not depend on the translation") {
    for (const Hypothesis& h : hyps) {
      if (h.transform.sx != 1.0 || h.transform.sy != 1.2) continue;
      REQUIRE(init_bounds(tables, cache, h).z_h() == cache.get(0, 1.0, 1.2)->z_h);
    }
  }
}
