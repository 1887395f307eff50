#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include "hnb/glyphs.hpp"
#include "hnb/pgm.hpp"

using namespace hnb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hnb_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("16-bit probability round trip", "[io]") {
  const fs::path dir = scratch("prob");
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> level(0, 65535);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  SECTION("values on the 16-bit lattice are exact") {
    ProbabilityImage img(13, 7);
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 13; ++x) img.set(x, y, level(rng) / 65535.0);
    pgm::write_probability(dir / "a.pgm", img, 4.5, {{"source", "test"}});
    const auto back = pgm::read_probability(dir / "a.pgm");
    CHECK(back.image == img);
    REQUIRE(back.delta_max);
    CHECK(*back.delta_max == 4.5);
    CHECK(back.provenance.at("source") == "test");
  }

  SECTION("other values are within half a quantum") {
    ProbabilityImage img(9, 9);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) img.set(x, y, u(rng));
    pgm::write_probability(dir / "b.pgm", img, 5.0);
    const auto back = pgm::read_probability(dir / "b.pgm");
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) REQUIRE(std::abs(back.image(x, y) - img(x, y)) <= 0.5 / 65535.0 + 1e-15);
  }

  SECTION("a missing sidecar leaves delta_max unset") {
    ProbabilityImage img(2, 2, 0.5);
    pgm::write_probability(dir / "c.pgm", img, 5.0);
    fs::remove(pgm::sidecar_path(dir / "c.pgm"));
    CHECK_FALSE(pgm::read_probability(dir / "c.pgm").delta_max);
  }
}

TEST_CASE("masks", "[io]") {
  const fs::path dir = scratch("mask");
  const Mask m = glyphs::rasterize("R", 20, 17);
  pgm::write_mask(dir / "r.pgm", m);
  CHECK(pgm::read_mask(dir / "r.pgm") == m);
  CHECK(fs::file_size(dir / "r.pgm") == std::string("P5\n20 17\n255\n").size() + 20 * 17);
}

TEST_CASE("header parsing", "[io]") {
  const fs::path dir = scratch("header");
  {
    std::ofstream out(dir / "c.pgm", std::ios::binary);
    out << "P5\n# comment\n3 # width\n1\n255\n";
    out.write("\x00\x80\xff", 3);
  }
  const pgm::Raw r = pgm::read_raw(dir / "c.pgm");
  CHECK(r.width == 3);
  CHECK(r.height == 1);
  CHECK(r.samples == std::vector<std::uint16_t>{0, 128, 255});

  {
    std::ofstream out(dir / "wide.pgm", std::ios::binary);
    out << "P5 2 1 1000\n";
    out.write("\x03\xe8\x00\x01", 4);
  }
  CHECK(pgm::read_raw(dir / "wide.pgm").samples == std::vector<std::uint16_t>{1000, 1});

  {
    std::ofstream out(dir / "ascii.pgm");
    out << "P2\n1 1\n255\n0\n";
  }
  CHECK_THROWS_AS(pgm::read_raw(dir / "ascii.pgm"), IoError);
  {
    std::ofstream out(dir / "short.pgm", std::ios::binary);
    out << "P5\n4 4\n255\n";
    out.write("\x01\x02", 2);
  }
  CHECK_THROWS_AS(pgm::read_raw(dir / "short.pgm"), IoError);
  {
    std::ofstream out(dir / "over.pgm", std::ios::binary);
    out << "P5\n1 1\n100\n";
    out.write("\xff", 1);
  }
  CHECK_THROWS_AS(pgm::read_raw(dir / "over.pgm"), IoError);
  CHECK_THROWS_AS(pgm::read_raw(dir / "absent.pgm"), IoError);
}

TEST_CASE("prior bundle round trip", "[io]") {
  const fs::path dir = scratch("bundle");
  std::vector<PriorClass> classes;
  for (const char* name : {"A", "disc"}) {
    const Mask m = glyphs::rasterize(name, 16, 16);
    PriorClass pc;
    pc.id = std::string(name) + "#0";
    pc.label = name;
    pc.prior = binary_shape_to_probability(m, 0.9, 0.1);
    pc.support = *nonzero_bbox(pc.prior);
    classes.push_back(pc);
  }
  pgm::write_bundle(dir / "b", classes, 4.0, {{"clusters", 1}});
  const pgm::Bundle b = pgm::read_bundle(dir / "b");
  REQUIRE(b.classes.size() == 2);
  CHECK(b.delta_max == 4.0);
  CHECK(b.provenance.at("clusters") == 1);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(b.classes[i].id == classes[i].id);
    CHECK(b.classes[i].label == classes[i].label);
    CHECK(b.classes[i].support == classes[i].support);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        REQUIRE(std::abs(b.classes[i].prior(x, y) - classes[i].prior(x, y)) <= 0.5 / 65535.0);
  }
  CHECK_THROWS_AS(pgm::read_bundle(dir / "missing"), IoError);
  {
    std::ofstream out(dir / "b" / "manifest.json");
    out << "{\"classes\": [{\"id\": \"x\"}]}";
  }
  CHECK_THROWS_AS(pgm::read_bundle(dir / "b"), IoError);
}
