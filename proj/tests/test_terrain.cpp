#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resloco/terrain.hpp"

using namespace resloco;

TEST_CASE("flat terrain is identically zero") {
  TerrainConfig cfg;
  cfg.kind = TerrainKind::kFlat;
  const Terrain t(cfg);
  CHECK(t.height(0, 0) == 0.0);
  CHECK(t.height(3.7, -2.1) == 0.0);

  TerrainConfig zero_amp;
  zero_amp.kind = TerrainKind::kPerlin;
  zero_amp.h_env = 0.0;
  const Terrain t2(zero_amp);
  CHECK(t2.height(1.0, 1.0) == 0.0);
}

TEST_CASE("perlin peak-to-peak matches h_env within 1 percent") {
  for (uint64_t seed : {1ull, 42ull, 977ull}) {
    TerrainConfig cfg;
    cfg.kind = TerrainKind::kPerlin;
    cfg.h_env = 0.1;
    cfg.seed = seed;
    const Terrain t(cfg);
    double lo = 1e9, hi = -1e9;
    for (double x = -cfg.extent; x <= cfg.extent; x += 0.05)
      for (double y = -cfg.extent; y <= cfg.extent; y += 0.05) {
        const double h = t.height(x, y);
        lo = std::min(lo, h);
        hi = std::max(hi, h);
      }
    CHECK(hi - lo >= 0.099);
    CHECK(hi - lo <= 0.101);
    CHECK(lo >= -1e-12);
  }
}

TEST_CASE("same seed reproduces the field, different seeds differ") {
  TerrainConfig cfg;
  cfg.kind = TerrainKind::kPerlin;
  cfg.h_env = 0.08;
  cfg.seed = 7;
  const Terrain a(cfg), b(cfg);
  cfg.seed = 8;
  const Terrain c(cfg);
  double max_diff_same = 0.0, max_diff_other = 0.0;
  for (double x = -2; x <= 2; x += 0.17)
    for (double y = -2; y <= 2; y += 0.17) {
      max_diff_same = std::max(max_diff_same,
                               std::abs(a.height(x, y) - b.height(x, y)));
      max_diff_other = std::max(max_diff_other,
                                std::abs(a.height(x, y) - c.height(x, y)));
    }
  CHECK(max_diff_same == 0.0);
  CHECK(max_diff_other > 1e-3);
}

TEST_CASE("stepped terrain is piecewise constant and bounded") {
  TerrainConfig cfg;
  cfg.kind = TerrainKind::kStepped;
  cfg.h_env = 0.1;
  cfg.seed = 3;
  const Terrain t(cfg);
  for (double x = -2; x <= 2; x += 0.3)
    for (double y = -2; y <= 2; y += 0.3) {
      const double h = t.height(x, y);
      CHECK(h >= -1e-12);
      CHECK(h <= 0.1 + 1e-12);
      // constant within a cell
      CHECK(t.height(x + 0.05, y + 0.05) == doctest::Approx(h));
    }
}

TEST_CASE("terrain config loads and validates") {
  const auto cfg = Config::from_string(R"(
[terrain]
kind = perlin
h_env = 0.05
friction = 0.6
seed = 11
)");
  const TerrainConfig t = load_terrain_config(cfg);
  CHECK(t.kind == TerrainKind::kPerlin);
  CHECK(t.h_env == doctest::Approx(0.05));
  CHECK(t.friction == doctest::Approx(0.6));
  CHECK(t.seed == 11);
  CHECK_THROWS(load_terrain_config(
      Config::from_string("[terrain]\nkind = lava\n")));
  CHECK_THROWS(load_terrain_config(
      Config::from_string("[terrain]\nkind = flat\nfriction = 0\n")));
}
