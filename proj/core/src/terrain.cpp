#include "resloco/terrain.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "resloco/rng.hpp"

namespace resloco {

namespace {

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double grad_dot(int hash, double x, double y) {
  // 8 gradient directions
  switch (hash & 7) {
    case 0: return x + y;
    case 1: return x - y;
    case 2: return -x + y;
    case 3: return -x - y;
    case 4: return x;
    case 5: return -x;
    case 6: return y;
    default: return -y;
  }
}

uint64_t cell_hash(uint64_t seed, int64_t cx, int64_t cy) {
  uint64_t h = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(cx + 0x10000));
  h ^= 0xbf58476d1ce4e5b9ULL * static_cast<uint64_t>(cy + 0x20000);
  h ^= h >> 31;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 29;
  return h;
}

}  // namespace

Terrain::Terrain(const TerrainConfig& cfg) : cfg_(cfg) {
  if (cfg_.kind == TerrainKind::kFlat || cfg_.h_env <= 0.0) {
    cfg_.kind = cfg_.h_env <= 0.0 ? TerrainKind::kFlat : cfg_.kind;
    if (cfg_.kind == TerrainKind::kFlat) return;
  }

  // permutation table for perlin gradients
  perm_.resize(512);
  Rng rng(cfg_.seed ^ 0x7e11a9u);
  std::vector<int> base(256);
  for (int i = 0; i < 256; ++i) base[i] = i;
  for (int i = 255; i > 0; --i)
    std::swap(base[i], base[rng.uniform_int(i + 1)]);
  for (int i = 0; i < 512; ++i) perm_[i] = base[i & 255];

  // scan the arena to normalize raw values onto [0, h_env]
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  const double step = 0.05;
  for (double x = -cfg_.extent; x <= cfg_.extent; x += step)
    for (double y = -cfg_.extent; y <= cfg_.extent; y += step) {
      const double v = raw(x, y);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  offset_ = lo;
  scale_ = hi > lo ? cfg_.h_env / (hi - lo) : 0.0;
}

double Terrain::height(double x, double y) const {
  if (cfg_.kind == TerrainKind::kFlat || scale_ == 0.0) return 0.0;
  return (raw(x, y) - offset_) * scale_;
}

double Terrain::raw(double x, double y) const {
  if (cfg_.kind == TerrainKind::kPerlin) {
    // two octaves, base feature size 0.5 m
    return perlin(x * 2.0, y * 2.0) + 0.35 * perlin(x * 5.0 + 17.3, y * 5.0);
  }
  // stepped: piecewise-constant quantized cells
  const auto cx = static_cast<int64_t>(std::floor(x / cfg_.step_period));
  const auto cy = static_cast<int64_t>(std::floor(y / cfg_.step_period));
  return static_cast<double>(cell_hash(cfg_.seed, cx, cy) % 5) / 4.0;
}

double Terrain::perlin(double x, double y) const {
  const int xi = static_cast<int>(std::floor(x)) & 255;
  const int yi = static_cast<int>(std::floor(y)) & 255;
  const double xf = x - std::floor(x);
  const double yf = y - std::floor(y);
  const double u = fade(xf), v = fade(yf);

  const int aa = perm_[perm_[xi] + yi];
  const int ab = perm_[perm_[xi] + yi + 1];
  const int ba = perm_[perm_[xi + 1] + yi];
  const int bb = perm_[perm_[xi + 1] + yi + 1];

  const double x1 =
      grad_dot(aa, xf, yf) + u * (grad_dot(ba, xf - 1.0, yf) - grad_dot(aa, xf, yf));
  const double x2 = grad_dot(ab, xf, yf - 1.0) +
                    u * (grad_dot(bb, xf - 1.0, yf - 1.0) -
                         grad_dot(ab, xf, yf - 1.0));
  return x1 + v * (x2 - x1);
}

TerrainConfig load_terrain_config(const Config& cfg,
                                  const std::string& section) {
  TerrainConfig t;
  const std::string kind = cfg.get_string(section + ".kind", "flat");
  if (kind == "flat")
    t.kind = TerrainKind::kFlat;
  else if (kind == "perlin")
    t.kind = TerrainKind::kPerlin;
  else if (kind == "stepped")
    t.kind = TerrainKind::kStepped;
  else
    throw std::runtime_error("unknown terrain kind: " + kind);
  t.h_env = cfg.get_double(section + ".h_env", t.h_env);
  t.friction = cfg.get_double(section + ".friction", t.friction);
  t.seed = static_cast<uint64_t>(cfg.get_int(section + ".seed", 0));
  t.extent = cfg.get_double(section + ".extent", t.extent);
  t.step_period = cfg.get_double(section + ".step_period", t.step_period);
  if (t.h_env < 0.0) throw std::runtime_error("terrain h_env must be >= 0");
  if (!(t.friction > 0.0 && t.friction <= 2.0))
    throw std::runtime_error("terrain friction must be in (0, 2]");
  return t;
}

}  // namespace resloco
