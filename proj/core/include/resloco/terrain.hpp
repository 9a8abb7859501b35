#pragma once

#include <cstdint>
#include <vector>

#include "resloco/config.hpp"

namespace resloco {

enum class TerrainKind { kFlat, kPerlin, kStepped };

struct TerrainConfig {
  TerrainKind kind = TerrainKind::kFlat;
  double h_env = 0.0;     // peak-to-peak roughness, m
  double friction = 0.8;  // mu
  uint64_t seed = 0;
  double extent = 8.0;    // normalization arena half-size, m
  double step_period = 0.4;
};

// Procedural height field. Perlin and stepped fields are rescaled over the
// arena so max - min equals h_env.
class Terrain {
 public:
  Terrain() = default;
  explicit Terrain(const TerrainConfig& cfg);

  double height(double x, double y) const;
  double friction() const { return cfg_.friction; }
  const TerrainConfig& config() const { return cfg_; }

 private:
  double raw(double x, double y) const;
  double perlin(double x, double y) const;

  TerrainConfig cfg_;
  double offset_ = 0.0;
  double scale_ = 0.0;
  std::vector<int> perm_;
};

TerrainConfig load_terrain_config(const Config& cfg,
                                  const std::string& section = "terrain");

}  // namespace resloco
