#pragma once

#include <array>
#include <functional>
#include <vector>

#include "resloco/config.hpp"
#include "resloco/kinematics.hpp"
#include "resloco/types.hpp"

namespace resloco {

using TerrainQuery = std::function<double(double, double)>;

enum class LegMode { kStance, kSwing };

enum class GaitType { kStand, kTrot };

struct GaitConfig {
  GaitType type = GaitType::kTrot;
  double t_stance = 0.3;
  double t_swing = 0.3;
  double apex_height = 0.08;
  double foothold_residual_clamp = 0.1;  // per-axis box, m
  double phase_advance_max_ratio = 3.0;  // advance <= ratio * dt / T_step
  double capture_gain = 0.03;            // k_v, s
  CartesianGains swing_gains;
};

struct LegGait {
  double phase = 0.0;  // in [0, 1)
  LegMode mode = LegMode::kStance;
  Vec3 foothold = Vec3::Zero();  // world, constant during stance
  Vec3 liftoff = Vec3::Zero();   // world position at swing start
};

struct GaitState {
  std::array<LegGait, kNumLegs> legs;

  bool in_stance(int leg) const {
    return legs[leg].mode == LegMode::kStance;
  }
};

// trot: diagonal pairs (FR, RL) start in stance, (FL, RR) in swing
GaitState make_trot_start();
// stand: all legs stance, phases frozen
GaitState make_stand_start();

// Eq-style phase update: phase += dt/T_step + residual, the increment
// clamped to [0, ratio * dt/T_step]. On wrap the mode toggles and the phase
// resets to zero. Stand gaits never advance.
GaitState advance_phase(const GaitState& gait, double dt,
                        const Vec4& phase_residuals, const GaitConfig& cfg);

// capture-point foothold target in world coordinates
Vec3 heuristic_foothold(const BodyState& x, const Vec3& cmd, int leg,
                        const LegGeometry& geom, const GaitConfig& cfg,
                        const TerrainQuery& terrain);

// touchdown update for one leg: foothold = heuristic + clamped residual,
// z snapped onto the terrain
GaitState apply_touchdown(const GaitState& gait, int leg,
                          const Vec3& heuristic_target, const Vec3& residual,
                          const GaitConfig& cfg, const TerrainQuery& terrain);

struct SwingPoint {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
};

// smooth liftoff->target interpolant with an apex at phase 0.5; velocities
// are analytic derivatives scaled by 1/t_swing
SwingPoint swing_trajectory(const Vec3& liftoff, const Vec3& target,
                            double phase, double apex_height, double t_swing);

// planned contact flags over an MPC horizon, forward-simulated with zero
// residuals
using ContactTable = std::vector<std::array<bool, kNumLegs>>;
ContactTable contact_table(const GaitState& gait, const GaitConfig& cfg,
                           int horizon, double dt);

GaitConfig load_gait_config(const Config& cfg);

}  // namespace resloco
