#pragma once

#include <array>
#include <vector>

#include "resloco/kinematics.hpp"
#include "resloco/terrain.hpp"
#include "resloco/types.hpp"

namespace resloco {

struct PayloadSpec {
  double mass = 0.0;
  Vec3 offset = Vec3::Zero();  // attachment point, trunk frame
};

struct DisturbanceEvent {
  double time = 0.0;
  double duration = 0.0;
  Vec3 force = Vec3::Zero();  // world frame, applied at the trunk origin
  Vec3 torque = Vec3::Zero();
};

struct ObservationNoise {
  double phi = 0.0;
  double omega = 0.0;
  double velocity = 0.0;
  double joint_pos = 0.0;
  double joint_vel = 0.0;
};

struct PlantConfig {
  double base_mass = 12.0;
  Mat3 base_inertia = (Eigen::Vector3d(0.08, 0.28, 0.30)).asDiagonal();
  Vec3 com_offset = Vec3::Zero();  // base CoM shift from trunk origin
  std::vector<PayloadSpec> payloads;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  TerrainConfig terrain;
  std::vector<DisturbanceEvent> disturbances;
  double f_sample = 1000.0;
  double joint_inertia = 0.02;   // swing joint-space model, kg m^2
  double joint_damping = 0.15;   // N m s
  double slip_coefficient = 0.02;  // foot drift per excess force, m/(N s)
  double grf_limit = 800.0;        // per-leg safety cap, N
  LegGeometry legs;
  ObservationNoise noise;

  double total_mass() const;
  bool valid() const;
};

struct PlantState {
  BodyState body;  // p is the composite CoM in world coordinates
  VecX theta = VecX::Zero(kNumJoints);
  VecX theta_dot = VecX::Zero(kNumJoints);
  std::array<bool, kNumLegs> contact{false, false, false, false};
  bool failed = false;
  double time = 0.0;
};

// failure: |roll| or |pitch| beyond 1 rad (strict), or CoM closer than
// 0.10 m to the terrain under it
bool check_failure(const PlantState& state, const Terrain& terrain);

// Ground-truth rigid body with deliberate mismatch against the nominal
// SRBM: payloads, CoM shift, terrain, slip, impacts, scheduled wrenches.
// Legs are massless for the base dynamics; stance feet are position pins
// that realize GRF from joint torques, swing legs integrate a constant
// per-joint inertia model.
class Plant {
 public:
  explicit Plant(const PlantConfig& cfg);

  // place the trunk and joints; stance pins are re-derived from FK
  void set_pose(const Vec3& trunk_position, const Vec3& phi, const Vec3& v,
                const Vec3& omega, const VecX& theta);

  // one 1/f_sample step under the given joint torques
  void step(const VecX& tau);

  void set_leg_stance(int leg, const Vec3& foothold_world);
  void set_leg_swing(int leg);

  // quasi-static mid-episode attach; linear/angular velocity preserved
  void attach_payload(const PayloadSpec& payload);

  const PlantState& state() const { return state_; }
  const Terrain& terrain() const { return terrain_; }
  const PlantConfig& config() const { return cfg_; }
  double time() const { return state_.time; }

  // realized ground reaction force of the last step, world frame
  const std::array<Vec3, kNumLegs>& realized_grf() const { return grf_; }
  const std::array<bool, kNumLegs>& slipping() const { return slip_; }

  // true kinematics
  Vec3 trunk_origin() const;
  Vec3 hip_world(int leg) const;
  Vec3 foot_world(int leg) const;
  Vec3 foot_velocity_world(int leg) const;
  Vec3 pinned_foothold(int leg) const { return foothold_[leg]; }

  double composite_mass() const { return total_mass_; }
  const Mat3& composite_inertia() const { return inertia_; }
  const Vec3& composite_com_offset() const { return com_; }

  // kinetic + potential energy of the composite body
  double mechanical_energy() const;

 private:
  void rebuild_mass_properties();
  void pin_stance_joints();
  void apply_touchdown_impulse(int leg);
  Vec3 world_disturbance_force(double t) const;
  Vec3 world_disturbance_torque(double t) const;

  PlantConfig cfg_;
  Terrain terrain_;
  PlantState state_;
  std::array<Vec3, kNumLegs> foothold_{};  // world pin for stance legs
  std::array<Vec3, kNumLegs> grf_{};
  std::array<bool, kNumLegs> slip_{};

  double total_mass_ = 0.0;
  Mat3 inertia_ = Mat3::Identity();  // composite, body frame, about CoM
  Vec3 com_ = Vec3::Zero();          // composite CoM, trunk frame
};

}  // namespace resloco
