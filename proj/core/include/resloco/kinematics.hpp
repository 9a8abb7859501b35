#pragma once

#include "resloco/config.hpp"
#include "resloco/types.hpp"

namespace resloco {

// 3-DoF leg: hip roll, hip pitch, knee pitch. Hip roots sit at
// hip_offset(leg) in the body frame; an abduction link of length abd_offset
// extends laterally (left legs +y, right legs -y), then thigh and calf.
struct LegGeometry {
  double hip_x = 0.19;
  double hip_y = 0.05;
  double abd_offset = 0.08;
  double l_thigh = 0.21;
  double l_calf = 0.21;
  Vec3 joint_lower = Vec3(-0.8, -1.5, -2.7);
  Vec3 joint_upper = Vec3(0.8, 3.0, 2.7);

  // body-frame hip root of leg i (FR, FL, RR, RL)
  Vec3 hip_offset(int leg) const {
    const double sx = (leg == kFR || leg == kFL) ? 1.0 : -1.0;
    return Vec3(sx * hip_x, side_sign(leg) * hip_y, 0.0);
  }
  // +1 for left legs, -1 for right legs
  double side_sign(int leg) const {
    return (leg == kFL || leg == kRL) ? 1.0 : -1.0;
  }
  // largest usable leg extension in the thigh-calf plane
  double max_extension() const { return l_thigh + l_calf - 1e-3; }
  // body-frame distance from hip root to foot at full usable extension
  double max_reach() const {
    return std::sqrt(abd_offset * abd_offset +
                     max_extension() * max_extension());
  }
};

struct IkResult {
  Vec3 theta = Vec3::Zero();
  bool reachable = true;  // false when the target was clamped to the envelope
};

// foot position relative to the hip root, body frame
Vec3 leg_forward_kinematics(const Vec3& theta, int leg,
                            const LegGeometry& geom);

// closed-form IK, knee-backward branch; unreachable targets are clamped to
// the reach envelope and flagged
IkResult leg_ik(const Vec3& foot_pos_hip, int leg, const LegGeometry& geom);

// d(foot position)/d(theta), body frame
Mat3 leg_jacobian(const Vec3& theta, int leg, const LegGeometry& geom);

struct CartesianGains {
  Vec3 kp = Vec3(300.0, 300.0, 300.0);
  Vec3 kd = Vec3(8.0, 8.0, 8.0);
};

// Joint torques per leg. Stance legs realize the commanded GRF: u is the
// ground-on-body reaction, the leg pushes the ground with -u, so
// tau_ff = J' * (-u). Swing legs run Cartesian PD through the Jacobian:
// tau_fb = J' * (Kp (p_ref - p) + Kd (v_ref - v)).
Vec3 joint_torques(const Vec3& grf, const Vec3& theta, const Vec3& theta_dot,
                   const Vec3& p_ref, const Vec3& v_ref, const Vec3& p_foot,
                   const Vec3& v_foot, const CartesianGains& gains, bool stance,
                   int leg, const LegGeometry& geom);

LegGeometry load_leg_geometry(const Config& cfg);

}  // namespace resloco
