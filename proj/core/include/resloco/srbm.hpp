#pragma once

#include "resloco/config.hpp"
#include "resloco/types.hpp"

namespace resloco {

// rotation matrix for ZYX Euler angles phi = [roll, pitch, yaw]:
// R = Rz(yaw) * Ry(pitch) * Rx(roll)
Mat3 rotation_zyx(const Vec3& phi);

// body-frame angular velocity to Euler-angle rates: phid = euler_rate_map * w.
// Throws SingularityError when |pitch| >= pi/2 - kPitchGuard.
Mat3 euler_rate_map(const Vec3& phi);

// inverse map: w = euler_rate_map_inv * phid (no singularity)
Mat3 euler_rate_map_inv(const Vec3& phi);

inline Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return s;
}

// world-frame inertia at orientation phi
Mat3 world_inertia(const SrbmParams& params, const Vec3& phi);

// nominal SRBM state derivative
// xdot = [v; M(phi) w; sum(u)/m + g; Iw^{-1} sum((pf_i - p) x u_i)]
Vec12 continuous_dynamics(const BodyState& x, const GrfInput& u,
                          const SrbmParams& params);

// one explicit Euler step x + dt * f(x, u); no sub-stepping
BodyState euler_step(const BodyState& x, const GrfInput& u, double dt,
                     const SrbmParams& params);

// Discrete linear model about (x0, foot_positions): coefficients M(phi0),
// Iw(phi0) and the moment arms (pf_i - p0) are frozen at the operating
// point, gravity goes into the affine term.
LinearizedModel linearize_discretize(const BodyState& x0,
                                     const std::array<Vec3, kNumLegs>& feet,
                                     const SrbmParams& params, double dt);

// the frozen-coefficient dynamics the linear model is the exact Jacobian of;
// exposed so tests can difference it
Vec12 frozen_dynamics(const LinearizedModel& at, const SrbmParams& params,
                      const Vec12& x, const Vec12& u);

// params from a config file: srbm.mass, srbm.inertia_diag, srbm.inertia_prod
// (Ixy, Ixz, Iyz), srbm.gravity
SrbmParams load_srbm_params(const Config& cfg);

}  // namespace resloco
