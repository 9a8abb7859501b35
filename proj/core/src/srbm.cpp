#include "resloco/srbm.hpp"

#include <cmath>

namespace resloco {

Mat3 rotation_zyx(const Vec3& phi) {
  const double cr = std::cos(phi.x()), sr = std::sin(phi.x());
  const double cp = std::cos(phi.y()), sp = std::sin(phi.y());
  const double cy = std::cos(phi.z()), sy = std::sin(phi.z());
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,  //
      sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,   //
      -sp, cp * sr, cp * cr;
  return r;
}

Mat3 euler_rate_map(const Vec3& phi) {
  const double pitch = phi.y();
  if (std::abs(pitch) >= M_PI / 2.0 - kPitchGuard)
    throw SingularityError("Euler-rate map singular: |pitch| at guard");
  const double cr = std::cos(phi.x()), sr = std::sin(phi.x());
  const double cp = std::cos(pitch), tp = std::tan(pitch);
  Mat3 m;
  m << 1.0, sr * tp, cr * tp,  //
      0.0, cr, -sr,            //
      0.0, sr / cp, cr / cp;
  return m;
}

Mat3 euler_rate_map_inv(const Vec3& phi) {
  const double cr = std::cos(phi.x()), sr = std::sin(phi.x());
  const double cp = std::cos(phi.y()), sp = std::sin(phi.y());
  Mat3 e;
  e << 1.0, 0.0, -sp,   //
      0.0, cr, cp * sr, //
      0.0, -sr, cp * cr;
  return e;
}

Mat3 world_inertia(const SrbmParams& params, const Vec3& phi) {
  const Mat3 r = rotation_zyx(phi);
  return r * params.inertia * r.transpose();
}

Vec12 continuous_dynamics(const BodyState& x, const GrfInput& u,
                          const SrbmParams& params) {
  const Mat3 m_map = euler_rate_map(x.phi);  // throws at pitch guard
  const Mat3 iw = world_inertia(params, x.phi);

  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  for (int i = 0; i < kNumLegs; ++i) {
    force += u.f[i];
    torque += (params.foot_positions[i] - x.p).cross(u.f[i]);
  }

  Vec12 xdot;
  xdot.segment<3>(0) = x.v;
  xdot.segment<3>(3) = m_map * x.omega;
  xdot.segment<3>(6) = force / params.mass + params.gravity;
  xdot.segment<3>(9) = iw.ldlt().solve(torque);
  return xdot;
}

BodyState euler_step(const BodyState& x, const GrfInput& u, double dt,
                     const SrbmParams& params) {
  const Vec12 xdot = continuous_dynamics(x, u, params);
  return BodyState::from_vector(x.to_vector() + dt * xdot);
}

LinearizedModel linearize_discretize(const BodyState& x0,
                                     const std::array<Vec3, kNumLegs>& feet,
                                     const SrbmParams& params, double dt) {
  LinearizedModel model;
  model.dt = dt;
  model.phi0 = x0.phi;
  model.p0 = x0.p;
  model.foot_positions = feet;

  const Mat3 m_map = euler_rate_map(x0.phi);  // throws at pitch guard
  const Mat3 iw_inv = world_inertia(params, x0.phi).inverse();

  // A = I + dt * dF/dx with every coefficient frozen at x0:
  // position rows couple to velocity, Euler rows couple to omega
  model.A.setIdentity();
  model.A.block<3, 3>(0, 6) = dt * Mat3::Identity();
  model.A.block<3, 3>(3, 9) = dt * m_map;

  // B = dt * dF/du, moment arms frozen at (pf_i - p0)
  for (int i = 0; i < kNumLegs; ++i) {
    model.B.block<3, 3>(6, 3 * i) = (dt / params.mass) * Mat3::Identity();
    model.B.block<3, 3>(9, 3 * i) = dt * iw_inv * skew(feet[i] - x0.p);
  }

  model.affine.setZero();
  model.affine.segment<3>(6) = dt * params.gravity;
  return model;
}

Vec12 frozen_dynamics(const LinearizedModel& at, const SrbmParams& params,
                      const Vec12& x, const Vec12& u) {
  const Mat3 m_map = euler_rate_map(at.phi0);
  const Mat3 iw_inv = world_inertia(params, at.phi0).inverse();
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3 ui = u.segment<3>(3 * i);
    force += ui;
    torque += (at.foot_positions[i] - at.p0).cross(ui);
  }
  Vec12 xdot;
  xdot.segment<3>(0) = x.segment<3>(6);
  xdot.segment<3>(3) = m_map * x.segment<3>(9);
  xdot.segment<3>(6) = force / params.mass + params.gravity;
  xdot.segment<3>(9) = iw_inv * torque;
  return xdot;
}

SrbmParams load_srbm_params(const Config& cfg) {
  SrbmParams p;
  p.mass = cfg.get_double("srbm.mass", p.mass);
  auto diag = cfg.get_vector("srbm.inertia_diag", {0.08, 0.28, 0.30});
  auto prod = cfg.get_vector("srbm.inertia_prod", {0.0, 0.0, 0.0});
  if (diag.size() != 3 || prod.size() != 3)
    throw std::runtime_error("srbm inertia entries need 3 components");
  Mat3 inertia;
  inertia << diag[0], prod[0], prod[1],  //
      prod[0], diag[1], prod[2],         //
      prod[1], prod[2], diag[2];
  p.inertia = inertia;
  auto g = cfg.get_vector("srbm.gravity", {0.0, 0.0, -9.81});
  if (g.size() != 3) throw std::runtime_error("srbm.gravity needs 3 entries");
  p.gravity = Vec3(g[0], g[1], g[2]);
  if (!p.valid()) throw std::runtime_error("invalid srbm parameters");
  return p;
}

}  // namespace resloco
