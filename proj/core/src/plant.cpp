#include "resloco/plant.hpp"

#include <algorithm>
#include <cmath>

#include "resloco/srbm.hpp"

namespace resloco {

namespace {

// parallel-axis contribution of mass m displaced by d from the reference
Mat3 point_inertia(double m, const Vec3& d) {
  return m * (d.squaredNorm() * Mat3::Identity() - d * d.transpose());
}

}  // namespace

double PlantConfig::total_mass() const {
  double m = base_mass;
  for (const auto& p : payloads) m += p.mass;
  return m;
}

bool PlantConfig::valid() const {
  if (!(total_mass() > 0.0) || !(base_mass > 0.0)) return false;
  if (!(f_sample > 0.0) || !(joint_inertia > 0.0)) return false;
  return true;
}

bool check_failure(const PlantState& state, const Terrain& terrain) {
  if (state.failed) return true;
  if (std::abs(state.body.phi.x()) > 1.0) return true;
  if (std::abs(state.body.phi.y()) > 1.0) return true;
  const double ground = terrain.height(state.body.p.x(), state.body.p.y());
  return state.body.p.z() - ground < 0.10;
}

Plant::Plant(const PlantConfig& cfg) : cfg_(cfg), terrain_(cfg.terrain) {
  if (!cfg_.valid()) throw std::invalid_argument("invalid plant config");
  rebuild_mass_properties();
  grf_.fill(Vec3::Zero());
  slip_.fill(false);
  foothold_.fill(Vec3::Zero());
}

void Plant::rebuild_mass_properties() {
  total_mass_ = cfg_.total_mass();
  Vec3 weighted = cfg_.base_mass * cfg_.com_offset;
  for (const auto& p : cfg_.payloads) weighted += p.mass * p.offset;
  com_ = weighted / total_mass_;
  inertia_ = cfg_.base_inertia + point_inertia(cfg_.base_mass,
                                               cfg_.com_offset - com_);
  for (const auto& p : cfg_.payloads)
    inertia_ += point_inertia(p.mass, p.offset - com_);
}

void Plant::set_pose(const Vec3& trunk_position, const Vec3& phi,
                     const Vec3& v, const Vec3& omega, const VecX& theta) {
  state_.body.phi = phi;
  state_.body.v = v;
  state_.body.omega = omega;
  state_.theta = theta;
  state_.theta_dot = VecX::Zero(kNumJoints);
  state_.failed = false;
  state_.time = 0.0;
  const Mat3 r = rotation_zyx(phi);
  state_.body.p = trunk_position + r * com_;
  for (int i = 0; i < kNumLegs; ++i)
    if (state_.contact[i]) foothold_[i] = foot_world(i);
}

Vec3 Plant::trunk_origin() const {
  return state_.body.p - rotation_zyx(state_.body.phi) * com_;
}

Vec3 Plant::hip_world(int leg) const {
  return trunk_origin() +
         rotation_zyx(state_.body.phi) * cfg_.legs.hip_offset(leg);
}

Vec3 Plant::foot_world(int leg) const {
  const Vec3 local = cfg_.legs.hip_offset(leg) +
                     leg_forward_kinematics(state_.theta.segment<3>(3 * leg),
                                            leg, cfg_.legs);
  return trunk_origin() + rotation_zyx(state_.body.phi) * local;
}

Vec3 Plant::foot_velocity_world(int leg) const {
  const Mat3 r = rotation_zyx(state_.body.phi);
  const Vec3 theta = state_.theta.segment<3>(3 * leg);
  const Vec3 local = cfg_.legs.hip_offset(leg) +
                     leg_forward_kinematics(theta, leg, cfg_.legs) - com_;
  const Vec3 joint_vel =
      leg_jacobian(theta, leg, cfg_.legs) * state_.theta_dot.segment<3>(3 * leg);
  return state_.body.v + r * (state_.body.omega.cross(local) + joint_vel);
}

Vec3 Plant::world_disturbance_force(double t) const {
  Vec3 f = Vec3::Zero();
  for (const auto& d : cfg_.disturbances)
    if (t >= d.time && t < d.time + d.duration) f += d.force;
  return f;
}

Vec3 Plant::world_disturbance_torque(double t) const {
  Vec3 tq = Vec3::Zero();
  for (const auto& d : cfg_.disturbances)
    if (t >= d.time && t < d.time + d.duration) tq += d.torque;
  return tq;
}

void Plant::set_leg_stance(int leg, const Vec3& foothold_world) {
  if (state_.contact[leg]) return;
  apply_touchdown_impulse(leg);
  state_.contact[leg] = true;
  foothold_[leg] = foothold_world;
  pin_stance_joints();
}

void Plant::set_leg_swing(int leg) {
  state_.contact[leg] = false;
  grf_[leg].setZero();
  slip_[leg] = false;
}

void Plant::apply_touchdown_impulse(int leg) {
  const Vec3 v_foot = foot_velocity_world(leg);
  if (v_foot.z() >= 0.0) return;
  const Vec3 n = Vec3::UnitZ();
  const Vec3 r = foot_world(leg) - state_.body.p;
  const Mat3 rot = rotation_zyx(state_.body.phi);
  const Mat3 iw_inv = (rot * inertia_ * rot.transpose()).inverse();
  // scalar impulse along n canceling the foot's normal velocity
  const double effective =
      1.0 / total_mass_ + n.dot((iw_inv * r.cross(n)).cross(r));
  const double impulse = -v_foot.z() / std::max(effective, 1e-6);
  state_.body.v += impulse * n / total_mass_;
  state_.body.omega += rot.transpose() * (iw_inv * r.cross(impulse * n));
}

void Plant::pin_stance_joints() {
  const Mat3 r = rotation_zyx(state_.body.phi);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (!state_.contact[leg]) continue;
    const Vec3 hip = hip_world(leg);
    const Vec3 target_hip_frame = r.transpose() * (foothold_[leg] - hip);
    const IkResult ik = leg_ik(target_hip_frame, leg, cfg_.legs);
    state_.theta.segment<3>(3 * leg) = ik.theta;

    // joint rates consistent with a world-fixed foot
    const Vec3 local = cfg_.legs.hip_offset(leg) +
                       leg_forward_kinematics(ik.theta, leg, cfg_.legs) - com_;
    const Vec3 rel_vel =
        -r.transpose() * state_.body.v - state_.body.omega.cross(local);
    const Mat3 jac = leg_jacobian(ik.theta, leg, cfg_.legs);
    Vec3 rate = jac.partialPivLu().solve(rel_vel);
    const double cap = 60.0;
    for (int a = 0; a < 3; ++a) rate[a] = std::clamp(rate[a], -cap, cap);
    state_.theta_dot.segment<3>(3 * leg) = rate;
  }
}

void Plant::attach_payload(const PayloadSpec& payload) {
  const Mat3 r = rotation_zyx(state_.body.phi);
  const Vec3 trunk = trunk_origin();
  cfg_.payloads.push_back(payload);
  rebuild_mass_properties();
  state_.body.p = trunk + r * com_;
  pin_stance_joints();
}

void Plant::step(const VecX& tau) {
  if (state_.failed) return;
  const double dt = 1.0 / cfg_.f_sample;
  const double mu = terrain_.friction();
  const Mat3 rot = rotation_zyx(state_.body.phi);

  // realize stance GRFs from torques, clamp to the friction cone
  Vec3 force_sum = Vec3::Zero();
  Vec3 torque_sum = Vec3::Zero();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    slip_[leg] = false;
    if (!state_.contact[leg]) {
      grf_[leg].setZero();
      continue;
    }
    const Vec3 theta = state_.theta.segment<3>(3 * leg);
    const Mat3 jac = leg_jacobian(theta, leg, cfg_.legs);
    // tau = J' (-u_body): solve for the world-frame reaction
    Vec3 u_body =
        -jac.transpose().partialPivLu().solve(tau.segment<3>(3 * leg));
    Vec3 u = rot * u_body;
    for (int a = 0; a < 3; ++a)
      u[a] = std::clamp(u[a], -cfg_.grf_limit, cfg_.grf_limit);

    if (u.z() < 0.0) u.setZero();  // unilateral contact
    const double tangential = std::hypot(u.x(), u.y());
    const double limit = mu * u.z();
    if (tangential > limit && tangential > 1e-12) {
      const Vec2 dir(u.x() / tangential, u.y() / tangential);
      const double excess = tangential - limit;
      u.x() = dir.x() * limit;
      u.y() = dir.y() * limit;
      // foot drifts against the demanded shear
      foothold_[leg].x() -= cfg_.slip_coefficient * excess * dir.x() * dt;
      foothold_[leg].y() -= cfg_.slip_coefficient * excess * dir.y() * dt;
      foothold_[leg].z() =
          terrain_.height(foothold_[leg].x(), foothold_[leg].y());
      slip_[leg] = true;
    }
    grf_[leg] = u;
    force_sum += u;
    torque_sum += (foot_world(leg) - state_.body.p).cross(u);
  }

  // scheduled disturbance wrench at the trunk origin
  const Vec3 f_dist = world_disturbance_force(state_.time);
  if (f_dist.squaredNorm() > 0.0) {
    force_sum += f_dist;
    torque_sum += (trunk_origin() - state_.body.p).cross(f_dist);
  }
  torque_sum += world_disturbance_torque(state_.time);

  // translation: exact step under constant acceleration
  const Vec3 accel = force_sum / total_mass_ + cfg_.gravity;
  state_.body.p += dt * state_.body.v + 0.5 * dt * dt * accel;
  state_.body.v += dt * accel;

  // rotation: RK4 on (phi, omega) with the world torque held constant
  const auto rot_deriv = [&](const Vec3& phi, const Vec3& omega, Vec3* dphi,
                             Vec3* domega) -> bool {
    if (std::abs(phi.y()) >= M_PI / 2.0 - kPitchGuard) return false;
    *dphi = euler_rate_map(phi) * omega;
    const Vec3 tau_body = rotation_zyx(phi).transpose() * torque_sum;
    *domega = inertia_.ldlt().solve(tau_body -
                                    omega.cross(inertia_ * omega));
    return true;
  };
  Vec3 k1p, k1w, k2p, k2w, k3p, k3w, k4p, k4w;
  const Vec3 phi0 = state_.body.phi, w0 = state_.body.omega;
  bool ok = rot_deriv(phi0, w0, &k1p, &k1w) &&
            rot_deriv(phi0 + 0.5 * dt * k1p, w0 + 0.5 * dt * k1w, &k2p, &k2w) &&
            rot_deriv(phi0 + 0.5 * dt * k2p, w0 + 0.5 * dt * k2w, &k3p, &k3w) &&
            rot_deriv(phi0 + dt * k3p, w0 + dt * k3w, &k4p, &k4w);
  if (!ok) {
    state_.failed = true;
    return;
  }
  state_.body.phi += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  state_.body.omega += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);

  // swing joints: constant-inertia model with viscous damping
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (state_.contact[leg]) continue;
    for (int a = 0; a < 3; ++a) {
      const int j = 3 * leg + a;
      const double acc = (tau[j] - cfg_.joint_damping * state_.theta_dot[j]) /
                         cfg_.joint_inertia;
      state_.theta_dot[j] += dt * acc;
      state_.theta[j] += dt * state_.theta_dot[j];
      if (state_.theta[j] < cfg_.legs.joint_lower[a]) {
        state_.theta[j] = cfg_.legs.joint_lower[a];
        state_.theta_dot[j] = std::max(0.0, state_.theta_dot[j]);
      } else if (state_.theta[j] > cfg_.legs.joint_upper[a]) {
        state_.theta[j] = cfg_.legs.joint_upper[a];
        state_.theta_dot[j] = std::min(0.0, state_.theta_dot[j]);
      }
    }
  }

  // stance joints track the world-fixed pins
  pin_stance_joints();

  state_.time += dt;
  if (!state_.body.finite() || !state_.theta.allFinite() ||
      !state_.theta_dot.allFinite()) {
    state_.failed = true;
    return;
  }
  if (std::abs(state_.body.phi.y()) >= M_PI / 2.0 - kPitchGuard)
    state_.failed = true;
}

double Plant::mechanical_energy() const {
  const double kinetic =
      0.5 * total_mass_ * state_.body.v.squaredNorm() +
      0.5 * state_.body.omega.dot(inertia_ * state_.body.omega);
  const double potential = -total_mass_ * cfg_.gravity.dot(state_.body.p);
  return kinetic + potential;
}

}  // namespace resloco
