#include "resloco/kinematics.hpp"

#include <cmath>

namespace resloco {

namespace {

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

double wrap_pi(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace

Vec3 leg_forward_kinematics(const Vec3& theta, int leg,
                            const LegGeometry& geom) {
  const double s2 = std::sin(theta[1]), c2 = std::cos(theta[1]);
  const double s23 = std::sin(theta[1] + theta[2]);
  const double c23 = std::cos(theta[1] + theta[2]);
  const Vec3 in_plane(-geom.l_thigh * s2 - geom.l_calf * s23,
                      geom.side_sign(leg) * geom.abd_offset,
                      -geom.l_thigh * c2 - geom.l_calf * c23);
  return rot_x(theta[0]) * in_plane;
}

IkResult leg_ik(const Vec3& target, int leg, const LegGeometry& geom) {
  IkResult res;
  const double sd = geom.side_sign(leg) * geom.abd_offset;
  const double l2 = geom.l_thigh, l3 = geom.l_calf;

  double px = target.x(), py = target.y(), pz = target.z();

  // lateral circle: the y-z distance from the hip must clear the abduction
  // offset
  double r2 = py * py + pz * pz;
  const double min_r2 = sd * sd + 1e-8;
  if (r2 < min_r2) {
    const double scale = std::sqrt(min_r2 / std::max(r2, 1e-12));
    py *= scale;
    pz *= scale;
    r2 = min_r2;
    res.reachable = false;
  }
  double zp = -std::sqrt(r2 - sd * sd);  // knee-down in-plane extension

  // clamp in-plane distance to the usable envelope
  double ext = std::sqrt(px * px + zp * zp);
  const double max_ext = geom.max_extension();
  if (ext > max_ext) {
    const double scale = max_ext / ext;
    px *= scale;
    zp *= scale;
    ext = max_ext;
    res.reachable = false;
  }
  const double min_ext = std::abs(l2 - l3) + 1e-3;
  if (ext < min_ext) {
    const double scale = min_ext / std::max(ext, 1e-9);
    px *= scale;
    zp *= scale;
    ext = min_ext;
    res.reachable = false;
  }

  const double theta1 = wrap_pi(std::atan2(pz, py) - std::atan2(zp, sd));

  double cos_knee = (px * px + zp * zp - l2 * l2 - l3 * l3) / (2.0 * l2 * l3);
  cos_knee = std::min(1.0, std::max(-1.0, cos_knee));
  const double theta3 = std::acos(cos_knee);  // knee-backward branch: >= 0

  const double k1 = l2 + l3 * std::cos(theta3);
  const double k2 = l3 * std::sin(theta3);
  const double theta2 = wrap_pi(std::atan2(-px, -zp) - std::atan2(k2, k1));

  res.theta = Vec3(theta1, theta2, theta3);
  return res;
}

Mat3 leg_jacobian(const Vec3& theta, int leg, const LegGeometry& geom) {
  const double sd = geom.side_sign(leg) * geom.abd_offset;
  const double l2 = geom.l_thigh, l3 = geom.l_calf;
  const double s2 = std::sin(theta[1]), c2 = std::cos(theta[1]);
  const double s23 = std::sin(theta[1] + theta[2]);
  const double c23 = std::cos(theta[1] + theta[2]);

  const double xp = -l2 * s2 - l3 * s23;
  const double zp = -l2 * c2 - l3 * c23;
  const Vec3 q(xp, sd, zp);
  const Mat3 rx = rot_x(theta[0]);

  // d(Rx q)/dtheta1 applies the x-axis angular rate to the rotated point
  const double c1 = std::cos(theta[0]), s1 = std::sin(theta[0]);
  Vec3 col1(0.0, -s1 * sd - c1 * zp, c1 * sd - s1 * zp);

  Vec3 dq2(-l2 * c2 - l3 * c23, 0.0, l2 * s2 + l3 * s23);
  Vec3 dq3(-l3 * c23, 0.0, l3 * s23);

  Mat3 j;
  j.col(0) = col1;
  j.col(1) = rx * dq2;
  j.col(2) = rx * dq3;
  return j;
}

Vec3 joint_torques(const Vec3& grf, const Vec3& theta, const Vec3& theta_dot,
                   const Vec3& p_ref, const Vec3& v_ref, const Vec3& p_foot,
                   const Vec3& v_foot, const CartesianGains& gains, bool stance,
                   int leg, const LegGeometry& geom) {
  (void)theta_dot;
  const Mat3 j = leg_jacobian(theta, leg, geom);
  if (stance) return j.transpose() * (-grf);
  const Vec3 f_cart = gains.kp.cwiseProduct(p_ref - p_foot) +
                      gains.kd.cwiseProduct(v_ref - v_foot);
  return j.transpose() * f_cart;
}

LegGeometry load_leg_geometry(const Config& cfg) {
  LegGeometry g;
  g.hip_x = cfg.get_double("legs.hip_x", g.hip_x);
  g.hip_y = cfg.get_double("legs.hip_y", g.hip_y);
  g.abd_offset = cfg.get_double("legs.abd_offset", g.abd_offset);
  g.l_thigh = cfg.get_double("legs.l_thigh", g.l_thigh);
  g.l_calf = cfg.get_double("legs.l_calf", g.l_calf);
  if (g.l_thigh <= 0 || g.l_calf <= 0 || g.abd_offset < 0)
    throw std::runtime_error("invalid leg geometry");
  return g;
}

}  // namespace resloco
