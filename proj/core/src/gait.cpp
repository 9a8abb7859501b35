#include "resloco/gait.hpp"

#include <cmath>

#include "resloco/srbm.hpp"

namespace resloco {

namespace {

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }
double smoothstep_deriv(double s) { return 6.0 * s * (1.0 - s); }

double step_time(const LegGait& leg, const GaitConfig& cfg) {
  return leg.mode == LegMode::kStance ? cfg.t_stance : cfg.t_swing;
}

}  // namespace

GaitState make_trot_start() {
  GaitState g;
  g.legs[kFR].mode = LegMode::kStance;
  g.legs[kRL].mode = LegMode::kStance;
  g.legs[kFL].mode = LegMode::kSwing;
  g.legs[kRR].mode = LegMode::kSwing;
  for (auto& leg : g.legs) leg.phase = 0.0;
  return g;
}

GaitState make_stand_start() {
  GaitState g;
  for (auto& leg : g.legs) {
    leg.mode = LegMode::kStance;
    leg.phase = 0.0;
  }
  return g;
}

GaitState advance_phase(const GaitState& gait, double dt,
                        const Vec4& phase_residuals, const GaitConfig& cfg) {
  GaitState out = gait;
  if (cfg.type == GaitType::kStand) return out;
  for (int i = 0; i < kNumLegs; ++i) {
    LegGait& leg = out.legs[i];
    const double nominal = dt / step_time(leg, cfg);
    double advance = nominal + phase_residuals[i];
    advance = std::min(std::max(advance, 0.0),
                       cfg.phase_advance_max_ratio * nominal);
    leg.phase += advance;
    if (leg.phase >= 1.0) {
      leg.phase = 0.0;
      leg.mode = leg.mode == LegMode::kStance ? LegMode::kSwing
                                              : LegMode::kStance;
    }
  }
  return out;
}

Vec3 heuristic_foothold(const BodyState& x, const Vec3& cmd, int leg,
                        const LegGeometry& geom, const GaitConfig& cfg,
                        const TerrainQuery& terrain) {
  const double yaw = x.phi.z();
  const double half_stance = 0.5 * cfg.t_stance;

  // hip offset rotated by the yaw expected halfway through the next stance
  const double yaw_pred = yaw + cmd[2] * half_stance;
  const Vec3 hip = geom.hip_offset(leg);
  const double cy = std::cos(yaw_pred), sy = std::sin(yaw_pred);
  Vec2 hip_proj(x.p.x() + cy * hip.x() - sy * hip.y(),
                x.p.y() + sy * hip.x() + cy * hip.y());

  // commanded velocity expressed in the world frame
  const double cyw = std::cos(yaw), syw = std::sin(yaw);
  const Vec2 v_des(cyw * cmd[0] - syw * cmd[1], syw * cmd[0] + cyw * cmd[1]);
  const Vec2 v_xy(x.v.x(), x.v.y());

  Vec2 target_xy =
      hip_proj + half_stance * v_xy + cfg.capture_gain * (v_xy - v_des);

  // clamp to the reach envelope around the hip projection
  const Vec2 offset = target_xy - hip_proj;
  const double max_step = 0.7 * geom.max_extension();
  if (offset.norm() > max_step)
    target_xy = hip_proj + offset * (max_step / offset.norm());

  return Vec3(target_xy.x(), target_xy.y(),
              terrain(target_xy.x(), target_xy.y()));
}

GaitState apply_touchdown(const GaitState& gait, int leg,
                          const Vec3& heuristic_target, const Vec3& residual,
                          const GaitConfig& cfg, const TerrainQuery& terrain) {
  GaitState out = gait;
  const double c = cfg.foothold_residual_clamp;
  Vec3 clamped;
  for (int a = 0; a < 3; ++a)
    clamped[a] = std::min(std::max(residual[a], -c), c);
  Vec3 foothold = heuristic_target + clamped;
  foothold.z() = terrain(foothold.x(), foothold.y());
  out.legs[leg].foothold = foothold;
  return out;
}

SwingPoint swing_trajectory(const Vec3& liftoff, const Vec3& target,
                            double phase, double apex_height, double t_swing) {
  SwingPoint out;
  const double s = smoothstep(phase);
  const double ds = smoothstep_deriv(phase);

  const Vec3 delta = target - liftoff;
  out.pos.x() = liftoff.x() + s * delta.x();
  out.pos.y() = liftoff.y() + s * delta.y();
  out.vel.x() = ds * delta.x() / t_swing;
  out.vel.y() = ds * delta.y() / t_swing;

  const double apex_z = std::max(liftoff.z(), target.z()) + apex_height;
  if (phase < 0.5) {
    const double t = 2.0 * phase;
    out.pos.z() = liftoff.z() + smoothstep(t) * (apex_z - liftoff.z());
    out.vel.z() = 2.0 * smoothstep_deriv(t) * (apex_z - liftoff.z()) / t_swing;
  } else {
    const double t = 2.0 * phase - 1.0;
    out.pos.z() = apex_z + smoothstep(t) * (target.z() - apex_z);
    out.vel.z() = 2.0 * smoothstep_deriv(t) * (target.z() - apex_z) / t_swing;
  }
  return out;
}

ContactTable contact_table(const GaitState& gait, const GaitConfig& cfg,
                           int horizon, double dt) {
  ContactTable table(horizon);
  GaitState sim = gait;
  for (int k = 0; k < horizon; ++k) {
    for (int i = 0; i < kNumLegs; ++i)
      table[k][i] = sim.legs[i].mode == LegMode::kStance;
    sim = advance_phase(sim, dt, Vec4::Zero(), cfg);
  }
  return table;
}

GaitConfig load_gait_config(const Config& cfg) {
  GaitConfig g;
  const std::string type = cfg.get_string("gait.type", "trot");
  if (type == "trot")
    g.type = GaitType::kTrot;
  else if (type == "stand")
    g.type = GaitType::kStand;
  else
    throw std::runtime_error("unknown gait.type: " + type);
  g.t_stance = cfg.get_double("gait.t_stance", g.t_stance);
  g.t_swing = cfg.get_double("gait.t_swing", g.t_swing);
  g.apex_height = cfg.get_double("gait.apex_height", g.apex_height);
  g.foothold_residual_clamp =
      cfg.get_double("gait.foothold_residual_clamp", g.foothold_residual_clamp);
  g.phase_advance_max_ratio =
      cfg.get_double("gait.phase_advance_max_ratio", g.phase_advance_max_ratio);
  g.capture_gain = cfg.get_double("gait.capture_gain", g.capture_gain);
  auto kp = cfg.get_vector("gait.swing_kp", {300.0, 300.0, 300.0});
  auto kd = cfg.get_vector("gait.swing_kd", {8.0, 8.0, 8.0});
  if (kp.size() != 3 || kd.size() != 3)
    throw std::runtime_error("gait swing gains need 3 entries");
  g.swing_gains.kp = Vec3(kp[0], kp[1], kp[2]);
  g.swing_gains.kd = Vec3(kd[0], kd[1], kd[2]);
  if (g.t_stance <= 0 || g.t_swing <= 0)
    throw std::runtime_error("gait step times must be positive");
  return g;
}

}  // namespace resloco
