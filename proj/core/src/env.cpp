#include "resloco/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "resloco/srbm.hpp"

namespace resloco {

namespace {

double wrap_pi(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace

Environment::~Environment() = default;

ControllerVariant parse_variant(const std::string& name) {
  if (name == "vanilla-MPC" || name == "vanilla-mpc")
    return ControllerVariant::kVanillaMpc;
  if (name == "res-dyn") return ControllerVariant::kResDyn;
  if (name == "res-all") return ControllerVariant::kResAll;
  if (name == "fpos-phase") return ControllerVariant::kFposPhase;
  if (name == "phase") return ControllerVariant::kPhase;
  if (name == "resdyn-window") return ControllerVariant::kResdynWindow;
  throw std::runtime_error("unknown controller variant: " + name);
}

std::string variant_name(ControllerVariant v) {
  switch (v) {
    case ControllerVariant::kVanillaMpc: return "vanilla-MPC";
    case ControllerVariant::kResDyn: return "res-dyn";
    case ControllerVariant::kResAll: return "res-all";
    case ControllerVariant::kFposPhase: return "fpos-phase";
    case ControllerVariant::kPhase: return "phase";
    case ControllerVariant::kResdynWindow: return "resdyn-window";
  }
  return "unknown";
}

VariantWiring variant_wiring(ControllerVariant v) {
  VariantWiring w;
  switch (v) {
    case ControllerVariant::kVanillaMpc:
      break;
    case ControllerVariant::kResDyn:
      w.rd_filtered = true;
      break;
    case ControllerVariant::kResAll:
      w.rd_filtered = true;
      w.rf_foothold = true;
      w.rf_phase = true;
      break;
    case ControllerVariant::kFposPhase:
      w.rf_foothold = true;
      w.rf_phase = true;
      break;
    case ControllerVariant::kPhase:
      w.rf_phase = true;
      break;
    case ControllerVariant::kResdynWindow:
      w.rd_window = true;
      break;
  }
  return w;
}

double compute_reward(const Vec12& x, const Vec12& x_ref, const VecX& tau,
                      bool failed, const RewardConfig& cfg) {
  const double alive = failed ? cfg.failure_penalty : 0.0;
  return alive + cfg.c1 * (x_ref - x).norm() + cfg.c2 * tau.norm();
}

Environment::Environment(const EnvConfig& cfg)
    : cfg_(cfg), wiring_(variant_wiring(cfg.variant)) {
  if (cfg_.force_zero_rf) {
    wiring_.rf_foothold = false;
    wiring_.rf_phase = false;
  }
  if (cfg_.force_zero_rd) {
    wiring_.rd_filtered = false;
    wiring_.rd_window = false;
  }
  // wiring sanity: a variant without footstep residuals must never consume
  // them, the window baseline excludes the filtered path
  if (wiring_.rd_filtered && wiring_.rd_window)
    throw std::runtime_error("invalid variant wiring: two residual sources");
  if (cfg_.variant == ControllerVariant::kResDyn &&
      (wiring_.rf_foothold || wiring_.rf_phase))
    throw std::runtime_error("res-dyn must zero footstep residuals");
  if (cfg_.variant == ControllerVariant::kPhase && wiring_.rf_foothold)
    throw std::runtime_error("phase variant must zero foothold residuals");
  if (cfg_.substeps() < 1)
    throw std::runtime_error("plant rate below control rate");

  plant_ = std::make_unique<Plant>(cfg_.plant);
  mpc_ = std::make_unique<MpcController>(cfg_.mpc, cfg_.srbm);
  filter_ = ResidualFilter(cfg_.filter);
  window_ = WindowRegressor(cfg_.window_size);
  gait_ = cfg_.gait.type == GaitType::kStand ? make_stand_start()
                                             : make_trot_start();
}

void Environment::set_rd_network(std::shared_ptr<const RdNetwork> net) {
  rd_network_ = std::move(net);
}

void Environment::set_payload_events(std::vector<PayloadEvent> events) {
  cfg_.payload_events = std::move(events);
}

void Environment::read_sensors() {
  const PlantState& s = plant_->state();
  measured_ = s.body;
  measured_theta_ = s.theta;
  measured_theta_dot_ = s.theta_dot;
  const ObservationNoise& n = cfg_.plant.noise;
  if (n.phi > 0.0 || n.omega > 0.0 || n.velocity > 0.0 || n.joint_pos > 0.0 ||
      n.joint_vel > 0.0) {
    for (int a = 0; a < 3; ++a) {
      measured_.phi[a] += n.phi * rng_.normal();
      measured_.omega[a] += n.omega * rng_.normal();
      measured_.v[a] += n.velocity * rng_.normal();
    }
    for (int j = 0; j < kNumJoints; ++j) {
      measured_theta_[j] += n.joint_pos * rng_.normal();
      measured_theta_dot_[j] += n.joint_vel * rng_.normal();
    }
  }
}

Vec3 Environment::believed_foot(int leg) const {
  const Mat3 r = rotation_zyx(measured_.phi);
  const Vec3 local =
      cfg_.legs.hip_offset(leg) +
      leg_forward_kinematics(measured_theta_.segment<3>(3 * leg), leg,
                             cfg_.legs);
  return measured_.p + r * local;
}

Vec3 Environment::believed_foot_velocity(int leg) const {
  const Mat3 r = rotation_zyx(measured_.phi);
  const Vec3 theta = measured_theta_.segment<3>(3 * leg);
  const Vec3 local =
      cfg_.legs.hip_offset(leg) + leg_forward_kinematics(theta, leg, cfg_.legs);
  const Vec3 joint_vel = leg_jacobian(theta, leg, cfg_.legs) *
                         measured_theta_dot_.segment<3>(3 * leg);
  return measured_.v + r * (measured_.omega.cross(local) + joint_vel);
}

std::array<Vec3, kNumLegs> Environment::believed_feet() const {
  std::array<Vec3, kNumLegs> feet;
  for (int i = 0; i < kNumLegs; ++i) {
    feet[i] = gait_.in_stance(i) ? believed_foot(i)
                                 : swing_provisional_target_[i];
  }
  return feet;
}

VecX Environment::reset(uint64_t seed) {
  rng_.reseed(seed ^ 0xe417u);
  plant_ = std::make_unique<Plant>(cfg_.plant);
  payload_events_ = cfg_.payload_events;
  std::sort(payload_events_.begin(), payload_events_.end(),
            [](const PayloadEvent& a, const PayloadEvent& b) {
              return a.time < b.time;
            });
  next_payload_ = 0;

  double roll = 0.0, pitch = 0.0, yaw = 0.0, dz = 0.0;
  if (cfg_.init.enabled) {
    roll = rng_.uniform(-cfg_.init.rotation_range, cfg_.init.rotation_range);
    pitch = rng_.uniform(-cfg_.init.rotation_range, cfg_.init.rotation_range);
    yaw = rng_.uniform(-cfg_.init.rotation_range, cfg_.init.rotation_range);
    dz = rng_.uniform(0.0, cfg_.init.height_range);
  }
  const Vec3 phi0(roll, pitch, yaw);
  const double ground = plant_->terrain().height(0.0, 0.0);
  const Vec3 trunk(0.0, 0.0, ground + cfg_.mpc.standing_height + dz);

  // standing joint pose: feet under the hips on the terrain
  const Mat3 r0 = rotation_zyx(phi0);
  VecX theta0 = VecX::Zero(kNumJoints);
  std::array<Vec3, kNumLegs> feet0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 hip_w = trunk + r0 * cfg_.legs.hip_offset(leg);
    const Vec3 abd =
        r0.col(1) * cfg_.legs.side_sign(leg) * cfg_.legs.abd_offset;
    Vec3 foot_w = hip_w + abd;
    foot_w.z() = plant_->terrain().height(foot_w.x(), foot_w.y());
    const IkResult ik =
        leg_ik(r0.transpose() * (foot_w - hip_w), leg, cfg_.legs);
    theta0.segment<3>(3 * leg) = ik.theta;
    feet0[leg] = foot_w;
  }
  plant_->set_pose(trunk, phi0, Vec3::Zero(), Vec3::Zero(), theta0);

  gait_ = cfg_.gait.type == GaitType::kStand ? make_stand_start()
                                             : make_trot_start();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    gait_.legs[leg].foothold = feet0[leg];
    gait_.legs[leg].liftoff = feet0[leg];
    swing_provisional_target_[leg] = feet0[leg];
    heuristic_target_[leg] = feet0[leg];
    if (gait_.in_stance(leg)) plant_->set_leg_stance(leg, feet0[leg]);
  }

  // configs may have been mutated since construction (domain randomization)
  mpc_ = std::make_unique<MpcController>(cfg_.mpc, cfg_.srbm);
  filter_ = ResidualFilter(cfg_.filter);
  window_ = WindowRegressor(cfg_.window_size);
  if (rd_network_) rd_runtime_ = std::make_shared<RdNetwork>(*rd_network_);
  joint_history_.reset();
  pending_action_ = RfAction{};
  f_res_.setZero();
  tau_.setZero();
  mpc_solution_ = MpcSolution{};
  time_ = 0.0;
  tick_ = 0;
  failed_ = false;
  rd_samples_.clear();

  read_sensors();
  joint_history_.push(measured_theta_, measured_theta_dot_);
  const double base_h =
      plant_->terrain().height(measured_.p.x(), measured_.p.y());
  ref0_ = build_reference(measured_, cfg_.command, cfg_.mpc, base_h)[0];
  for (int leg = 0; leg < kNumLegs; ++leg) {
    heuristic_target_[leg] = heuristic_foothold(
        measured_, cfg_.command, leg, cfg_.legs, cfg_.gait,
        [this](double x, double y) { return plant_->terrain().height(x, y); });
    const Mat3 rz = rotation_zyx(Vec3(0, 0, measured_.phi.z()));
    heuristic_delta_[leg] =
        rz.transpose() * (heuristic_target_[leg] - gait_.legs[leg].foothold);
  }
  return build_observation();
}

Environment::StepResult Environment::step(const VecX& action) {
  StepResult out;
  if (failed_ || time_ >= cfg_.episode_duration) {
    out.obs = build_observation();
    out.done = true;
    out.failed = failed_;
    return out;
  }

  // mask the action by the variant wiring
  RfAction act = RfAction::from_vector(action);
  if (!wiring_.rf_foothold)
    for (auto& f : act.foothold) f.setZero();
  if (!wiring_.rf_phase) act.phase.setZero();
  pending_action_ = act;

  const auto terrain_fn = [this](double x, double y) {
    return plant_->terrain().height(x, y);
  };

  // gait advance + contact transitions (Eq. 9 uses this tick's residual)
  const double dt_ctrl = 1.0 / cfg_.control_rate;
  const GaitState prev_gait = gait_;
  gait_ = advance_phase(prev_gait, dt_ctrl, act.phase, cfg_.gait);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const bool was_stance = prev_gait.in_stance(leg);
    const bool is_stance = gait_.in_stance(leg);
    if (was_stance && !is_stance) {
      gait_.legs[leg].liftoff = believed_foot(leg);
      swing_provisional_target_[leg] = heuristic_target_[leg];
      plant_->set_leg_swing(leg);
    } else if (!was_stance && is_stance) {
      gait_ = apply_touchdown(gait_, leg, heuristic_target_[leg],
                              act.foothold[leg], cfg_.gait, terrain_fn);
      plant_->set_leg_stance(leg, gait_.legs[leg].foothold);
    }
  }
  // swing legs aim at the heuristic plus the live residual
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (gait_.in_stance(leg)) continue;
    Vec3 residual = act.foothold[leg];
    const double c = cfg_.gait.foothold_residual_clamp;
    for (int a = 0; a < 3; ++a) residual[a] = std::clamp(residual[a], -c, c);
    Vec3 tgt = heuristic_target_[leg] + residual;
    tgt.z() = terrain_fn(tgt.x(), tgt.y());
    swing_provisional_target_[leg] = tgt;
  }

  // residual estimate for this tick; the network input carries the estimate
  // the previous tick ran with (Eq. 18's autoregressive term)
  if (wiring_.rd_filtered) {
    if (cfg_.use_rd_network) {
      if (!rd_runtime_)
        throw std::runtime_error("rd network required but not loaded");
      const auto obs_rd = make_rd_observation(
          measured_.phi, measured_.omega, measured_theta_, measured_theta_dot_,
          tau_, f_res_);
      f_res_ = rd_runtime_->infer(obs_rd);
    } else {
      f_res_ = filter_.value();
    }
  } else if (wiring_.rd_window) {
    f_res_ = window_.estimate();
  } else {
    f_res_.setZero();
  }

  // MPC tick
  const double base_h = terrain_fn(measured_.p.x(), measured_.p.y());
  const ContactTable contacts =
      contact_table(gait_, cfg_.gait, cfg_.mpc.horizon, cfg_.mpc.dt);
  mpc_solution_ = mpc_->solve(measured_, cfg_.command, contacts,
                              believed_feet(), f_res_, base_h);

  run_substeps();

  read_sensors();
  failed_ = failed_ || plant_->state().failed ||
            check_failure(plant_->state(), plant_->terrain());
  time_ += dt_ctrl;
  ++tick_;

  // reward against the current desired state
  const double base_h2 = terrain_fn(measured_.p.x(), measured_.p.y());
  ref0_ = build_reference(measured_, cfg_.command, cfg_.mpc, base_h2)[0];
  out.reward =
      compute_reward(measured_.to_vector(), ref0_, tau_, failed_, cfg_.reward);
  out.tracking = cfg_.reward.c1 * (ref0_ - measured_.to_vector()).norm();

  // residual-dynamics training sample (Eq. 18 layout)
  if (collect_rd_) {
    RdSample s;
    s.episode = episode_id_;
    s.obs = make_rd_observation(measured_.phi, measured_.omega,
                                measured_theta_, measured_theta_dot_, tau_,
                                f_res_);
    s.label = filter_.value();
    rd_samples_.push_back(s);
  }

  joint_history_.push(measured_theta_, measured_theta_dot_);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    heuristic_target_[leg] = heuristic_foothold(measured_, cfg_.command, leg,
                                                cfg_.legs, cfg_.gait,
                                                terrain_fn);
    const Mat3 rz = rotation_zyx(Vec3(0, 0, measured_.phi.z()));
    heuristic_delta_[leg] =
        rz.transpose() * (heuristic_target_[leg] - gait_.legs[leg].foothold);
  }

  write_telemetry();

  out.obs = build_observation();
  out.failed = failed_;
  out.done = failed_ || time_ >= cfg_.episode_duration - 1e-9;
  return out;
}

void Environment::run_substeps() {
  const int n_sub = cfg_.substeps();
  const double dt_sub = 1.0 / cfg_.plant.f_sample;
  const double dt_ctrl = 1.0 / cfg_.control_rate;
  const Mat3 r_belief = rotation_zyx(measured_.phi);

  Vec12 raw_sum = Vec12::Zero();
  const GrfInput u_cmd = mpc_solution_.forces.empty()
                             ? GrfInput{}
                             : mpc_solution_.forces[0];

  for (int sub = 0; sub < n_sub; ++sub) {
    // scripted payload drops
    while (next_payload_ < payload_events_.size() &&
           plant_->time() >= payload_events_[next_payload_].time) {
      plant_->attach_payload(payload_events_[next_payload_].payload);
      ++next_payload_;
    }

    const PlantState& ps = plant_->state();
    const BodyState x_prev = ps.body;
    SrbmParams params_prev = cfg_.srbm;
    for (int leg = 0; leg < kNumLegs; ++leg) {
      // believed stance feet for the nominal model, true-joint FK
      const Vec3 local =
          cfg_.legs.hip_offset(leg) +
          leg_forward_kinematics(ps.theta.segment<3>(3 * leg), leg, cfg_.legs);
      params_prev.foot_positions[leg] =
          x_prev.p + rotation_zyx(x_prev.phi) * local;
    }

    // low-level torques at the plant rate
    VecX tau = VecX::Zero(kNumJoints);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Vec3 theta = ps.theta.segment<3>(3 * leg);
      if (gait_.in_stance(leg)) {
        const Mat3 jac = leg_jacobian(theta, leg, cfg_.legs);
        // GRF command is world frame; the leg works in body coordinates
        tau.segment<3>(3 * leg) =
            jac.transpose() * (-(r_belief.transpose() * u_cmd.f[leg]));
      } else {
        const double phase =
            std::min(gait_.legs[leg].phase +
                         static_cast<double>(sub) / n_sub * dt_ctrl /
                             cfg_.gait.t_swing,
                     0.999);
        const SwingPoint sp = swing_trajectory(
            gait_.legs[leg].liftoff, swing_provisional_target_[leg], phase,
            cfg_.gait.apex_height, cfg_.gait.t_swing);
        const Vec3 hip_w = measured_.p + r_belief * cfg_.legs.hip_offset(leg);
        const Vec3 p_ref = r_belief.transpose() * (sp.pos - hip_w);
        const Vec3 v_ref = r_belief.transpose() * sp.vel;
        const Vec3 p_foot = leg_forward_kinematics(theta, leg, cfg_.legs);
        const Vec3 v_foot = leg_jacobian(theta, leg, cfg_.legs) *
                            ps.theta_dot.segment<3>(3 * leg);
        tau.segment<3>(3 * leg) = joint_torques(
            Vec3::Zero(), theta, ps.theta_dot.segment<3>(3 * leg), p_ref,
            v_ref, p_foot, v_foot, cfg_.gait.swing_gains, false, leg,
            cfg_.legs);
      }
    }

    plant_->step(tau);
    if (sub == 0) tau_ = tau;
    if (plant_->state().failed) break;

    // residual extraction at the sim rate with the actuated GRF
    GrfInput u_real;
    u_real.f = plant_->realized_grf();
    const Vec12 raw =
        extract_residual(x_prev, plant_->state().body, u_real, dt_sub,
                         params_prev);
    filter_.update(raw, dt_sub);
    raw_sum += raw;
  }

  // the window baseline consumes tick-level raw residuals
  if (wiring_.rd_window) window_.push(raw_sum / static_cast<double>(n_sub));
}

Eigen::Matrix<double, kRfObsDim, 1> Environment::build_observation() {
  Vec3 phi_obs = measured_.phi;
  phi_obs.z() = wrap_pi(phi_obs.z());
  Vec4 phases;
  std::array<bool, kNumLegs> planned;
  for (int i = 0; i < kNumLegs; ++i) {
    phases[i] = gait_.legs[i].phase;
    planned[i] = gait_.in_stance(i);
  }
  return build_rf_observation(cfg_.command, phi_obs, measured_.omega,
                              joint_history_, heuristic_delta_, phases,
                              planned, tau_);
}

void Environment::set_telemetry_path(const std::string& path) {
  telemetry_path_ = path;
  if (path.empty()) {
    telemetry_.reset();
    return;
  }
  telemetry_ = std::make_unique<std::ofstream>(path);
  if (!*telemetry_)
    throw std::runtime_error("cannot open telemetry file: " + path);
  *telemetry_ << "time";
  for (const char* n :
       {"px", "py", "pz", "roll", "pitch", "yaw", "vx", "vy", "vz", "wx",
        "wy", "wz"})
    *telemetry_ << "," << n;
  for (int i = 0; i < 12; ++i) *telemetry_ << ",ref" << i;
  for (int leg = 0; leg < kNumLegs; ++leg)
    *telemetry_ << ",fx" << leg << ",fy" << leg << ",fz" << leg;
  for (int i = 0; i < 12; ++i) *telemetry_ << ",res" << i;
  *telemetry_ << ",qp_status,fallback\n";
}

void Environment::write_telemetry() {
  if (!telemetry_) return;
  auto& out = *telemetry_;
  out << time_;
  const Vec12 x = measured_.to_vector();
  for (int i = 0; i < 12; ++i) out << "," << x[i];
  for (int i = 0; i < 12; ++i) out << "," << ref0_[i];
  const GrfInput u = mpc_solution_.forces.empty() ? GrfInput{}
                                                  : mpc_solution_.forces[0];
  for (int leg = 0; leg < kNumLegs; ++leg)
    out << "," << u.f[leg].x() << "," << u.f[leg].y() << "," << u.f[leg].z();
  for (int i = 0; i < 12; ++i) out << "," << f_res_[i];
  out << "," << static_cast<int>(mpc_solution_.qp_status) << ","
      << (mpc_solution_.fallback ? 1 : 0) << "\n";
}

}  // namespace resloco
