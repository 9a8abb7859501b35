#pragma once

#include <memory>
#include <optional>
#include <string>

#include "resloco/gait.hpp"
#include "resloco/mpc.hpp"
#include "resloco/plant.hpp"
#include "resloco/policy.hpp"
#include "resloco/residual_dynamics.hpp"
#include "resloco/residual_footstep.hpp"
#include "resloco/rng.hpp"

namespace resloco {

enum class ControllerVariant {
  kVanillaMpc,
  kResDyn,
  kResAll,
  kFposPhase,
  kPhase,
  kResdynWindow,
};

ControllerVariant parse_variant(const std::string& name);
std::string variant_name(ControllerVariant v);

struct VariantWiring {
  bool rf_foothold = false;
  bool rf_phase = false;
  bool rd_filtered = false;  // analytic-or-network residual estimate
  bool rd_window = false;    // sliding-window baseline estimate
};
VariantWiring variant_wiring(ControllerVariant v);

struct RewardConfig {
  double c1 = -1.0;
  double c2 = -0.005;
  double failure_penalty = -10.0;
};

// r = r_alive + c1 ||x* - x|| + c2 ||tau||
double compute_reward(const Vec12& x, const Vec12& x_ref, const VecX& tau,
                      bool failed, const RewardConfig& cfg);

struct InitRandomization {
  bool enabled = false;
  double rotation_range = 15.0 * M_PI / 180.0;  // rad, each axis
  double height_range = 0.1;                    // m above nominal
};

// mid-episode scripted event (payload drop), used by the robustness
// protocol and the recovery fine-tune task
struct PayloadEvent {
  double time = 0.0;
  PayloadSpec payload;
};

struct EnvConfig {
  SrbmParams srbm;  // controller's nominal model
  MpcConfig mpc;
  GaitConfig gait;
  LegGeometry legs;
  PlantConfig plant;  // ground truth
  FilterConfig filter;
  RewardConfig reward;
  RfBounds rf_bounds;
  ControllerVariant variant = ControllerVariant::kVanillaMpc;
  bool use_rd_network = false;  // deploy switch: network instead of analytic
  int window_size = 50;
  double control_rate = 100.0;
  double episode_duration = 10.0;
  Vec3 command = Vec3::Zero();
  InitRandomization init;
  // forced-zero switches for the superset property and ablations
  bool force_zero_rf = false;
  bool force_zero_rd = false;
  std::vector<PayloadEvent> payload_events;

  int substeps() const {
    return static_cast<int>(std::lround(plant.f_sample / control_rate));
  }
};

// One robot, one plant, one controller; RL-style step interface at the
// control rate (one step = one MPC tick = f_sample/control_rate substeps).
class Environment {
 public:
  explicit Environment(const EnvConfig& cfg);
  ~Environment();

  // optional deploy-mode residual network (shared, read-only)
  void set_rd_network(std::shared_ptr<const RdNetwork> net);
  void set_payload_events(std::vector<PayloadEvent> events);

  VecX reset(uint64_t seed);

  struct StepResult {
    Eigen::Matrix<double, kRfObsDim, 1> obs;
    double reward = 0.0;
    double tracking = 0.0;  // command-following reward component
    bool done = false;
    bool failed = false;
  };
  StepResult step(const VecX& action);

  // wiring after force-zero masks
  const VariantWiring& wiring() const { return wiring_; }
  const EnvConfig& config() const { return cfg_; }
  EnvConfig& config() { return cfg_; }

  const Plant& plant() const { return *plant_; }
  const GaitState& gait() const { return gait_; }
  double time() const { return time_; }
  int ticks() const { return tick_; }
  bool failed() const { return failed_; }

  // believed (measured) body state of the last tick
  const BodyState& measured_state() const { return measured_; }
  const Vec12& reference_state() const { return ref0_; }
  const Vec12& residual_estimate() const { return f_res_; }
  const VecX& last_torques() const { return tau_; }
  const MpcSolution& last_mpc() const { return mpc_solution_; }

  // per-tick RD training samples of the current episode
  const std::vector<RdSample>& rd_samples() const { return rd_samples_; }
  void set_collect_rd(bool on) { collect_rd_ = on; }
  void set_episode_id(int id) { episode_id_ = id; }

  void set_telemetry_path(const std::string& path);

 private:
  void read_sensors();
  std::array<Vec3, kNumLegs> believed_feet() const;
  Vec3 believed_foot(int leg) const;
  Vec3 believed_foot_velocity(int leg) const;
  Eigen::Matrix<double, kRfObsDim, 1> build_observation();
  void run_substeps();
  void write_telemetry();

  EnvConfig cfg_;
  VariantWiring wiring_;
  std::unique_ptr<Plant> plant_;
  std::unique_ptr<MpcController> mpc_;
  GaitState gait_;
  ResidualFilter filter_;
  WindowRegressor window_;
  std::shared_ptr<const RdNetwork> rd_network_;
  std::shared_ptr<RdNetwork> rd_runtime_;  // per-episode inference state
  JointHistory joint_history_;
  std::vector<PayloadEvent> payload_events_;
  size_t next_payload_ = 0;

  Rng rng_;
  BodyState measured_;
  VecX measured_theta_ = VecX::Zero(kNumJoints);
  VecX measured_theta_dot_ = VecX::Zero(kNumJoints);
  Vec12 f_res_ = Vec12::Zero();
  VecX tau_ = VecX::Zero(kNumJoints);
  Vec12 ref0_ = Vec12::Zero();
  MpcSolution mpc_solution_;
  std::array<Vec3, kNumLegs> heuristic_target_{};
  std::array<Vec3, kNumLegs> heuristic_delta_{};
  std::array<Vec3, kNumLegs> swing_provisional_target_{};
  RfAction pending_action_;

  double time_ = 0.0;
  int tick_ = 0;
  bool failed_ = false;
  bool collect_rd_ = false;
  int episode_id_ = 0;
  std::vector<RdSample> rd_samples_;
  std::string telemetry_path_;
  std::unique_ptr<std::ofstream> telemetry_;
};

}  // namespace resloco
