#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "resloco/env.hpp"
#include "resloco/policy.hpp"
#include "resloco/running_stats.hpp"

namespace resloco {

struct PpoConfig {
  int n_envs = 8;  // paper-scale preset uses 100
  int steps_per_update = 200;
  int n_batches = 4;
  int n_epochs = 4;
  double lr = 5e-4;
  double gamma = 0.996;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.005;

  bool valid() const {
    return n_envs > 0 && steps_per_update > 0 && n_batches > 0 &&
           n_epochs > 0 && lr > 0 && gamma > 0 && gamma <= 1 &&
           gae_lambda >= 0 && gae_lambda <= 1 && clip > 0 && clip < 1;
  }
};

// Table-style domain randomization ranges, sampled at every episode reset
struct DomainRandConfig {
  Vec3 command_range = Vec3(2.0, 1.0, 1.0);  // +- per axis
  double friction_lo = 0.4, friction_hi = 1.0;
  double payload_lo = -1.0, payload_hi = 5.0;   // kg
  Vec3 payload_offset_range = Vec3(0.15, 0.05, 0.08);
  double h_env_lo = 0.0, h_env_hi = 0.1;  // m
  double com_range = 0.05;                // m, each axis
  double init_rotation = 15.0 * M_PI / 180.0;
  double init_height_lo = 0.0, init_height_hi = 0.1;
  std::vector<TerrainKind> terrains = {TerrainKind::kFlat, TerrainKind::kPerlin,
                                       TerrainKind::kStepped};
  bool randomize_weights = false;  // MPC cost-weight randomization toggle
  double w_pphi_lo = 10.0, w_pphi_hi = 30.0;
  double w_vomega_lo = 0.1, w_vomega_hi = 0.3;
  // optional scheduled lateral shoves (N s); zero disables
  double impulse_max = 0.0;
  int impulse_count = 0;
  double impulse_duration = 0.1;
  // payload attach delay range; payloads drop mid-episode when hi > 0
  double payload_time_lo = 0.0, payload_time_hi = 0.0;
};

struct SampledDomain {
  Vec3 command;
  double friction = 0.8;
  double payload = 0.0;
  Vec3 payload_offset = Vec3::Zero();
  double h_env = 0.0;
  Vec3 com_offset = Vec3::Zero();
  TerrainKind terrain = TerrainKind::kFlat;
  double w_pphi = 20.0, w_vomega = 0.2;
};

// draws a sample and writes it into the environment config
SampledDomain apply_domain_randomization(EnvConfig& env,
                                         const DomainRandConfig& dr, Rng& rng,
                                         uint64_t terrain_seed);

struct RolloutBuffer {
  int n_steps = 0;
  int n_envs = 0;
  std::vector<VecX> obs;      // normalized, step-major [step * n_envs + env]
  std::vector<VecX> actions;  // pre-squash z
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> tracking;
  std::vector<double> values;
  std::vector<uint8_t> dones;  // episode ended at this transition
  std::vector<double> bootstrap_values;  // per env, after the last step
  std::vector<uint8_t> bootstrap_dones;

  int size() const { return n_steps * n_envs; }
  void resize(int steps, int envs);
};

// standard GAE(lambda) over the buffer's env streams
void gae_advantages(const RolloutBuffer& buffer, double gamma, double lambda,
                    VecX* advantages, VecX* returns);

struct PpoLossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  bool skipped_non_finite = false;
};

// clipped-surrogate update, n_epochs x n_batches minibatches; advantages are
// normalized once per update
PpoLossStats ppo_update(GaussianPolicy& policy, MlpNet& value_net,
                        const RolloutBuffer& buffer, const VecX& advantages,
                        const VecX& returns, const PpoConfig& cfg,
                        AdamOptimizer& policy_opt, AdamOptimizer& value_opt,
                        Rng& rng);

struct TrainerConfig {
  PpoConfig ppo;
  DomainRandConfig dr;
  EnvConfig env;
  long total_env_steps = 2'000'000;
  uint64_t seed = 0;
  std::string out_dir;
  // early stop once the smoothed tracking reward reaches this level (and the
  // step budget is otherwise the cap); unset keeps training to the cap
  std::optional<double> tracking_threshold;
  int threshold_window = 10;
  bool collect_rd = true;
  size_t rd_target = 200'000;
  int checkpoint_every = 200;  // updates
  bool verbose = true;
};

struct CurvePoint {
  int update = 0;
  long env_steps = 0;
  double mean_return = 0.0;
  double tracking_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct TrainResult {
  int updates = 0;
  long env_steps = 0;
  std::optional<int> threshold_reached_at;
  double final_mean_return = 0.0;
  std::vector<CurvePoint> curve;
};

// PPO over vectorized environments with simultaneous residual-dynamics data
// collection (training mode feeds the analytic filtered residual to the MPC)
class PpoTrainer {
 public:
  explicit PpoTrainer(const TrainerConfig& cfg);
  ~PpoTrainer();

  // fine-tune path: start from existing nets/stats instead of fresh init
  void warm_start(const GaussianPolicy& policy, const MlpNet& value,
                  const RunningStats& obs_stats);

  TrainResult run();

  const GaussianPolicy& policy() const { return policy_; }
  const MlpNet& value_net() const { return value_; }
  const RunningStats& obs_stats() const { return obs_stats_; }
  RdDataset& rd_dataset() { return rd_data_; }

  void save_checkpoint(const std::string& dir) const;

 private:
  void rollout(RolloutBuffer* buffer);
  void reset_env(int idx);
  void harvest_rd(int idx);

  TrainerConfig cfg_;
  std::vector<std::unique_ptr<Environment>> envs_;
  std::vector<Rng> env_rngs_;
  std::vector<VecX> current_obs_;  // raw
  std::vector<double> episode_returns_;
  std::deque<double> finished_returns_;
  GaussianPolicy policy_;
  MlpNet value_;
  RunningStats obs_stats_;
  AdamOptimizer policy_opt_;
  AdamOptimizer value_opt_;
  Rng rng_;
  RdDataset rd_data_;
  int episode_counter_ = 0;
};

// mean episode return of the zero-action policy under the same conditions
double zero_action_baseline(const TrainerConfig& cfg, int episodes);

// checkpoint file layout helpers shared by trainer, CLI and experiments
struct Checkpoint {
  GaussianPolicy policy;
  MlpNet value;
  RunningStats obs_stats;
  static Checkpoint load(const std::string& dir);
  void save(const std::string& dir) const;
};

}  // namespace resloco
