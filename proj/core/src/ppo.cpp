#include "resloco/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

namespace resloco {

SampledDomain apply_domain_randomization(EnvConfig& env,
                                         const DomainRandConfig& dr, Rng& rng,
                                         uint64_t terrain_seed) {
  SampledDomain s;
  for (int a = 0; a < 3; ++a)
    s.command[a] = rng.uniform(-dr.command_range[a], dr.command_range[a]);
  s.friction = rng.uniform(dr.friction_lo, dr.friction_hi);
  s.payload = rng.uniform(dr.payload_lo, dr.payload_hi);
  for (int a = 0; a < 3; ++a)
    s.payload_offset[a] = rng.uniform(-dr.payload_offset_range[a],
                                      dr.payload_offset_range[a]);
  s.h_env = rng.uniform(dr.h_env_lo, dr.h_env_hi);
  for (int a = 0; a < 3; ++a)
    s.com_offset[a] = rng.uniform(-dr.com_range, dr.com_range);
  s.terrain = dr.terrains.empty()
                  ? TerrainKind::kFlat
                  : dr.terrains[rng.uniform_int(dr.terrains.size())];

  env.command = s.command;
  env.plant.com_offset = s.com_offset;
  env.plant.payloads.clear();
  env.payload_events.clear();
  if (std::abs(s.payload) > 1e-9) {
    if (dr.payload_time_hi > 0.0) {
      PayloadEvent ev;
      ev.time = rng.uniform(dr.payload_time_lo, dr.payload_time_hi);
      ev.payload = {s.payload, s.payload_offset};
      env.payload_events.push_back(ev);
    } else {
      env.plant.payloads.push_back({s.payload, s.payload_offset});
    }
  }
  env.plant.terrain.kind = s.terrain;
  env.plant.terrain.h_env = s.terrain == TerrainKind::kFlat ? 0.0 : s.h_env;
  env.plant.terrain.friction = s.friction;
  env.plant.terrain.seed = terrain_seed;
  env.init.enabled = true;
  env.init.rotation_range = dr.init_rotation;
  env.init.height_range = dr.init_height_hi;

  env.plant.disturbances.clear();
  if (dr.impulse_max > 0.0 && dr.impulse_count > 0) {
    for (int i = 0; i < dr.impulse_count; ++i) {
      DisturbanceEvent ev;
      ev.time = rng.uniform(0.2, std::max(0.4, env.episode_duration - 1.0));
      ev.duration = dr.impulse_duration;
      const double magnitude =
          rng.uniform(0.3, 1.0) * dr.impulse_max / dr.impulse_duration;
      const double dir = rng.uniform() < 0.5 ? -1.0 : 1.0;
      ev.force = Vec3(0.0, dir * magnitude, 0.0);
      env.plant.disturbances.push_back(ev);
    }
  }

  if (dr.randomize_weights) {
    s.w_pphi = rng.uniform(dr.w_pphi_lo, dr.w_pphi_hi);
    s.w_vomega = rng.uniform(dr.w_vomega_lo, dr.w_vomega_hi);
    env.mpc.w_p = Vec3::Constant(s.w_pphi);
    env.mpc.w_phi = Vec3::Constant(s.w_pphi);
    env.mpc.w_v = Vec3::Constant(s.w_vomega);
    env.mpc.w_omega = Vec3::Constant(s.w_vomega);
  }
  return s;
}

void RolloutBuffer::resize(int steps, int envs) {
  n_steps = steps;
  n_envs = envs;
  const int n = steps * envs;
  obs.assign(n, VecX());
  actions.assign(n, VecX());
  log_probs.assign(n, 0.0);
  rewards.assign(n, 0.0);
  tracking.assign(n, 0.0);
  values.assign(n, 0.0);
  dones.assign(n, 0);
  bootstrap_values.assign(envs, 0.0);
  bootstrap_dones.assign(envs, 0);
}

void gae_advantages(const RolloutBuffer& buffer, double gamma, double lambda,
                    VecX* advantages, VecX* returns) {
  const int n = buffer.size();
  advantages->resize(n);
  returns->resize(n);
  for (int e = 0; e < buffer.n_envs; ++e) {
    double last_gae = 0.0;
    for (int t = buffer.n_steps - 1; t >= 0; --t) {
      const int i = t * buffer.n_envs + e;
      double next_value;
      double next_nonterminal;
      if (t == buffer.n_steps - 1) {
        next_value = buffer.bootstrap_values[e];
        next_nonterminal = buffer.bootstrap_dones[e] ? 0.0 : 1.0;
      } else {
        const int j = (t + 1) * buffer.n_envs + e;
        next_value = buffer.values[j];
        next_nonterminal = buffer.dones[i] ? 0.0 : 1.0;
      }
      const double delta = buffer.rewards[i] +
                           gamma * next_value * next_nonterminal -
                           buffer.values[i];
      last_gae = delta + gamma * lambda * next_nonterminal * last_gae;
      (*advantages)[i] = last_gae;
      (*returns)[i] = last_gae + buffer.values[i];
    }
  }
}

PpoLossStats ppo_update(GaussianPolicy& policy, MlpNet& value_net,
                        const RolloutBuffer& buffer, const VecX& advantages,
                        const VecX& returns, const PpoConfig& cfg,
                        AdamOptimizer& policy_opt, AdamOptimizer& value_opt,
                        Rng& rng) {
  PpoLossStats stats;
  const int n = buffer.size();
  if (n == 0) return stats;

  // advantage normalization once per update
  VecX adv = advantages;
  const double mean = adv.mean();
  const double stdev =
      std::sqrt((adv.array() - mean).square().sum() / adv.size()) + 1e-8;
  adv = (adv.array() - mean) / stdev;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int batch_size = std::max(1, n / cfg.n_batches);

  double acc_policy = 0.0, acc_value = 0.0, acc_kl = 0.0, acc_clip = 0.0;
  long acc_count = 0;

  for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);
    for (int start = 0; start < n; start += batch_size) {
      const int stop = std::min(n, start + batch_size);
      const int count = stop - start;

      MlpNet::Grads pgrads = policy.net.make_grads();
      MlpNet::Grads vgrads = value_net.make_grads();
      VecX logstd_grad = VecX::Zero(policy.action_dim());
      double batch_policy = 0.0, batch_value = 0.0, batch_kl = 0.0;
      int clipped = 0;

      MlpNet::Cache cache, vcache;
      for (int bi = start; bi < stop; ++bi) {
        const int i = order[bi];
        const VecX mean_out = policy.net.forward(buffer.obs[i], cache);
        const double logp_new = [&] {
          const VecX ls = policy.clamped_log_std();
          double lp = 0.0;
          for (int a = 0; a < mean_out.size(); ++a) {
            const double d =
                (buffer.actions[i][a] - mean_out[a]) * std::exp(-ls[a]);
            lp += -0.5 * d * d - ls[a] - 0.9189385332046727;
          }
          return lp;
        }();
        const double logratio = logp_new - buffer.log_probs[i];
        const double ratio = std::exp(logratio);
        batch_kl += (ratio - 1.0) - logratio;

        const double a_i = adv[i];
        const double unclipped = ratio * a_i;
        const double clipped_ratio =
            std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
        const double clipped_term = clipped_ratio * a_i;
        batch_policy += -std::min(unclipped, clipped_term);

        // gradient flows only through the active unclipped branch
        if (unclipped <= clipped_term) {
          VecX dmean, dls;
          policy.log_prob_grad(mean_out, buffer.actions[i], &dmean, &dls);
          const double scale = -a_i * ratio / count;
          policy.net.backward(cache, scale * dmean, pgrads);
          logstd_grad += scale * dls;
        } else {
          ++clipped;
        }

        const VecX v_out = value_net.forward(buffer.obs[i], vcache);
        const double v_err = v_out[0] - returns[i];
        batch_value += v_err * v_err;
        VecX v_grad(1);
        v_grad[0] = cfg.value_coef * 2.0 * v_err / count;
        value_net.backward(vcache, v_grad, vgrads);
      }

      // entropy bonus pushes log-std up
      for (int a = 0; a < policy.action_dim(); ++a) {
        const bool active = policy.log_std[a] > policy.log_std_min &&
                            policy.log_std[a] < policy.log_std_max;
        if (active) logstd_grad[a] += -cfg.entropy_coef;
      }

      batch_policy /= count;
      batch_value = cfg.value_coef * batch_value / count;
      batch_kl /= count;

      if (!std::isfinite(batch_policy) || !std::isfinite(batch_value)) {
        stats.skipped_non_finite = true;
        continue;
      }

      policy_opt.step(policy.net, pgrads);
      policy_opt.step_extra(policy.log_std, logstd_grad);
      value_opt.step(value_net, vgrads);

      acc_policy += batch_policy;
      acc_value += batch_value;
      acc_kl += batch_kl;
      acc_clip += static_cast<double>(clipped) / count;
      ++acc_count;
    }
  }

  if (acc_count > 0) {
    stats.policy_loss = acc_policy / acc_count;
    stats.value_loss = acc_value / acc_count;
    stats.approx_kl = acc_kl / acc_count;
    stats.clip_fraction = acc_clip / acc_count;
  }
  stats.entropy = policy.entropy();
  return stats;
}

PpoTrainer::PpoTrainer(const TrainerConfig& cfg)
    : cfg_(cfg), rng_(cfg.seed) {
  if (!cfg_.ppo.valid()) throw std::runtime_error("invalid ppo config");

  MlpNet policy_net({kRfObsDim, 256, 128, kRfActionDim});
  Rng init_rng(cfg_.seed ^ 0x11ull);
  policy_net.init_orthogonal(init_rng, 0.01);
  policy_ = GaussianPolicy(std::move(policy_net),
                           cfg_.env.rf_bounds.as_vector(), -1.0);
  value_ = MlpNet({kRfObsDim, 256, 128, 1});
  value_.init_orthogonal(init_rng, 1.0);
  obs_stats_ = RunningStats(kRfObsDim);
  policy_opt_ = AdamOptimizer(policy_.net, cfg_.ppo.lr);
  value_opt_ = AdamOptimizer(value_, cfg_.ppo.lr);

  for (int e = 0; e < cfg_.ppo.n_envs; ++e) {
    envs_.push_back(std::make_unique<Environment>(cfg_.env));
    env_rngs_.push_back(rng_.split(1000 + e));
    if (cfg_.collect_rd && variant_wiring(cfg_.env.variant).rd_filtered &&
        !cfg_.env.use_rd_network)
      envs_.back()->set_collect_rd(true);
  }
  current_obs_.resize(cfg_.ppo.n_envs);
  episode_returns_.assign(cfg_.ppo.n_envs, 0.0);
  for (int e = 0; e < cfg_.ppo.n_envs; ++e) reset_env(e);
}

PpoTrainer::~PpoTrainer() = default;

void PpoTrainer::warm_start(const GaussianPolicy& policy, const MlpNet& value,
                            const RunningStats& obs_stats) {
  policy_ = policy;
  value_ = value;
  obs_stats_ = obs_stats;
  policy_opt_ = AdamOptimizer(policy_.net, cfg_.ppo.lr);
  value_opt_ = AdamOptimizer(value_, cfg_.ppo.lr);
}

void PpoTrainer::harvest_rd(int idx) {
  Environment& env = *envs_[idx];
  for (const auto& s : env.rd_samples()) {
    if (rd_data_.size() >= cfg_.rd_target) break;
    rd_data_.append(s);
  }
}

void PpoTrainer::reset_env(int idx) {
  Environment& env = *envs_[idx];
  // harvest RD samples before the episode is discarded
  if (rd_data_.size() < cfg_.rd_target) harvest_rd(idx);
  apply_domain_randomization(env.config(), cfg_.dr, env_rngs_[idx],
                             rng_.next());
  env.set_episode_id(episode_counter_++);
  current_obs_[idx] = env.reset(env_rngs_[idx].next());
  episode_returns_[idx] = 0.0;
}

void PpoTrainer::rollout(RolloutBuffer* buffer) {
  const int n_envs = cfg_.ppo.n_envs;
  buffer->resize(cfg_.ppo.steps_per_update, n_envs);

  for (int t = 0; t < cfg_.ppo.steps_per_update; ++t) {
    // snapshot normalization so all envs in this row share stats
    std::vector<VecX> norm_obs(n_envs);
    for (int e = 0; e < n_envs; ++e)
      norm_obs[e] = obs_stats_.normalize(current_obs_[e]);

    struct StepOut {
      Environment::StepResult result;
      GaussianPolicy::Sample sample;
    };
    std::vector<StepOut> outs(n_envs);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers =
        std::min<int>(n_envs, static_cast<int>(std::min(hw, 8u)));
    auto work = [&](int begin, int end) {
      for (int e = begin; e < end; ++e) {
        outs[e].sample = policy_.sample(norm_obs[e], env_rngs_[e]);
        outs[e].result = envs_[e]->step(outs[e].sample.action);
      }
    };
    if (workers <= 1) {
      work(0, n_envs);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (n_envs + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const int begin = w * chunk;
        const int end = std::min(n_envs, begin + chunk);
        if (begin < end) pool.emplace_back(work, begin, end);
      }
      for (auto& th : pool) th.join();
    }

    for (int e = 0; e < n_envs; ++e) {
      const int i = t * n_envs + e;
      buffer->obs[i] = norm_obs[e];
      buffer->actions[i] = outs[e].sample.z;
      buffer->log_probs[i] = outs[e].sample.log_prob;
      buffer->values[i] = value_.forward(norm_obs[e])[0];
      buffer->rewards[i] = outs[e].result.reward;
      buffer->tracking[i] = outs[e].result.tracking;
      buffer->dones[i] = outs[e].result.done ? 1 : 0;
      episode_returns_[e] += outs[e].result.reward;

      obs_stats_.update(outs[e].result.obs);
      current_obs_[e] = outs[e].result.obs;
      if (outs[e].result.done) {
        finished_returns_.push_back(episode_returns_[e]);
        while (finished_returns_.size() > 100) finished_returns_.pop_front();
        reset_env(e);
      }
    }
  }
  for (int e = 0; e < n_envs; ++e) {
    buffer->bootstrap_values[e] =
        value_.forward(obs_stats_.normalize(current_obs_[e]))[0];
    buffer->bootstrap_dones[e] = 0;
  }
}

TrainResult PpoTrainer::run() {
  TrainResult result;
  RolloutBuffer buffer;
  VecX advantages, returns;
  std::deque<double> tracking_window;

  std::ofstream curve_csv;
  if (!cfg_.out_dir.empty()) {
    std::filesystem::create_directories(cfg_.out_dir);
    curve_csv.open(cfg_.out_dir + "/curve.csv");
    curve_csv << "update,env_steps,mean_return,tracking_reward,policy_loss,"
                 "value_loss,entropy\n";
  }

  const long steps_per_update =
      static_cast<long>(cfg_.ppo.n_envs) * cfg_.ppo.steps_per_update;
  const int max_updates = static_cast<int>(
      (cfg_.total_env_steps + steps_per_update - 1) / steps_per_update);

  for (int update = 1; update <= max_updates; ++update) {
    rollout(&buffer);
    gae_advantages(buffer, cfg_.ppo.gamma, cfg_.ppo.gae_lambda, &advantages,
                   &returns);
    const PpoLossStats stats =
        ppo_update(policy_, value_, buffer, advantages, returns, cfg_.ppo,
                   policy_opt_, value_opt_, rng_);

    result.updates = update;
    result.env_steps += steps_per_update;

    // tracking reward: command-following component averaged over the update
    double track_sum = 0.0;
    for (double r : buffer.tracking) track_sum += r;
    const double tracking = track_sum / buffer.size();

    CurvePoint pt;
    pt.update = update;
    pt.env_steps = result.env_steps;
    pt.mean_return =
        finished_returns_.empty()
            ? 0.0
            : std::accumulate(finished_returns_.begin(),
                              finished_returns_.end(), 0.0) /
                  finished_returns_.size();
    pt.tracking_reward = tracking;
    pt.policy_loss = stats.policy_loss;
    pt.value_loss = stats.value_loss;
    pt.entropy = stats.entropy;
    result.curve.push_back(pt);
    result.final_mean_return = pt.mean_return;

    if (curve_csv.is_open()) {
      curve_csv << pt.update << "," << pt.env_steps << "," << pt.mean_return
                << "," << pt.tracking_reward << "," << pt.policy_loss << ","
                << pt.value_loss << "," << pt.entropy << "\n";
      curve_csv.flush();
    }
    if (cfg_.verbose && update % 10 == 0) {
      std::cout << "update " << update << "/" << max_updates
                << " return " << pt.mean_return << " tracking "
                << pt.tracking_reward << " kl " << stats.approx_kl
                << std::endl;
    }

    tracking_window.push_back(tracking);
    while (static_cast<int>(tracking_window.size()) > cfg_.threshold_window)
      tracking_window.pop_front();
    if (cfg_.tracking_threshold && !result.threshold_reached_at &&
        static_cast<int>(tracking_window.size()) == cfg_.threshold_window) {
      const double avg =
          std::accumulate(tracking_window.begin(), tracking_window.end(),
                          0.0) /
          tracking_window.size();
      if (avg >= *cfg_.tracking_threshold) {
        result.threshold_reached_at = update;
        break;  // comparison decided; the step budget is only a cap
      }
    }

    if (!cfg_.out_dir.empty() && update % cfg_.checkpoint_every == 0)
      save_checkpoint(cfg_.out_dir);
  }

  // flush RD samples still sitting in unfinished episodes
  for (int e = 0; e < cfg_.ppo.n_envs; ++e)
    if (rd_data_.size() < cfg_.rd_target) harvest_rd(e);

  if (!cfg_.out_dir.empty()) save_checkpoint(cfg_.out_dir);
  return result;
}

void PpoTrainer::save_checkpoint(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  Checkpoint ck{policy_, value_, obs_stats_};
  ck.save(dir);
  if (rd_data_.size() > 0) rd_data_.save(dir + "/rd_data.bin");
}

void Checkpoint::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/policy.bin", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write policy checkpoint");
    policy.save(out);
  }
  {
    std::ofstream out(dir + "/value.bin", std::ios::binary);
    value.save(out);
  }
  {
    std::ofstream out(dir + "/obs_stats.bin", std::ios::binary);
    obs_stats.save(out);
  }
}

Checkpoint Checkpoint::load(const std::string& dir) {
  Checkpoint ck;
  {
    std::ifstream in(dir + "/policy.bin", std::ios::binary);
    if (!in) throw std::runtime_error("missing checkpoint: " + dir);
    ck.policy = GaussianPolicy::load(in);
  }
  {
    std::ifstream in(dir + "/value.bin", std::ios::binary);
    if (!in) throw std::runtime_error("missing value net: " + dir);
    ck.value = MlpNet::load(in);
  }
  {
    std::ifstream in(dir + "/obs_stats.bin", std::ios::binary);
    if (!in) throw std::runtime_error("missing obs stats: " + dir);
    ck.obs_stats = RunningStats::load(in);
  }
  return ck;
}

double zero_action_baseline(const TrainerConfig& cfg, int episodes) {
  EnvConfig env_cfg = cfg.env;
  Rng rng(cfg.seed ^ 0xba5e11ull);
  Environment env(env_cfg);
  double total = 0.0;
  const VecX zero = VecX::Zero(kRfActionDim);
  for (int ep = 0; ep < episodes; ++ep) {
    apply_domain_randomization(env.config(), cfg.dr, rng, rng.next());
    env.reset(rng.next());
    double ep_return = 0.0;
    while (true) {
      const auto out = env.step(zero);
      ep_return += out.reward;
      if (out.done) break;
    }
    total += ep_return;
  }
  return total / episodes;
}

}  // namespace resloco
