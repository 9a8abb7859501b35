#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resloco/ppo.hpp"

using namespace resloco;

namespace {

GaussianPolicy tiny_policy(uint64_t seed) {
  MlpNet net({6, 8, 3});
  Rng rng(seed);
  net.init_orthogonal(rng, 0.01);
  return GaussianPolicy(std::move(net), VecX::Constant(3, 1.0), -0.5);
}

RolloutBuffer random_buffer(int steps, int envs, GaussianPolicy& policy,
                            Rng& rng) {
  RolloutBuffer buf;
  buf.resize(steps, envs);
  for (int i = 0; i < buf.size(); ++i) {
    VecX obs(6);
    for (int k = 0; k < 6; ++k) obs[k] = rng.normal();
    const auto s = policy.sample(obs, rng);
    buf.obs[i] = obs;
    buf.actions[i] = s.z;
    buf.log_probs[i] = s.log_prob;
    buf.rewards[i] = rng.normal();
    buf.values[i] = rng.normal();
    buf.dones[i] = rng.uniform() < 0.1 ? 1 : 0;
  }
  for (int e = 0; e < envs; ++e) {
    buf.bootstrap_values[e] = rng.normal();
    buf.bootstrap_dones[e] = 0;
  }
  return buf;
}

// direct sum A_t = sum_l (gamma lambda)^l delta_{t+l}, masked at episode ends
void gae_direct(const RolloutBuffer& buf, double gamma, double lambda,
                VecX* adv) {
  adv->resize(buf.size());
  for (int e = 0; e < buf.n_envs; ++e) {
    for (int t = 0; t < buf.n_steps; ++t) {
      double acc = 0.0;
      double weight = 1.0;
      for (int l = t; l < buf.n_steps; ++l) {
        const int i = l * buf.n_envs + e;
        double next_v;
        double nonterminal;
        if (l == buf.n_steps - 1) {
          next_v = buf.bootstrap_values[e];
          nonterminal = buf.bootstrap_dones[e] ? 0.0 : 1.0;
        } else {
          next_v = buf.values[(l + 1) * buf.n_envs + e];
          nonterminal = buf.dones[i] ? 0.0 : 1.0;
        }
        const double delta =
            buf.rewards[i] + gamma * next_v * nonterminal - buf.values[i];
        acc += weight * delta;
        if (!nonterminal) break;
        weight *= gamma * lambda;
      }
      (*adv)[t * buf.n_envs + e] = acc;
    }
  }
}

}  // namespace

TEST_CASE("gae trivial cases") {
  GaussianPolicy policy = tiny_policy(1);
  Rng rng(2);
  RolloutBuffer buf = random_buffer(1, 1, policy, rng);
  buf.dones[0] = 0;

  VecX adv, ret;
  SUBCASE("single step is the TD residual") {
    gae_advantages(buf, 0.9, 0.0, &adv, &ret);
    const double expected =
        buf.rewards[0] + 0.9 * buf.bootstrap_values[0] - buf.values[0];
    CHECK(adv[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ret[0] == doctest::Approx(expected + buf.values[0]));
  }
  SUBCASE("gamma zero reduces to reward minus value") {
    gae_advantages(buf, 0.0, 0.95, &adv, &ret);
    CHECK(adv[0] == doctest::Approx(buf.rewards[0] - buf.values[0]));
  }
}

TEST_CASE("gae matches the direct summation oracle") {
  GaussianPolicy policy = tiny_policy(3);
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    RolloutBuffer buf = random_buffer(12, 3, policy, rng);
    VecX adv, ret, direct;
    gae_advantages(buf, 0.996, 0.95, &adv, &ret);
    gae_direct(buf, 0.996, 0.95, &direct);
    CHECK((adv - direct).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("surrogate loss matches the per-sample formula") {
  GaussianPolicy policy = tiny_policy(5);
  MlpNet value({6, 8, 1});
  Rng init(6);
  value.init_orthogonal(init);
  Rng rng(7);
  RolloutBuffer buf = random_buffer(16, 2, policy, rng);
  VecX adv, ret;
  gae_advantages(buf, 0.99, 0.95, &adv, &ret);

  PpoConfig cfg;
  cfg.n_epochs = 1;
  cfg.n_batches = 1;

  // oracle: evaluate the clipped objective with the pre-update parameters
  VecX norm = adv;
  const double mean = norm.mean();
  const double stdev =
      std::sqrt((norm.array() - mean).square().sum() / norm.size()) + 1e-8;
  norm = (norm.array() - mean) / stdev;
  double expected = 0.0;
  for (int i = 0; i < buf.size(); ++i) {
    const double ratio =
        std::exp(policy.log_prob(buf.obs[i], buf.actions[i]) -
                 buf.log_probs[i]);
    const double clipped = std::clamp(ratio, 0.8, 1.2);
    expected += -std::min(ratio * norm[i], clipped * norm[i]);
  }
  expected /= buf.size();

  AdamOptimizer po(policy.net, 1e-4), vo(value, 1e-4);
  Rng update_rng(8);
  const auto stats =
      ppo_update(policy, value, buf, adv, ret, cfg, po, vo, update_rng);
  CHECK(stats.policy_loss == doctest::Approx(expected).epsilon(1e-10));
  CHECK_FALSE(stats.skipped_non_finite);
}

TEST_CASE("zero advantages leave the policy mean almost untouched") {
  GaussianPolicy policy = tiny_policy(9);
  const MatX w_before = policy.net.weights()[0];
  MlpNet value({6, 8, 1});
  Rng init(10);
  value.init_orthogonal(init);
  Rng rng(11);
  RolloutBuffer buf = random_buffer(8, 2, policy, rng);
  const VecX adv = VecX::Zero(buf.size());
  VecX ret(buf.size());
  for (int i = 0; i < buf.size(); ++i) ret[i] = buf.values[i];

  PpoConfig cfg;
  AdamOptimizer po(policy.net, 1e-3), vo(value, 1e-3);
  Rng update_rng(12);
  ppo_update(policy, value, buf, adv, ret, cfg, po, vo, update_rng);
  // zero advantages produce zero policy-net gradients, so Adam cannot move
  CHECK((policy.net.weights()[0] - w_before).lpNorm<Eigen::Infinity>() ==
        0.0);
  // the entropy bonus still nudges log-std upward
  CHECK(policy.log_std[0] > -0.5);
}

TEST_CASE("clipped samples contribute no policy gradient") {
  // three transitions with ratios far above 1 + clip and positive
  // advantages (clipped branch), one honest transition carrying the only
  // gradient; swapping the clipped observations must not change the update
  GaussianPolicy policy = tiny_policy(13);
  GaussianPolicy policy2 = policy;
  MlpNet value({6, 8, 1});
  Rng init(14);
  value.init_orthogonal(init);
  MlpNet value2 = value;
  Rng rng(15);

  RolloutBuffer buf = random_buffer(4, 1, policy, rng);
  for (int i = 0; i < 3; ++i) buf.log_probs[i] -= 5.0;  // ratio ~ e^5
  VecX adv(4);
  adv << 1.0, 1.0, 1.0, -3.0;  // mean zero, normalization keeps the signs
  VecX ret = VecX::Zero(4);

  RolloutBuffer buf2 = buf;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 6; ++k) buf2.obs[i][k] = rng.normal();
    buf2.log_probs[i] = policy.log_prob(buf2.obs[i], buf2.actions[i]) - 5.0;
  }

  PpoConfig cfg;
  cfg.n_epochs = 1;
  cfg.n_batches = 1;
  AdamOptimizer po(policy.net, 1e-2), vo(value, 1e-9);
  AdamOptimizer po2(policy2.net, 1e-2), vo2(value2, 1e-9);
  Rng r1(16), r2(16);
  const auto stats = ppo_update(policy, value, buf, adv, ret, cfg, po, vo,
                                r1);
  const auto stats2 = ppo_update(policy2, value2, buf2, adv, ret, cfg, po2,
                                 vo2, r2);
  CHECK(stats.clip_fraction == doctest::Approx(0.75));
  CHECK(stats2.clip_fraction == doctest::Approx(0.75));
  CHECK((policy.net.weights()[0] - policy2.net.weights()[0])
            .lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((policy.log_std - policy2.log_std).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("domain randomization samples stay inside the declared ranges") {
  DomainRandConfig dr;
  EnvConfig env;
  Rng rng(17);
  for (int i = 0; i < 100000; ++i) {
    const SampledDomain s = apply_domain_randomization(env, dr, rng, i);
    CHECK(std::abs(s.command[0]) <= 2.0);
    CHECK(std::abs(s.command[1]) <= 1.0);
    CHECK(std::abs(s.command[2]) <= 1.0);
    CHECK(s.friction >= 0.4);
    CHECK(s.friction <= 1.0);
    CHECK(s.payload >= -1.0);
    CHECK(s.payload <= 5.0);
    CHECK(s.h_env >= 0.0);
    CHECK(s.h_env <= 0.1);
    CHECK(s.com_offset.lpNorm<Eigen::Infinity>() <= 0.05);
  }
  // the config mirrors the sample
  CHECK(env.plant.terrain.friction >= 0.4);
  CHECK(env.init.enabled);
}

TEST_CASE("weight randomization toggle") {
  DomainRandConfig dr;
  dr.randomize_weights = true;
  EnvConfig env;
  Rng rng(18);
  for (int i = 0; i < 1000; ++i) {
    const SampledDomain s = apply_domain_randomization(env, dr, rng, i);
    CHECK(s.w_pphi >= 10.0);
    CHECK(s.w_pphi <= 30.0);
    CHECK(s.w_vomega >= 0.1);
    CHECK(s.w_vomega <= 0.3);
    CHECK(env.mpc.w_p.x() == s.w_pphi);
  }
}

TEST_CASE("rollout counting and trainer determinism") {
  TrainerConfig cfg;
  cfg.ppo.n_envs = 2;
  cfg.ppo.steps_per_update = 20;
  cfg.total_env_steps = 2 * 20 * 2;  // two updates
  cfg.seed = 99;
  cfg.env.variant = ControllerVariant::kResAll;
  cfg.env.episode_duration = 0.5;
  cfg.dr.terrains = {TerrainKind::kFlat};
  cfg.dr.command_range = Vec3(0.3, 0.1, 0.2);
  cfg.dr.payload_lo = -0.5;
  cfg.dr.payload_hi = 1.0;
  cfg.dr.h_env_hi = 0.0;
  cfg.collect_rd = true;
  cfg.rd_target = 500;
  cfg.verbose = false;

  PpoTrainer t1(cfg), t2(cfg);
  const TrainResult r1 = t1.run();
  const TrainResult r2 = t2.run();
  REQUIRE(r1.updates == 2);
  CHECK(r1.env_steps == 80);
  REQUIRE(r1.curve.size() == r2.curve.size());
  for (size_t i = 0; i < r1.curve.size(); ++i) {
    CHECK(r1.curve[i].mean_return == r2.curve[i].mean_return);
    CHECK(r1.curve[i].tracking_reward == r2.curve[i].tracking_reward);
    CHECK(r1.curve[i].policy_loss == r2.curve[i].policy_loss);
  }
  // rd data flowed from the analytic-residual training loop
  CHECK(t1.rd_dataset().size() > 0);
  CHECK(t1.rd_dataset().size() == t2.rd_dataset().size());
}

TEST_CASE("checkpoint round trip") {
  TrainerConfig cfg;
  cfg.ppo.n_envs = 1;
  cfg.ppo.steps_per_update = 4;
  cfg.total_env_steps = 4;
  cfg.env.episode_duration = 0.2;
  cfg.dr.terrains = {TerrainKind::kFlat};
  cfg.dr.h_env_hi = 0.0;
  cfg.verbose = false;
  PpoTrainer trainer(cfg);
  trainer.run();
  trainer.save_checkpoint("/tmp/resloco_ck_test");
  const Checkpoint ck = Checkpoint::load("/tmp/resloco_ck_test");
  VecX obs = VecX::Constant(kRfObsDim, 0.1);
  CHECK((ck.policy.act_deterministic(ck.obs_stats.normalize(obs)) -
         trainer.policy().act_deterministic(
             trainer.obs_stats().normalize(obs)))
            .lpNorm<Eigen::Infinity>() == 0.0);
}
