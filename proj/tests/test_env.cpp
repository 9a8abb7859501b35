#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resloco/env.hpp"

using namespace resloco;

namespace {

// plant exactly matching the nominal model: no payload, flat ground, ample
// friction
EnvConfig nominal_env(GaitType gait = GaitType::kStand) {
  EnvConfig cfg;
  cfg.gait.type = gait;
  cfg.plant.terrain.kind = TerrainKind::kFlat;
  cfg.plant.terrain.friction = 0.8;
  cfg.command = Vec3::Zero();
  cfg.episode_duration = 10.0;
  return cfg;
}

}  // namespace

TEST_CASE("variant wiring table") {
  CHECK(parse_variant("vanilla-MPC") == ControllerVariant::kVanillaMpc);
  CHECK(parse_variant("res-dyn") == ControllerVariant::kResDyn);
  CHECK(parse_variant("resdyn-window") == ControllerVariant::kResdynWindow);
  CHECK_THROWS(parse_variant("mystery"));
  for (auto v : {ControllerVariant::kVanillaMpc, ControllerVariant::kResDyn,
                 ControllerVariant::kResAll, ControllerVariant::kFposPhase,
                 ControllerVariant::kPhase, ControllerVariant::kResdynWindow})
    CHECK(parse_variant(variant_name(v)) == v);

  const auto w = variant_wiring(ControllerVariant::kPhase);
  CHECK(w.rf_phase);
  CHECK_FALSE(w.rf_foothold);
  CHECK_FALSE(w.rd_filtered);
  const auto rd = variant_wiring(ControllerVariant::kResDyn);
  CHECK_FALSE(rd.rf_phase);
  CHECK(rd.rd_filtered);
}

TEST_CASE("reward arithmetic") {
  RewardConfig cfg;
  const Vec12 x = Vec12::Zero();
  CHECK(compute_reward(x, x, VecX::Zero(12), false, cfg) == 0.0);
  CHECK(compute_reward(x, x, VecX::Zero(12), true, cfg) == -10.0);
  Vec12 ref = Vec12::Zero();
  ref[0] = 2.0;
  VecX tau = VecX::Zero(12);
  tau[0] = 10.0;
  CHECK(compute_reward(x, ref, tau, false, cfg) ==
        doctest::Approx(-2.05).epsilon(1e-12));
}

TEST_CASE("standing on the matched plant keeps attitude within 0.02 rad") {
  Environment env(nominal_env(GaitType::kStand));
  env.reset(0);
  double max_phi = 0.0;
  const VecX zero = VecX::Zero(kRfActionDim);
  for (int t = 0; t < 1000; ++t) {
    const auto out = env.step(zero);
    max_phi = std::max({max_phi, std::abs(env.measured_state().phi.x()),
                        std::abs(env.measured_state().phi.y())});
    REQUIRE_FALSE(out.failed);
  }
  CHECK(max_phi < 0.02);
}

TEST_CASE("settled stand splits the weight evenly across legs") {
  Environment env(nominal_env(GaitType::kStand));
  env.reset(4);
  const VecX zero = VecX::Zero(kRfActionDim);
  for (int t = 0; t < 300; ++t) {
    const auto out = env.step(zero);
    REQUIRE_FALSE(out.failed);
  }
  const double quarter = env.config().srbm.mass * 9.81 / 4.0;
  double total = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double fz = env.plant().realized_grf()[leg].z();
    CHECK(std::abs(fz - quarter) < 1.0);
    total += fz;
  }
  CHECK(total == doctest::Approx(env.config().srbm.mass * 9.81).epsilon(5e-3));
}

TEST_CASE("model-identity standing residual stays below 0.05 RMS") {
  EnvConfig cfg = nominal_env(GaitType::kStand);
  cfg.variant = ControllerVariant::kResDyn;  // estimate computed, fed back
  Environment env(cfg);
  env.reset(1);
  const VecX zero = VecX::Zero(kRfActionDim);
  Vec12 sq = Vec12::Zero();
  int n = 0;
  for (int t = 0; t < 300; ++t) {
    env.step(zero);
    if (t >= 100) {  // past the initial transient
      sq += env.residual_estimate().cwiseProduct(env.residual_estimate());
      ++n;
    }
  }
  const Vec12 rms = (sq / n).cwiseSqrt();
  CHECK(rms.lpNorm<Eigen::Infinity>() < 0.05);
}

TEST_CASE("6 kg payload standing residual approaches -g m_p / M") {
  EnvConfig cfg = nominal_env(GaitType::kStand);
  cfg.variant = ControllerVariant::kResDyn;
  cfg.plant.payloads.push_back({6.0, Vec3::Zero()});
  cfg.episode_duration = 3.0;
  Environment env(cfg);
  env.reset(2);
  const VecX zero = VecX::Zero(kRfActionDim);
  double acc = 0.0;
  int n = 0;
  for (int t = 0; t < 300; ++t) {
    const auto out = env.step(zero);
    REQUIRE_FALSE(out.failed);
    if (t >= 200) {  // average over the final second
      acc += env.residual_estimate()[8];
      ++n;
    }
  }
  const double mean_z = acc / n;
  CHECK(mean_z == doctest::Approx(-4.905).epsilon(0.05));
}

TEST_CASE("superset: zeroed residual modules reproduce vanilla bitwise") {
  EnvConfig vanilla_cfg = nominal_env(GaitType::kTrot);
  vanilla_cfg.command = Vec3(0.3, 0.0, 0.0);
  vanilla_cfg.episode_duration = 5.0;

  EnvConfig zeroed_cfg = vanilla_cfg;
  zeroed_cfg.variant = ControllerVariant::kResAll;
  zeroed_cfg.force_zero_rf = true;
  zeroed_cfg.force_zero_rd = true;

  Environment vanilla(vanilla_cfg), zeroed(zeroed_cfg);
  vanilla.reset(7);
  zeroed.reset(7);
  const VecX zero_action = VecX::Zero(kRfActionDim);
  VecX wild = VecX::Constant(kRfActionDim, 0.5);  // masked away

  for (int t = 0; t < 500; ++t) {
    const auto a = vanilla.step(zero_action);
    const auto b = zeroed.step(wild);
    REQUIRE_FALSE(a.failed);
    REQUIRE_FALSE(b.failed);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Vec3 ua = vanilla.last_mpc().forces[0].f[leg];
      const Vec3 ub = zeroed.last_mpc().forces[0].f[leg];
      REQUIRE((ua - ub).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
}

TEST_CASE("phase variant ignores foothold residual rows") {
  EnvConfig cfg = nominal_env(GaitType::kTrot);
  cfg.variant = ControllerVariant::kPhase;
  cfg.episode_duration = 2.0;
  Environment a(cfg), b(cfg);
  a.reset(3);
  b.reset(3);
  VecX with_foothold = VecX::Zero(kRfActionDim);
  for (int i = 0; i < 12; ++i) with_foothold[i] = 0.05;
  with_foothold[13] = 0.01;
  VecX phase_only = VecX::Zero(kRfActionDim);
  phase_only[13] = 0.01;
  for (int t = 0; t < 200; ++t) {
    a.step(with_foothold);
    b.step(phase_only);
    REQUIRE((a.measured_state().to_vector() - b.measured_state().to_vector())
                .lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("deploy mode without a residual network aborts") {
  EnvConfig cfg = nominal_env(GaitType::kStand);
  cfg.variant = ControllerVariant::kResDyn;
  cfg.use_rd_network = true;
  Environment env(cfg);
  env.reset(0);
  CHECK_THROWS(env.step(VecX::Zero(kRfActionDim)));
}

TEST_CASE("seeded episodes reproduce exactly") {
  EnvConfig cfg = nominal_env(GaitType::kTrot);
  cfg.command = Vec3(0.4, 0.0, 0.1);
  cfg.plant.terrain.kind = TerrainKind::kPerlin;
  cfg.plant.terrain.h_env = 0.03;
  cfg.plant.terrain.seed = 9;
  cfg.init.enabled = true;
  cfg.episode_duration = 2.0;

  Environment a(cfg), b(cfg);
  VecX oa = a.reset(42);
  VecX ob = b.reset(42);
  REQUIRE((oa - ob).lpNorm<Eigen::Infinity>() == 0.0);
  const VecX act = VecX::Zero(kRfActionDim);
  for (int t = 0; t < 200; ++t) {
    const auto ra = a.step(act);
    const auto rb = b.step(act);
    REQUIRE(ra.reward == rb.reward);
    REQUIRE((ra.obs - rb.obs).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("trot on the matched plant survives and collects rd samples") {
  EnvConfig cfg = nominal_env(GaitType::kTrot);
  cfg.variant = ControllerVariant::kResDyn;
  cfg.command = Vec3(0.3, 0.0, 0.0);
  cfg.episode_duration = 2.0;
  Environment env(cfg);
  env.set_collect_rd(true);
  env.set_episode_id(5);
  env.reset(11);
  const VecX zero = VecX::Zero(kRfActionDim);
  int ticks = 0;
  while (true) {
    const auto out = env.step(zero);
    ++ticks;
    REQUIRE_FALSE(out.failed);
    if (out.done) break;
  }
  CHECK(ticks == 200);  // 2 s at 100 Hz
  CHECK(env.rd_samples().size() == 200);
  CHECK(env.rd_samples()[0].episode == 5);
  // observation dimension audit: 3+3+3+72+12+4+4+12 = 113
  CHECK(env.rd_samples()[0].obs.size() == 54);
}

TEST_CASE("rf observation is 113-dim with zero-padded history at start") {
  EnvConfig cfg = nominal_env(GaitType::kTrot);
  Environment env(cfg);
  const VecX obs = env.reset(1);
  REQUIRE(obs.size() == kRfObsDim);
  CHECK(obs.allFinite());
  // the two oldest joint-history frames are zero padded right after reset
  for (int k = 1; k <= 2; ++k)
    CHECK(obs.segment(9 + 24 * k, 24).lpNorm<Eigen::Infinity>() == 0.0);
}
