// Acceptance runner: one pass/fail line per criterion, exit code equals the
// number of failures. Heavy criteria (robustness reproduction, training
// efficiency) expect the committed desk-scale checkpoint under
// <repo-root>/assets/checkpoints.
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <thread>

#include "../oracles/condense_oracle.hpp"
#include "../oracles/qp_oracle.hpp"
#include "../oracles/srbm_oracle.hpp"
#include "resloco/experiments.hpp"

using namespace resloco;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion
            << ": " << detail << std::endl;
  if (!pass) ++g_failures;
}

SrbmParams stand_params() {
  SrbmParams p;
  p.foot_positions = {Vec3(0.19, -0.13, 0.0), Vec3(0.19, 0.13, 0.0),
                      Vec3(-0.19, -0.13, 0.0), Vec3(-0.19, 0.13, 0.0)};
  return p;
}

// ---------------------------------------------------------------- 1: QP
void criterion_qp() {
  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<int> failures{0};
  std::atomic<long> total_iters{0};
  const int instances = 200;

  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  const int workers =
      std::max(1u, std::min(4u, std::thread::hardware_concurrency()));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      QpSolver solver;
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= instances) return;
        Rng rng(1000 + i);
        const int blocks = 4 + static_cast<int>(rng.uniform_int(37));  // 12..120 vars
        const auto prob = oracle::random_pyramid_instance(rng, blocks);
        const auto sol = solver.solve(prob, {});
        if (sol.status != QpStatus::kSolved) {
          ++failures;
          continue;
        }
        const auto kkt = kkt_residuals(prob, sol);
        if (kkt.stationarity > 1e-6 || kkt.primal > 1e-6 ||
            kkt.complementarity > 1e-6)
          ++failures;
        const auto pg = oracle::projected_gradient_solve(prob, 1000000, 1e-8);
        if (std::abs(sol.objective - pg.objective) >
            1e-5 * std::max(1.0, std::abs(pg.objective)))
          ++failures;
        total_iters += sol.iterations;
      }
    });
  }
  for (auto& th : pool) th.join();
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const bool pass = failures == 0 && elapsed < 10.0;
  report(1, pass,
         "QP vs projected-gradient oracle on 200 instances, " +
             std::to_string(failures.load()) + " mismatches, " +
             std::to_string(elapsed) + " s");
}

// ------------------------------------------------- 2: dynamics/linearization
void criterion_dynamics() {
  const SrbmParams p = stand_params();
  bool pass = true;
  std::string why;

  // static equilibrium
  BodyState x;
  x.p = Vec3(0, 0, 0.28);
  GrfInput u;
  for (auto& f : u.f) f = Vec3(0, 0, p.mass * 9.81 / 4.0);
  if (continuous_dynamics(x, u, p).lpNorm<Eigen::Infinity>() > 1e-10) {
    pass = false;
    why += "equilibrium residual; ";
  }

  // analytic A, B vs finite differences of the frozen dynamics
  Rng rng(5);
  BodyState x0;
  x0.p = Vec3(0.2, -0.1, 0.3);
  x0.phi = Vec3(0.2, -0.25, 0.8);
  x0.v = Vec3(0.4, 0.2, -0.1);
  x0.omega = Vec3(0.3, -0.5, 0.2);
  const double dt = 0.01;
  const auto model = linearize_discretize(x0, p.foot_positions, p, dt);
  const Vec12 xv = x0.to_vector();
  Vec12 uv;
  for (int i = 0; i < 12; ++i) uv[i] = rng.uniform(-20, 40);
  double worst = 0.0;
  const double eps = 1e-6;
  for (int j = 0; j < 12; ++j) {
    Vec12 hi = xv, lo = xv;
    hi[j] += eps;
    lo[j] -= eps;
    const Vec12 fd = (frozen_dynamics(model, p, hi, uv) -
                      frozen_dynamics(model, p, lo, uv)) /
                     (2 * eps);
    const Vec12 an = (model.A.col(j) - Mat12::Identity().col(j)) / dt;
    worst = std::max(worst, (fd - an).lpNorm<Eigen::Infinity>());
  }
  for (int j = 0; j < 12; ++j) {
    Vec12 hi = uv, lo = uv;
    hi[j] += eps;
    lo[j] -= eps;
    const Vec12 fd = (frozen_dynamics(model, p, xv, hi) -
                      frozen_dynamics(model, p, xv, lo)) /
                     (2 * eps);
    worst = std::max(worst, (fd - model.B.col(j) / dt).lpNorm<Eigen::Infinity>());
  }
  if (worst > 1e-6) {
    pass = false;
    why += "jacobian fd mismatch " + std::to_string(worst) + "; ";
  }

  // convergence order of the linearization at a zero-velocity point
  BodyState xc = x0;
  xc.omega.setZero();
  const auto mc = linearize_discretize(xc, p.foot_positions, p, dt);
  const GrfInput zero_u;
  Vec12 delta;
  for (int i = 0; i < 12; ++i) delta[i] = rng.uniform(-0.1, 0.1);
  auto err = [&](const Vec12& d) {
    const BodyState xp = BodyState::from_vector(xc.to_vector() + d);
    return (euler_step(xp, zero_u, dt, p).to_vector() -
            (mc.A * (xc.to_vector() + d) + mc.affine))
        .norm();
  };
  double prev = err(delta);
  for (int h = 0; h < 3; ++h) {
    delta *= 0.5;
    const double cur = err(delta);
    if (prev / std::max(cur, 1e-300) < 3.5) {
      pass = false;
      why += "convergence ratio " + std::to_string(prev / cur) + "; ";
    }
    prev = cur;
  }
  report(2, pass, pass ? "dynamics, jacobians and convergence order" : why);
}

// ------------------------------------------------------ 3: residual pipeline
void criterion_residual() {
  const SrbmParams p = stand_params();
  bool pass = true;
  std::string why;

  // model identity along a nominal trajectory
  Rng rng(7);
  BodyState x;
  x.p = Vec3(0, 0, 0.3);
  x.v = Vec3(0.2, -0.1, 0.05);
  x.phi = Vec3(0.05, 0.04, 0.3);
  x.omega = Vec3(0.3, 0.2, -0.1);
  GrfInput u;
  for (auto& f : u.f)
    f = Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(10, 50));
  for (int k = 0; k < 100; ++k) {
    const BodyState next = euler_step(x, u, 1e-3, p);
    if (extract_residual(x, next, u, 1e-3, p).lpNorm<Eigen::Infinity>() >
        1e-10) {
      pass = false;
      why += "model identity; ";
      break;
    }
    x = next;
  }

  // filter constants
  FilterConfig fc;
  if (std::abs(fc.alpha() - std::exp(-0.02 * M_PI)) > 1e-15) {
    pass = false;
    why += "alpha; ";
  }
  ResidualEstimate est;
  for (int k = 0; k < 5000; ++k) est = filter_step(est, Vec12::Ones(), fc);
  if (std::abs(est.value[0] - 1.0) > 1e-9) {
    pass = false;
    why += "dc gain; ";
  }

  // closed-loop payload residual
  EnvConfig cfg;
  cfg.gait.type = GaitType::kStand;
  cfg.variant = ControllerVariant::kResDyn;
  cfg.plant.payloads.push_back({6.0, Vec3::Zero()});
  cfg.episode_duration = 3.0;
  Environment env(cfg);
  env.reset(3);
  double acc = 0.0;
  int n = 0;
  for (int t = 0; t < 300; ++t) {
    const auto out = env.step(VecX::Zero(kRfActionDim));
    if (out.failed) {
      pass = false;
      why += "payload stand failed; ";
      break;
    }
    if (t >= 200) {
      acc += env.residual_estimate()[8];
      ++n;
    }
  }
  if (n > 0) {
    const double mean_z = acc / n;
    if (std::abs(mean_z + 4.905) > 0.05 * 4.905) {
      pass = false;
      why += "payload residual " + std::to_string(mean_z) + "; ";
    }
  }
  report(3, pass,
         pass ? "residual extraction, filter constants, payload value" : why);
}

// -------------------------------------------------------- 4: gradient checks
void criterion_gradients() {
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int in = 3 + static_cast<int>(rng.uniform_int(6));
    const int mid = 4 + static_cast<int>(rng.uniform_int(12));
    const int out = 1 + static_cast<int>(rng.uniform_int(4));
    MlpNet net({in, mid, out});
    net.init_orthogonal(rng);
    for (auto& b : net.biases())
      for (int i = 0; i < b.size(); ++i) b[i] = 0.2 * rng.normal();
    VecX input(in), target(out);
    for (int i = 0; i < in; ++i) input[i] = rng.normal();
    for (int i = 0; i < out; ++i) target[i] = rng.normal();

    MlpNet::Cache cache;
    const VecX y = net.forward(input, cache);
    MlpNet::Grads grads = net.make_grads();
    net.backward(cache, y - target, grads);

    auto loss = [&](MlpNet& n) {
      const VecX o = n.forward(input);
      return 0.5 * (o - target).squaredNorm();
    };
    const double eps = 1e-6;
    for (int l = 0; l < net.num_layers(); ++l)
      for (int i = 0; i < net.weights()[l].rows(); ++i)
        for (int j = 0; j < net.weights()[l].cols(); ++j) {
          MlpNet probe = net;
          probe.weights()[l](i, j) += eps;
          const double hi = loss(probe);
          probe.weights()[l](i, j) -= 2 * eps;
          const double lo = loss(probe);
          const double fd = (hi - lo) / (2 * eps);
          worst = std::max(worst, std::abs(fd - grads.w[l](i, j)) /
                                      std::max(1.0, std::abs(fd)));
        }
  }
  report(4, worst <= 1e-4,
         "backward vs central differences, worst relative error " +
             std::to_string(worst));
}

// --------------------------------------------------- 5: nominal closed loop
void criterion_closed_loop() {
  bool pass = true;
  std::string why;

  EnvConfig stand;
  stand.gait.type = GaitType::kStand;
  Environment env(stand);
  env.reset(0);
  double max_phi = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto out = env.step(VecX::Zero(kRfActionDim));
    max_phi = std::max({max_phi, std::abs(env.measured_state().phi.x()),
                        std::abs(env.measured_state().phi.y())});
    if (out.failed) {
      pass = false;
      why += "standing failed; ";
      break;
    }
  }
  if (max_phi >= 0.02) {
    pass = false;
    why += "standing attitude " + std::to_string(max_phi) + "; ";
  }

  EnvConfig trot;
  trot.gait.type = GaitType::kTrot;
  trot.command = Vec3(0.5, 0.0, 0.0);
  Environment env2(trot);
  env2.reset(0);
  double vel_sq = 0.0;
  int n = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto out = env2.step(VecX::Zero(kRfActionDim));
    if (out.failed) {
      pass = false;
      why += "trot failed at " + std::to_string(env2.time()) + " s; ";
      break;
    }
    if (t >= 200) {  // final 8 s
      const BodyState& s = env2.measured_state();
      const Vec12 ref = env2.reference_state();
      const double ex = s.v.x() - ref[6];
      const double ey = s.v.y() - ref[7];
      vel_sq += ex * ex + ey * ey;
      ++n;
    }
  }
  const double vel_rms = n ? std::sqrt(vel_sq / n) : 1e9;
  if (vel_rms >= 0.15) {
    pass = false;
    why += "trot velocity rms " + std::to_string(vel_rms) + "; ";
  }
  report(5, pass,
         pass ? "standing attitude and 0.5 m/s trot tracking (rms " +
                    std::to_string(vel_rms) + ")"
              : why);
}

// ------------------------------------------------------------ shared assets
struct Assets {
  std::string checkpoint_dir;
  std::string rd_network;
  bool available = false;
};

// short recovery fine-tune on the robustness-flavored task: near-standing
// commands, head payload drops, lateral shoves
TrainerConfig finetune_task(const Assets& assets) {
  TrainerConfig cfg;
  cfg.ppo.n_envs = 8;
  cfg.total_env_steps = 8L * 200 * 60;  // 60 updates
  cfg.seed = 7;
  cfg.env.variant = ControllerVariant::kResAll;
  cfg.env.episode_duration = 10.0;
  cfg.dr.terrains = {TerrainKind::kFlat};
  cfg.dr.command_range = Vec3(0.15, 0.05, 0.1);
  cfg.dr.friction_lo = 0.7;
  cfg.dr.friction_hi = 0.7;
  cfg.dr.com_range = 0.0;
  cfg.dr.payload_lo = 0.0;
  cfg.dr.payload_hi = 7.0;
  cfg.dr.payload_offset_range = Vec3(0.15, 0.02, 0.05);
  cfg.dr.payload_time_lo = 1.0;
  cfg.dr.payload_time_hi = 4.0;
  cfg.dr.impulse_max = 18.0;
  cfg.dr.impulse_count = 2;
  cfg.collect_rd = false;
  cfg.verbose = false;
  (void)assets;
  return cfg;
}

Scenario robustness_scenario(const Assets& assets,
                             const std::string& policy_dir) {
  Scenario s;
  s.env.gait.type = GaitType::kTrot;
  s.env.plant.terrain.friction = 0.7;
  s.checkpoint_dir = policy_dir;
  s.rd_network_path = assets.rd_network;
  s.env.use_rd_network = true;
  s.robustness = RobustnessParams{};
  return s;
}

// -------------------------------------------- 6: robustness reproduction
void criterion_robustness(const Assets& assets) {
  if (!assets.available) {
    report(6, false, "no committed checkpoint under assets/checkpoints");
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();

  // short fine-tune from the committed checkpoint
  const std::string tuned_dir = "/tmp/resloco_accept_finetune";
  {
    const Checkpoint base = Checkpoint::load(assets.checkpoint_dir);
    PpoTrainer trainer(finetune_task(assets));
    trainer.warm_start(base.policy, base.value, base.obs_stats);
    trainer.run();
    trainer.save_checkpoint(tuned_dir);
  }

  Scenario s = robustness_scenario(assets, tuned_dir);
  std::vector<uint64_t> seeds;
  for (uint64_t i = 0; i < 10; ++i) seeds.push_back(i);

  const auto vanilla =
      run_robustness(s, ControllerVariant::kVanillaMpc, seeds);
  const auto res_dyn = run_robustness(s, ControllerVariant::kResDyn, seeds);
  const auto res_all = run_robustness(s, ControllerVariant::kResAll, seeds);

  bool pass = true;
  std::string why;
  if (vanilla.failures_b < 10) {
    pass = false;
    why += "vanilla survived payload on " +
           std::to_string(10 - vanilla.failures_b) + " seeds; ";
  }
  if (res_dyn.failures_a + res_dyn.failures_b > 0) {
    pass = false;
    why += "res-dyn failed before the disturbance; ";
  }
  if (res_dyn.failures_c < 10) {
    pass = false;
    why += "res-dyn survived the disturbance on " +
           std::to_string(10 - res_dyn.failures_c) + " seeds; ";
  }
  if (res_all.failures_a + res_all.failures_b + res_all.failures_c > 0) {
    pass = false;
    why += "res-all failed " +
           std::to_string(res_all.failures_a + res_all.failures_b +
                          res_all.failures_c) +
           " seeds; ";
  }
  if (!(res_all.roll_rms_b < res_dyn.roll_rms_b)) {
    pass = false;
    why += "segment-B rms ordering (" + std::to_string(res_all.roll_rms_b) +
           " vs " + std::to_string(res_dyn.roll_rms_b) + "); ";
  }
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count() /
      60.0;
  report(6, pass,
         (pass ? "failure pattern and segment-B ordering reproduced"
               : why) +
             " [" + std::to_string(minutes) + " min eval]");
}

// --------------------------------------------- 7: training efficiency
constexpr double kTrackingThreshold = -0.55;

TrainerConfig efficiency_task(ControllerVariant variant, uint64_t seed) {
  TrainerConfig cfg;
  cfg.ppo.n_envs = 8;
  cfg.total_env_steps = 2'000'000;
  cfg.seed = seed;
  cfg.env.variant = variant;
  cfg.env.episode_duration = 10.0;
  cfg.dr.terrains = {TerrainKind::kFlat, TerrainKind::kPerlin};
  cfg.dr.command_range = Vec3(0.5, 0.2, 0.3);
  cfg.dr.h_env_lo = 0.0;
  cfg.dr.h_env_hi = 0.05;
  cfg.dr.friction_lo = 0.8;  // payload randomization only
  cfg.dr.friction_hi = 0.8;
  cfg.dr.com_range = 0.0;
  cfg.dr.payload_lo = -1.0;
  cfg.dr.payload_hi = 5.0;
  cfg.tracking_threshold = kTrackingThreshold;
  cfg.collect_rd = false;
  cfg.verbose = false;
  return cfg;
}

void criterion_training_efficiency() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  int res_all_wins = 0;
  const int max_updates = 1250;  // 2M steps / (8 envs x 200)

  for (uint64_t seed = 0; seed < 4; ++seed) {
    PpoTrainer res_all(efficiency_task(ControllerVariant::kResAll, seed));
    const TrainResult a = res_all.run();
    PpoTrainer fpos(efficiency_task(ControllerVariant::kFposPhase, seed));
    const TrainResult b = fpos.run();

    const int ua = a.threshold_reached_at.value_or(max_updates + 1);
    const int ub = b.threshold_reached_at.value_or(max_updates + 1);
    if (ua < ub) ++res_all_wins;
    detail += "seed " + std::to_string(seed) + ": res-all " +
              std::to_string(ua) + " vs fpos-phase " + std::to_string(ub) +
              "; ";

    // both must beat the zero-action baseline return
    const double baseline =
        zero_action_baseline(efficiency_task(ControllerVariant::kResAll, seed),
                             4);
    if (!(a.final_mean_return > baseline) ||
        !(b.final_mean_return > baseline)) {
      pass = false;
      detail += "baseline " + std::to_string(baseline) + " not beaten (" +
                std::to_string(a.final_mean_return) + ", " +
                std::to_string(b.final_mean_return) + "); ";
    }
  }
  if (res_all_wins < 3) pass = false;
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count() /
      60.0;
  report(7, pass,
         "res-all reached the threshold first on " +
             std::to_string(res_all_wins) + "/4 seeds; " + detail + "[" +
             std::to_string(minutes) + " min]");
}

// --------------------------------------------------- 8: weight-sweep spread
void criterion_weight_sweep(const Assets& assets) {
  if (!assets.available) {
    report(8, false, "no committed checkpoint under assets/checkpoints");
    return;
  }
  Scenario s;
  s.env.gait.type = GaitType::kTrot;
  s.checkpoint_dir = assets.checkpoint_dir;
  s.rd_network_path = assets.rd_network;
  s.env.use_rd_network = true;
  s.sweep.runs = 10;
  std::vector<uint64_t> seeds = {0};

  const auto vanilla =
      run_weight_sweep(s, ControllerVariant::kVanillaMpc, seeds);
  const auto proposed = run_weight_sweep(s, ControllerVariant::kResAll, seeds);

  auto spread = [](const std::vector<SweepCell>& cells) {
    double lo = 1.0, hi = 0.0;
    for (const auto& c : cells) {
      lo = std::min(lo, c.report.success_rate);
      hi = std::max(hi, c.report.success_rate);
    }
    return std::pair<double, double>(hi - lo, lo);
  };
  const auto [vs, vmin] = spread(vanilla);
  const auto [ps, pmin] = spread(proposed);
  const bool pass = ps < vs && pmin >= vmin;
  report(8, pass,
         "success spread proposed " + std::to_string(ps) + " (min " +
             std::to_string(pmin) + ") vs vanilla " + std::to_string(vs) +
             " (min " + std::to_string(vmin) + ")");
}

// ------------------------------------------------------- 9: superset match
void criterion_superset() {
  EnvConfig vanilla_cfg;
  vanilla_cfg.gait.type = GaitType::kTrot;
  vanilla_cfg.command = Vec3(0.3, 0.0, 0.0);
  EnvConfig zeroed_cfg = vanilla_cfg;
  zeroed_cfg.variant = ControllerVariant::kResAll;
  zeroed_cfg.force_zero_rf = true;
  zeroed_cfg.force_zero_rd = true;

  Environment vanilla(vanilla_cfg), zeroed(zeroed_cfg);
  vanilla.reset(21);
  zeroed.reset(21);
  double worst = 0.0;
  const VecX zero = VecX::Zero(kRfActionDim);
  const VecX wild = VecX::Constant(kRfActionDim, 0.7);
  for (int t = 0; t < 500; ++t) {
    vanilla.step(zero);
    zeroed.step(wild);
    for (int leg = 0; leg < kNumLegs; ++leg)
      worst = std::max(worst, (vanilla.last_mpc().forces[0].f[leg] -
                               zeroed.last_mpc().forces[0].f[leg])
                                  .lpNorm<Eigen::Infinity>());
  }
  report(9, worst <= 1e-12,
         "per-tick GRF difference with zeroed modules: " +
             std::to_string(worst));
}

// -------------------------------------------------------- 10: determinism
void criterion_determinism() {
  EnvConfig cfg;
  cfg.gait.type = GaitType::kTrot;
  cfg.command = Vec3(0.4, 0.0, 0.2);
  cfg.plant.terrain.kind = TerrainKind::kPerlin;
  cfg.plant.terrain.h_env = 0.04;
  cfg.plant.terrain.seed = 5;
  cfg.init.enabled = true;
  std::vector<uint64_t> seeds = {0, 1, 2};
  const PolicyBundle bundle;
  const MetricReport a = run_episodes(cfg, bundle, {}, seeds, 3.0);
  const MetricReport b = run_episodes(cfg, bundle, {}, seeds, 3.0);
  report(10, a == b, "scenario rerun reproduces the metric report exactly");
}

}  // namespace

int main(int argc, char** argv) {
  std::string repo_root = ".";
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--repo-root") == 0 && i + 1 < argc)
      repo_root = argv[++i];
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;
  }

  Assets assets;
  assets.checkpoint_dir = repo_root + "/assets/checkpoints/desk";
  assets.rd_network = repo_root + "/assets/checkpoints/desk/rd_network.bin";
  assets.available =
      std::filesystem::exists(assets.checkpoint_dir + "/policy.bin") &&
      std::filesystem::exists(assets.rd_network);

  criterion_qp();
  criterion_dynamics();
  criterion_residual();
  criterion_gradients();
  criterion_closed_loop();
  if (quick) {
    std::cout << "[SKIP] criteria 6-8 (quick mode)" << std::endl;
  } else {
    criterion_robustness(assets);
    criterion_training_efficiency();
    criterion_weight_sweep(assets);
  }
  criterion_superset();
  criterion_determinism();

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED"
                                : std::to_string(g_failures) + " FAILURES")
            << std::endl;
  return g_failures;
}
