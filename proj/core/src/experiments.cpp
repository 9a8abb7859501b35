#include "resloco/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "resloco/srbm.hpp"

namespace resloco {

namespace {

Vec3 read_vec3(const Config& cfg, const std::string& key, const Vec3& fb) {
  if (!cfg.has(key)) return fb;
  auto v = cfg.get_vector(key);
  if (v.size() == 1) return Vec3::Constant(v[0]);
  if (v.size() != 3) throw std::runtime_error(key + " needs 3 entries");
  return Vec3(v[0], v[1], v[2]);
}

std::vector<double> read_list(const Config& cfg, const std::string& key,
                              std::vector<double> fb) {
  return cfg.has(key) ? cfg.get_vector(key) : fb;
}

// "a..b" or comma list
std::vector<uint64_t> parse_seed_spec(const std::string& spec) {
  std::vector<uint64_t> seeds;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const long a = std::stol(spec.substr(0, dots));
    const long b = std::stol(spec.substr(dots + 2));
    for (long s = a; s <= b; ++s) seeds.push_back(static_cast<uint64_t>(s));
    return seeds;
  }
  std::istringstream in(spec);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  return seeds;
}

void parallel_over(int count, const std::function<void(int)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = std::min<int>(count, static_cast<int>(std::min(hw, 8u)));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

// desk-scale episode randomization used by the sweep/ablation protocols
DomainRandConfig protocol_randomization() {
  DomainRandConfig dr;
  dr.command_range = Vec3(0.8, 0.3, 0.5);
  dr.terrains = {TerrainKind::kFlat};
  return dr;
}

}  // namespace

EnvConfig build_env_config(const Config& cfg) {
  EnvConfig e;
  e.srbm = load_srbm_params(cfg);
  e.legs = load_leg_geometry(cfg);
  if (cfg.has("gait.type") || cfg.has("gait.t_stance"))
    e.gait = load_gait_config(cfg);
  if (cfg.has("mpc.horizon") || cfg.has("mpc.w_p") || cfg.has("mpc.friction"))
    e.mpc = load_mpc_config(cfg);

  e.plant.base_mass = cfg.get_double("plant.base_mass", e.srbm.mass);
  auto idiag = cfg.get_vector("plant.inertia_diag", {0.08, 0.28, 0.30});
  e.plant.base_inertia =
      Eigen::Vector3d(idiag[0], idiag[1], idiag[2]).asDiagonal();
  e.plant.com_offset = read_vec3(cfg, "plant.com_offset", Vec3::Zero());
  const double pm = cfg.get_double("plant.payload_mass", 0.0);
  if (std::abs(pm) > 1e-12)
    e.plant.payloads.push_back(
        {pm, read_vec3(cfg, "plant.payload_offset", Vec3::Zero())});
  e.plant.f_sample = cfg.get_double("plant.f_sample", e.plant.f_sample);
  e.plant.joint_inertia =
      cfg.get_double("plant.joint_inertia", e.plant.joint_inertia);
  e.plant.joint_damping =
      cfg.get_double("plant.joint_damping", e.plant.joint_damping);
  e.plant.slip_coefficient =
      cfg.get_double("plant.slip_coefficient", e.plant.slip_coefficient);
  e.plant.noise.phi = cfg.get_double("plant.noise_phi", 0.0);
  e.plant.noise.omega = cfg.get_double("plant.noise_omega", 0.0);
  e.plant.noise.velocity = cfg.get_double("plant.noise_velocity", 0.0);
  e.plant.noise.joint_pos = cfg.get_double("plant.noise_joint_pos", 0.0);
  e.plant.noise.joint_vel = cfg.get_double("plant.noise_joint_vel", 0.0);
  e.plant.legs = e.legs;
  e.plant.terrain = load_terrain_config(cfg);

  e.filter.f_cutoff = cfg.get_double("filter.f_cutoff", e.filter.f_cutoff);
  e.filter.f_sample = cfg.get_double("filter.f_sample", e.plant.f_sample);
  e.reward.c1 = cfg.get_double("reward.c1", e.reward.c1);
  e.reward.c2 = cfg.get_double("reward.c2", e.reward.c2);

  e.command = read_vec3(cfg, "env.command", Vec3::Zero());
  e.episode_duration =
      cfg.get_double("env.duration", e.episode_duration);
  e.control_rate = cfg.get_double("env.control_rate", e.control_rate);
  e.use_rd_network = cfg.get_bool("env.use_rd_network", false);
  e.window_size = cfg.get_int("env.window_size", e.window_size);
  e.rf_bounds.foothold =
      cfg.get_double("env.rf_foothold_bound", e.rf_bounds.foothold);
  e.rf_bounds.phase = cfg.get_double("env.rf_phase_bound", e.rf_bounds.phase);
  e.init.enabled = cfg.get_bool("env.randomize_init", false);
  if (cfg.has("env.variant"))
    e.variant = parse_variant(cfg.get_string("env.variant"));
  return e;
}

TrainerConfig load_trainer_config(const Config& cfg) {
  TrainerConfig t;
  t.env = build_env_config(cfg);
  t.ppo.n_envs = cfg.get_int("ppo.n_envs", t.ppo.n_envs);
  t.ppo.steps_per_update =
      cfg.get_int("ppo.steps_per_update", t.ppo.steps_per_update);
  t.ppo.n_batches = cfg.get_int("ppo.n_batches", t.ppo.n_batches);
  t.ppo.n_epochs = cfg.get_int("ppo.n_epochs", t.ppo.n_epochs);
  t.ppo.lr = cfg.get_double("ppo.lr", t.ppo.lr);
  t.ppo.gamma = cfg.get_double("ppo.gamma", t.ppo.gamma);
  t.ppo.gae_lambda = cfg.get_double("ppo.gae_lambda", t.ppo.gae_lambda);
  t.ppo.clip = cfg.get_double("ppo.clip", t.ppo.clip);
  t.ppo.value_coef = cfg.get_double("ppo.value_coef", t.ppo.value_coef);
  t.ppo.entropy_coef = cfg.get_double("ppo.entropy_coef", t.ppo.entropy_coef);

  auto cr = cfg.get_vector("dr.command_range", {2.0, 1.0, 1.0});
  t.dr.command_range = Vec3(cr[0], cr[1], cr[2]);
  t.dr.friction_lo = cfg.get_double("dr.friction_lo", t.dr.friction_lo);
  t.dr.friction_hi = cfg.get_double("dr.friction_hi", t.dr.friction_hi);
  t.dr.payload_lo = cfg.get_double("dr.payload_lo", t.dr.payload_lo);
  t.dr.payload_hi = cfg.get_double("dr.payload_hi", t.dr.payload_hi);
  t.dr.h_env_lo = cfg.get_double("dr.h_env_lo", t.dr.h_env_lo);
  t.dr.h_env_hi = cfg.get_double("dr.h_env_hi", t.dr.h_env_hi);
  t.dr.com_range = cfg.get_double("dr.com_range", t.dr.com_range);
  t.dr.randomize_weights =
      cfg.get_bool("dr.randomize_weights", t.dr.randomize_weights);
  if (cfg.has("dr.terrains")) {
    t.dr.terrains.clear();
    std::istringstream in(cfg.get_string("dr.terrains"));
    std::string tok;
    while (std::getline(in, tok, ',')) {
      tok.erase(0, tok.find_first_not_of(" \t"));
      tok.erase(tok.find_last_not_of(" \t") + 1);
      if (tok == "flat") t.dr.terrains.push_back(TerrainKind::kFlat);
      else if (tok == "perlin" || tok == "rough")
        t.dr.terrains.push_back(TerrainKind::kPerlin);
      else if (tok == "stepped")
        t.dr.terrains.push_back(TerrainKind::kStepped);
      else
        throw std::runtime_error("unknown terrain in dr.terrains: " + tok);
    }
  }

  t.total_env_steps =
      static_cast<long>(cfg.get_double("train.total_env_steps", 2e6));
  t.seed = static_cast<uint64_t>(cfg.get_int("train.seed", 0));
  t.out_dir = cfg.get_string("train.out_dir", "");
  if (cfg.has("train.tracking_threshold"))
    t.tracking_threshold = cfg.get_double("train.tracking_threshold");
  t.threshold_window = cfg.get_int("train.threshold_window",
                                   t.threshold_window);
  t.collect_rd = cfg.get_bool("train.collect_rd", t.collect_rd);
  t.rd_target =
      static_cast<size_t>(cfg.get_double("train.rd_target", 200000));
  t.checkpoint_every =
      cfg.get_int("train.checkpoint_every", t.checkpoint_every);
  t.verbose = cfg.get_bool("train.verbose", t.verbose);
  return t;
}

Scenario scenario_from_config(const Config& cfg) {
  Scenario s;
  s.raw = cfg;
  s.name = cfg.get_string("name", "scenario");
  s.protocol = cfg.get_string("protocol", "episode");
  if (cfg.has("variant")) s.variant = parse_variant(cfg.get_string("variant"));
  if (cfg.has("seeds")) s.seeds = parse_seed_spec(cfg.get_string("seeds"));
  s.env = build_env_config(cfg);
  if (cfg.has("duration")) s.env.episode_duration = cfg.get_double("duration");
  s.checkpoint_dir = cfg.get_string("env.checkpoint", "");
  s.rd_network_path = cfg.get_string("env.rd_network", "");

  if (cfg.has("event.payload_mass")) {
    PayloadEvent ev;
    ev.time = cfg.get_double("event.time", 0.0);
    ev.payload.mass = cfg.get_double("event.payload_mass");
    ev.payload.offset = read_vec3(cfg, "event.payload_offset", Vec3::Zero());
    s.payload_events.push_back(ev);
  }

  s.robustness.payload_mass =
      cfg.get_double("robustness.payload_mass", s.robustness.payload_mass);
  s.robustness.payload_offset = read_vec3(cfg, "robustness.payload_offset",
                                          s.robustness.payload_offset);
  s.robustness.payload_time =
      cfg.get_double("robustness.payload_time", s.robustness.payload_time);
  s.robustness.impulse =
      cfg.get_double("robustness.impulse", s.robustness.impulse);
  s.robustness.impulse_duration = cfg.get_double(
      "robustness.impulse_duration", s.robustness.impulse_duration);
  s.robustness.impulse_times = read_list(cfg, "robustness.impulse_times",
                                         s.robustness.impulse_times);
  s.robustness.duration =
      cfg.get_double("robustness.duration", s.robustness.duration);

  s.sweep.w_pphi = read_list(cfg, "sweep.w_pphi", s.sweep.w_pphi);
  s.sweep.w_vomega = read_list(cfg, "sweep.w_vomega", s.sweep.w_vomega);
  s.sweep.runs = cfg.get_int("sweep.runs", s.sweep.runs);
  s.sweep.duration = cfg.get_double("sweep.duration", s.sweep.duration);

  s.ood.leg_payload = cfg.get_double("ood.leg_payload", s.ood.leg_payload);
  s.ood.duration = cfg.get_double("ood.duration", s.ood.duration);

  s.ablation.payload_multiples = read_list(cfg, "ablation.payload_multiples",
                                           s.ablation.payload_multiples);
  s.ablation.episodes = cfg.get_int("ablation.episodes", s.ablation.episodes);
  s.ablation.h_env = cfg.get_double("ablation.h_env", s.ablation.h_env);
  s.ablation.command =
      read_vec3(cfg, "ablation.command", s.ablation.command);
  s.ablation.duration =
      cfg.get_double("ablation.duration", s.ablation.duration);
  return s;
}

Scenario load_scenario(const std::string& path) {
  return scenario_from_config(Config::from_file(path));
}

PolicyBundle load_bundle(const Scenario& scenario) {
  PolicyBundle b;
  if (!scenario.checkpoint_dir.empty())
    b.checkpoint =
        std::make_shared<Checkpoint>(Checkpoint::load(scenario.checkpoint_dir));
  if (!scenario.rd_network_path.empty())
    b.rd_network =
        std::make_shared<RdNetwork>(RdNetwork::load(scenario.rd_network_path));
  return b;
}

bool MetricReport::operator==(const MetricReport& other) const {
  if (roll_rms != other.roll_rms || vel_rms != other.vel_rms ||
      success_rate != other.success_rate ||
      failure_times != other.failure_times ||
      episodes.size() != other.episodes.size())
    return false;
  for (size_t i = 0; i < episodes.size(); ++i) {
    const auto& a = episodes[i];
    const auto& b = other.episodes[i];
    if (a.failed != b.failed || a.failure_time != b.failure_time ||
        a.roll_rms != b.roll_rms || a.vel_rms != b.vel_rms ||
        a.mean_tracking != b.mean_tracking || a.ticks != b.ticks)
      return false;
  }
  return true;
}

namespace {

EpisodeMetrics run_episode_impl(
    const EnvConfig& cfg, const PolicyBundle& bundle,
    const std::vector<PayloadEvent>& events, uint64_t seed, double duration,
    const std::string& telemetry_path,
    const std::function<void(const Environment&)>& tick_cb) {
  EnvConfig ec = cfg;
  ec.episode_duration = duration;
  const VariantWiring wiring = variant_wiring(ec.variant);
  const bool needs_policy = wiring.rf_foothold || wiring.rf_phase;
  if (needs_policy && !bundle.checkpoint)
    throw std::runtime_error("variant " + variant_name(ec.variant) +
                             " needs a policy checkpoint");
  if (wiring.rd_filtered && ec.use_rd_network && !bundle.rd_network)
    throw std::runtime_error("variant " + variant_name(ec.variant) +
                             " needs a residual network in deploy mode");

  Environment env(ec);
  if (bundle.rd_network) env.set_rd_network(bundle.rd_network);
  env.set_payload_events(events);
  if (!telemetry_path.empty()) env.set_telemetry_path(telemetry_path);

  VecX obs = env.reset(seed);
  EpisodeMetrics m;
  double roll_sq = 0.0, vel_sq = 0.0, track = 0.0;
  while (true) {
    VecX action = VecX::Zero(kRfActionDim);
    if (needs_policy)
      action = bundle.checkpoint->policy.act_deterministic(
          bundle.checkpoint->obs_stats.normalize(obs));
    const auto out = env.step(action);
    obs = out.obs;
    ++m.ticks;

    const BodyState& x = env.measured_state();
    const Vec12 ref = env.reference_state();
    roll_sq += x.phi.x() * x.phi.x();
    const double vex = x.v.x() - ref[6];
    const double vey = x.v.y() - ref[7];
    vel_sq += vex * vex + vey * vey;
    track += out.tracking;
    if (tick_cb) tick_cb(env);

    if (out.done) {
      m.failed = out.failed;
      if (m.failed) m.failure_time = env.time();
      break;
    }
  }
  m.roll_rms = std::sqrt(roll_sq / std::max(1, m.ticks));
  m.vel_rms = std::sqrt(vel_sq / std::max(1, m.ticks));
  m.mean_tracking = track / std::max(1, m.ticks);
  return m;
}

}  // namespace

EpisodeMetrics run_episode(const EnvConfig& cfg, const PolicyBundle& bundle,
                           const std::vector<PayloadEvent>& events,
                           uint64_t seed, double duration,
                           const std::string& telemetry_path) {
  return run_episode_impl(cfg, bundle, events, seed, duration, telemetry_path,
                          nullptr);
}

MetricReport run_episodes(const EnvConfig& cfg, const PolicyBundle& bundle,
                          const std::vector<PayloadEvent>& events,
                          const std::vector<uint64_t>& seeds,
                          double duration) {
  MetricReport report;
  report.episodes.resize(seeds.size());
  parallel_over(static_cast<int>(seeds.size()), [&](int i) {
    report.episodes[i] =
        run_episode(cfg, bundle, events, seeds[i], duration, "");
  });
  int successes = 0;
  double roll_acc = 0.0, vel_acc = 0.0;
  for (const auto& ep : report.episodes) {
    report.failure_times.push_back(ep.failed ? ep.failure_time : -1.0);
    if (!ep.failed) ++successes;
    roll_acc += ep.roll_rms;
    vel_acc += ep.vel_rms;
  }
  report.success_rate =
      seeds.empty() ? 0.0 : static_cast<double>(successes) / seeds.size();
  report.roll_rms = seeds.empty() ? 0.0 : roll_acc / seeds.size();
  report.vel_rms = seeds.empty() ? 0.0 : vel_acc / seeds.size();
  return report;
}

RobustnessReport run_robustness(const Scenario& scenario,
                                ControllerVariant variant,
                                const std::vector<uint64_t>& seeds) {
  const RobustnessParams& rp = scenario.robustness;
  EnvConfig cfg = scenario.env;
  cfg.variant = variant;
  cfg.command = Vec3::Zero();  // hold posture

  std::vector<PayloadEvent> events;
  events.push_back(
      {rp.payload_time, {rp.payload_mass, rp.payload_offset}});

  PlantConfig plant = cfg.plant;
  for (double t : rp.impulse_times) {
    DisturbanceEvent d;
    d.time = t;
    d.duration = rp.impulse_duration;
    d.force = Vec3(0.0, rp.impulse / rp.impulse_duration, 0.0);
    plant.disturbances.push_back(d);
  }
  cfg.plant = plant;

  const PolicyBundle bundle = load_bundle(scenario);
  const double t_b = rp.payload_time;
  const double t_c = rp.impulse_times.empty() ? rp.duration
                                              : rp.impulse_times.front();

  RobustnessReport rep;
  rep.seeds = static_cast<int>(seeds.size());
  rep.episodes.resize(seeds.size());
  std::vector<std::array<double, 3>> roll_sq(seeds.size());
  std::vector<std::array<int, 3>> ticks(seeds.size());

  parallel_over(static_cast<int>(seeds.size()), [&](int i) {
    std::array<double, 3> sq{0.0, 0.0, 0.0};
    std::array<int, 3> n{0, 0, 0};
    rep.episodes[i] = run_episode_impl(
        cfg, bundle, events, seeds[i], rp.duration, "",
        [&](const Environment& env) {
          const double t = env.time();
          const int seg = t < t_b ? 0 : (t < t_c ? 1 : 2);
          const double roll = env.measured_state().phi.x();
          sq[seg] += roll * roll;
          ++n[seg];
        });
    roll_sq[i] = sq;
    ticks[i] = n;
  });

  std::array<double, 3> rms_acc{0.0, 0.0, 0.0};
  std::array<int, 3> rms_count{0, 0, 0};
  for (size_t i = 0; i < seeds.size(); ++i) {
    const EpisodeMetrics& ep = rep.episodes[i];
    const double ft = ep.failed ? ep.failure_time : -1.0;
    if (ep.failed) {
      if (ft < t_b) ++rep.failures_a;
      else if (ft < t_c) ++rep.failures_b;
      else ++rep.failures_c;
    }
    for (int seg = 0; seg < 3; ++seg) {
      // only segments the episode fully survived contribute RMS
      const double seg_end = seg == 0 ? t_b : (seg == 1 ? t_c : rp.duration);
      if ((!ep.failed || ft >= seg_end) && ticks[i][seg] > 0) {
        rms_acc[seg] += std::sqrt(roll_sq[i][seg] / ticks[i][seg]);
        ++rms_count[seg];
      }
    }
  }
  rep.roll_rms_a = rms_count[0] ? rms_acc[0] / rms_count[0] : -1.0;
  rep.roll_rms_b = rms_count[1] ? rms_acc[1] / rms_count[1] : -1.0;
  rep.roll_rms_c = rms_count[2] ? rms_acc[2] / rms_count[2] : -1.0;
  return rep;
}

std::vector<SweepCell> run_weight_sweep(const Scenario& scenario,
                                        ControllerVariant variant,
                                        const std::vector<uint64_t>& seeds) {
  const SweepParams& sp = scenario.sweep;
  const PolicyBundle bundle = load_bundle(scenario);
  std::vector<SweepCell> cells;
  for (double wp : sp.w_pphi)
    for (double wv : sp.w_vomega) cells.push_back({wp, wv, {}});

  struct Job {
    int cell;
    int run;
  };
  std::vector<Job> jobs;
  const int runs = std::max<int>(sp.runs, 1);
  for (int c = 0; c < static_cast<int>(cells.size()); ++c)
    for (int r = 0; r < runs; ++r) jobs.push_back({c, r});
  std::vector<EpisodeMetrics> results(jobs.size());

  const DomainRandConfig dr = protocol_randomization();
  const uint64_t base_seed = seeds.empty() ? 0 : seeds.front();

  parallel_over(static_cast<int>(jobs.size()), [&](int j) {
    const Job job = jobs[j];
    EnvConfig cfg = scenario.env;
    cfg.variant = variant;
    cfg.mpc.w_p = Vec3::Constant(cells[job.cell].w_pphi);
    cfg.mpc.w_phi = Vec3::Constant(cells[job.cell].w_pphi);
    cfg.mpc.w_v = Vec3::Constant(cells[job.cell].w_vomega);
    cfg.mpc.w_omega = Vec3::Constant(cells[job.cell].w_vomega);
    // conditions paired across cells and variants: the sample depends only
    // on (scenario seed, run index)
    Rng rng(base_seed * 7919 + static_cast<uint64_t>(job.run));
    apply_domain_randomization(cfg, dr, rng, rng.next());
    results[j] = run_episode(cfg, bundle, {}, rng.next(), sp.duration, "");
  });

  for (size_t j = 0; j < jobs.size(); ++j)
    cells[jobs[j].cell].report.episodes.push_back(results[j]);
  for (auto& cell : cells) {
    int successes = 0;
    double roll = 0.0, vel = 0.0;
    for (const auto& ep : cell.report.episodes) {
      cell.report.failure_times.push_back(ep.failed ? ep.failure_time : -1.0);
      if (!ep.failed) ++successes;
      roll += ep.roll_rms;
      vel += ep.vel_rms;
    }
    const double n = std::max<size_t>(cell.report.episodes.size(), 1);
    cell.report.success_rate = successes / n;
    cell.report.roll_rms = roll / n;
    cell.report.vel_rms = vel / n;
  }
  return cells;
}

OodReport run_ood(const Scenario& scenario, ControllerVariant variant,
                  const std::vector<uint64_t>& seeds) {
  EnvConfig cfg = scenario.env;
  cfg.variant = variant;
  const PolicyBundle bundle = load_bundle(scenario);

  OodReport rep;
  rep.without_payload =
      run_episodes(cfg, bundle, {}, seeds, scenario.ood.duration);

  // right-side leg-root payloads, modeled as trunk-frame point masses
  EnvConfig with = cfg;
  const LegGeometry& legs = cfg.legs;
  const double y_out =
      -(legs.hip_y + legs.abd_offset);  // right side, outboard
  with.plant.payloads.push_back(
      {scenario.ood.leg_payload, Vec3(legs.hip_x, y_out, 0.0)});
  with.plant.payloads.push_back(
      {scenario.ood.leg_payload, Vec3(-legs.hip_x, y_out, 0.0)});
  rep.with_payload =
      run_episodes(with, bundle, {}, seeds, scenario.ood.duration);

  rep.degradation_ratio =
      rep.without_payload.vel_rms > 1e-12
          ? rep.with_payload.vel_rms / rep.without_payload.vel_rms
          : 0.0;
  return rep;
}

std::vector<AblationCell> run_ablation(const Scenario& scenario,
                                       ControllerVariant variant,
                                       const std::vector<uint64_t>& seeds) {
  const AblationParams& ap = scenario.ablation;
  const PolicyBundle bundle = load_bundle(scenario);
  std::vector<AblationCell> cells;
  for (double mult : ap.payload_multiples) cells.push_back({mult, {}});

  const uint64_t base_seed = seeds.empty() ? 0 : seeds.front();
  struct Job {
    int cell;
    int episode;
  };
  std::vector<Job> jobs;
  for (int c = 0; c < static_cast<int>(cells.size()); ++c)
    for (int e = 0; e < ap.episodes; ++e) jobs.push_back({c, e});
  std::vector<EpisodeMetrics> results(jobs.size());

  parallel_over(static_cast<int>(jobs.size()), [&](int j) {
    const Job job = jobs[j];
    EnvConfig cfg = scenario.env;
    cfg.variant = variant;
    cfg.command = ap.command;
    cfg.init.enabled = true;
    cfg.plant.terrain.kind = TerrainKind::kPerlin;
    cfg.plant.terrain.h_env = ap.h_env;
    Rng rng(base_seed * 104729 + static_cast<uint64_t>(job.episode));
    cfg.plant.terrain.seed = rng.next();
    cfg.plant.terrain.friction = rng.uniform(0.4, 1.0);
    cfg.plant.payloads.clear();
    cfg.plant.payloads.push_back(
        {cells[job.cell].payload_multiple * cfg.plant.base_mass,
         Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05), 0.05)});
    results[j] = run_episode(cfg, bundle, {}, rng.next(), ap.duration, "");
  });

  for (size_t j = 0; j < jobs.size(); ++j)
    cells[jobs[j].cell].report.episodes.push_back(results[j]);
  for (auto& cell : cells) {
    int successes = 0;
    double vel = 0.0, roll = 0.0;
    for (const auto& ep : cell.report.episodes) {
      cell.report.failure_times.push_back(ep.failed ? ep.failure_time : -1.0);
      if (!ep.failed) ++successes;
      vel += ep.vel_rms;
      roll += ep.roll_rms;
    }
    const double n = std::max<size_t>(cell.report.episodes.size(), 1);
    cell.report.success_rate = successes / n;
    cell.report.vel_rms = vel / n;
    cell.report.roll_rms = roll / n;
  }
  return cells;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path);
  out << text;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

void emit_robustness_report(
    const std::map<std::string, RobustnessReport>& by_variant,
    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream csv, txt;
  csv << "variant,roll_rms_a,roll_rms_b,roll_rms_c,failures_a,failures_b,"
         "failures_c,seeds\n";
  txt << "Robustness test (roll RMS per segment; Failed = any failure in "
         "segment)\n";
  txt << "name           | normal (A) | payload (B) | disturbance (C)\n";
  for (const auto& [name, rep] : by_variant) {
    csv << name << "," << rep.roll_rms_a << "," << rep.roll_rms_b << ","
        << rep.roll_rms_c << "," << rep.failures_a << "," << rep.failures_b
        << "," << rep.failures_c << "," << rep.seeds << "\n";
    auto seg = [&](double rms, int fails) {
      return fails > 0 ? std::string("Failed(") + std::to_string(fails) + ")"
                       : fmt(rms);
    };
    txt << name << " | " << seg(rep.roll_rms_a, rep.failures_a) << " | "
        << seg(rep.roll_rms_b, rep.failures_b) << " | "
        << seg(rep.roll_rms_c, rep.failures_c) << "\n";
  }
  write_file(out_dir + "/robustness.csv", csv.str());
  write_file(out_dir + "/robustness.txt", txt.str());
  write_file(out_dir + "/robustness.gp",
             "set datafile separator ','\nset style data histograms\n"
             "set style fill solid\nset key autotitle columnhead\n"
             "plot 'robustness.csv' using 2:xtic(1), '' using 3, '' using 4\n");
}

void emit_sweep_report(
    const std::map<std::string, std::vector<SweepCell>>& by_variant,
    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream csv, txt;
  csv << "variant,w_pphi,w_vomega,success_rate,vel_rms\n";
  txt << "Weight sweep (success rate / velocity RMS)\n";
  for (const auto& [name, cells] : by_variant) {
    txt << name << ":\n";
    for (const auto& c : cells) {
      csv << name << "," << c.w_pphi << "," << c.w_vomega << ","
          << c.report.success_rate << "," << c.report.vel_rms << "\n";
      txt << "  w_pphi=" << c.w_pphi << " w_vomega=" << c.w_vomega << " -> "
          << fmt(c.report.success_rate) << " / " << fmt(c.report.vel_rms)
          << "\n";
    }
  }
  write_file(out_dir + "/sweep.csv", csv.str());
  write_file(out_dir + "/sweep.txt", txt.str());
  write_file(out_dir + "/sweep.gp",
             "set datafile separator ','\nset dgrid3d 3,3\n"
             "splot 'sweep.csv' using 2:3:4 with lines\n");
}

void emit_ood_report(const std::map<std::string, OodReport>& by_variant,
                     const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream csv, txt;
  csv << "variant,vel_rms_no_payload,vel_rms_with_payload,degradation_ratio,"
         "success_no_payload,success_with_payload\n";
  txt << "Out-of-distribution test (leg payloads)\n";
  for (const auto& [name, rep] : by_variant) {
    csv << name << "," << rep.without_payload.vel_rms << ","
        << rep.with_payload.vel_rms << "," << rep.degradation_ratio << ","
        << rep.without_payload.success_rate << ","
        << rep.with_payload.success_rate << "\n";
    txt << name << ": " << fmt(rep.without_payload.vel_rms) << " -> "
        << fmt(rep.with_payload.vel_rms) << " (ratio "
        << fmt(rep.degradation_ratio) << ")\n";
  }
  write_file(out_dir + "/ood.csv", csv.str());
  write_file(out_dir + "/ood.txt", txt.str());
  write_file(out_dir + "/ood.gp",
             "set datafile separator ','\nset style data histograms\n"
             "plot 'ood.csv' using 2:xtic(1), '' using 3\n");
}

void emit_ablation_report(
    const std::map<std::string, std::vector<AblationCell>>& by_variant,
    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream csv, txt;
  csv << "variant,payload_multiple,vel_rms,success_rate\n";
  txt << "Comparative analysis: velocity RMS (success rate)\n";
  for (const auto& [name, cells] : by_variant) {
    txt << name << ":";
    for (const auto& c : cells) {
      csv << name << "," << c.payload_multiple << "," << c.report.vel_rms
          << "," << c.report.success_rate << "\n";
      txt << "  Mp=" << c.payload_multiple << "M: " << fmt(c.report.vel_rms)
          << " (" << static_cast<int>(100 * c.report.success_rate + 0.5)
          << "%)";
    }
    txt << "\n";
  }
  write_file(out_dir + "/ablation.csv", csv.str());
  write_file(out_dir + "/ablation.txt", txt.str());
  write_file(out_dir + "/ablation.gp",
             "set datafile separator ','\n"
             "plot 'ablation.csv' using 2:4 with linespoints\n");
}

void emit_episode_report(const std::map<std::string, MetricReport>& by_variant,
                         const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream csv;
  csv << "variant,roll_rms,vel_rms,success_rate\n";
  for (const auto& [name, rep] : by_variant)
    csv << name << "," << rep.roll_rms << "," << rep.vel_rms << ","
        << rep.success_rate << "\n";
  write_file(out_dir + "/episodes.csv", csv.str());
}

}  // namespace resloco
