#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resloco/env.hpp"
#include "resloco/ppo.hpp"

namespace resloco {

// env stack assembled from a config's [srbm]/[mpc]/[gait]/[legs]/[plant]/
// [terrain]/[env] sections, desk-scale defaults elsewhere
EnvConfig build_env_config(const Config& cfg);

TrainerConfig load_trainer_config(const Config& cfg);

struct RobustnessParams {
  double payload_mass = 6.0;
  Vec3 payload_offset = Vec3(0.15, 0.0, 0.05);  // head attach
  double payload_time = 3.0;
  double impulse = 15.0;  // N s, lateral at the trunk
  double impulse_duration = 0.1;
  std::vector<double> impulse_times = {8.0, 10.0, 12.0};
  double duration = 15.0;
};

struct SweepParams {
  std::vector<double> w_pphi = {10.0, 20.0, 30.0};
  std::vector<double> w_vomega = {0.1, 0.2, 0.3};
  int runs = 10;
  double duration = 10.0;
};

struct OodParams {
  double leg_payload = 3.0;  // kg, front+rear right leg roots
  double duration = 10.0;
};

struct AblationParams {
  std::vector<double> payload_multiples = {1.75, 2.0, 2.25};
  int episodes = 20;
  double h_env = 0.2;
  Vec3 command = Vec3(1.0, 0.0, 1.0);
  double duration = 10.0;
};

struct Scenario {
  std::string name;
  std::string protocol = "episode";
  ControllerVariant variant = ControllerVariant::kVanillaMpc;
  std::vector<uint64_t> seeds = {0};
  EnvConfig env;
  std::vector<PayloadEvent> payload_events;
  std::string checkpoint_dir;
  std::string rd_network_path;
  RobustnessParams robustness;
  SweepParams sweep;
  OodParams ood;
  AblationParams ablation;
  Config raw;
};

Scenario load_scenario(const std::string& path);
Scenario scenario_from_config(const Config& cfg);

// per-episode outcome
struct EpisodeMetrics {
  bool failed = false;
  double failure_time = -1.0;
  double roll_rms = 0.0;
  double vel_rms = 0.0;
  double mean_tracking = 0.0;
  int ticks = 0;
};

struct MetricReport {
  double roll_rms = 0.0;
  double vel_rms = 0.0;
  double success_rate = 0.0;
  std::vector<double> failure_times;  // -1 for surviving episodes
  std::vector<EpisodeMetrics> episodes;

  bool operator==(const MetricReport& other) const;
};

// policy/value/obs-stats plus optional residual network, shared by episodes
struct PolicyBundle {
  std::shared_ptr<const Checkpoint> checkpoint;
  std::shared_ptr<const RdNetwork> rd_network;
};
PolicyBundle load_bundle(const Scenario& scenario);

EpisodeMetrics run_episode(const EnvConfig& cfg, const PolicyBundle& bundle,
                           const std::vector<PayloadEvent>& events,
                           uint64_t seed, double duration,
                           const std::string& telemetry_path = "");

MetricReport run_episodes(const EnvConfig& cfg, const PolicyBundle& bundle,
                          const std::vector<PayloadEvent>& events,
                          const std::vector<uint64_t>& seeds, double duration);

// segment-wise robustness protocol: normal / payload / disturbance
struct RobustnessReport {
  double roll_rms_a = 0.0;
  double roll_rms_b = 0.0;
  double roll_rms_c = 0.0;
  int failures_a = 0;
  int failures_b = 0;
  int failures_c = 0;
  int seeds = 0;
  std::vector<EpisodeMetrics> episodes;
};
RobustnessReport run_robustness(const Scenario& scenario,
                                ControllerVariant variant,
                                const std::vector<uint64_t>& seeds);

struct SweepCell {
  double w_pphi = 0.0;
  double w_vomega = 0.0;
  MetricReport report;
};
std::vector<SweepCell> run_weight_sweep(const Scenario& scenario,
                                        ControllerVariant variant,
                                        const std::vector<uint64_t>& seeds);

struct OodReport {
  MetricReport without_payload;
  MetricReport with_payload;
  double degradation_ratio = 0.0;
};
OodReport run_ood(const Scenario& scenario, ControllerVariant variant,
                  const std::vector<uint64_t>& seeds);

struct AblationCell {
  double payload_multiple = 0.0;
  MetricReport report;
};
std::vector<AblationCell> run_ablation(const Scenario& scenario,
                                       ControllerVariant variant,
                                       const std::vector<uint64_t>& seeds);

// CSV tables, a text summary table and gnuplot scripts under out_dir
void emit_robustness_report(
    const std::map<std::string, RobustnessReport>& by_variant,
    const std::string& out_dir);
void emit_sweep_report(
    const std::map<std::string, std::vector<SweepCell>>& by_variant,
    const std::string& out_dir);
void emit_ood_report(const std::map<std::string, OodReport>& by_variant,
                     const std::string& out_dir);
void emit_ablation_report(
    const std::map<std::string, std::vector<AblationCell>>& by_variant,
    const std::string& out_dir);
void emit_episode_report(const std::map<std::string, MetricReport>& by_variant,
                         const std::string& out_dir);

}  // namespace resloco
