// Command-line front end: scenario runner, PPO training, residual-network
// regression.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "resloco/experiments.hpp"

using namespace resloco;

namespace {

std::vector<uint64_t> seeds_from_flag(const std::string& spec) {
  std::vector<uint64_t> out;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const long a = std::stol(spec.substr(0, dots));
    const long b = std::stol(spec.substr(dots + 2));
    for (long s = a; s <= b; ++s) out.push_back(static_cast<uint64_t>(s));
  } else if (!spec.empty()) {
    std::istringstream in(spec);
    std::string tok;
    while (std::getline(in, tok, ','))
      if (!tok.empty()) out.push_back(std::stoull(tok));
  }
  return out;
}

int cmd_run(const std::string& scenario_path, const std::string& variant_flag,
            const std::string& seeds_flag, const std::string& out_dir) {
  Scenario scenario = load_scenario(scenario_path);
  if (!variant_flag.empty()) scenario.variant = parse_variant(variant_flag);
  if (!seeds_flag.empty()) scenario.seeds = seeds_from_flag(seeds_flag);
  std::filesystem::create_directories(out_dir);

  std::cout << "scenario " << scenario.name << " protocol "
            << scenario.protocol << " variant "
            << variant_name(scenario.variant) << " seeds "
            << scenario.seeds.size() << "\n";

  const std::string name = variant_name(scenario.variant);
  if (scenario.protocol == "robustness") {
    std::map<std::string, RobustnessReport> by;
    by[name] = run_robustness(scenario, scenario.variant, scenario.seeds);
    emit_robustness_report(by, out_dir);
    const auto& r = by[name];
    std::cout << "roll RMS A/B/C: " << r.roll_rms_a << " / " << r.roll_rms_b
              << " / " << r.roll_rms_c << "  failures " << r.failures_a << "/"
              << r.failures_b << "/" << r.failures_c << "\n";
  } else if (scenario.protocol == "weight-sweep") {
    std::map<std::string, std::vector<SweepCell>> by;
    by[name] = run_weight_sweep(scenario, scenario.variant, scenario.seeds);
    emit_sweep_report(by, out_dir);
    for (const auto& c : by[name])
      std::cout << "w=" << c.w_pphi << "/" << c.w_vomega << " success "
                << c.report.success_rate << " vel_rms " << c.report.vel_rms
                << "\n";
  } else if (scenario.protocol == "ood") {
    std::map<std::string, OodReport> by;
    by[name] = run_ood(scenario, scenario.variant, scenario.seeds);
    emit_ood_report(by, out_dir);
    std::cout << "vel RMS " << by[name].without_payload.vel_rms << " -> "
              << by[name].with_payload.vel_rms << " ratio "
              << by[name].degradation_ratio << "\n";
  } else if (scenario.protocol == "ablation") {
    std::map<std::string, std::vector<AblationCell>> by;
    by[name] = run_ablation(scenario, scenario.variant, scenario.seeds);
    emit_ablation_report(by, out_dir);
    for (const auto& c : by[name])
      std::cout << "Mp=" << c.payload_multiple << "M vel_rms "
                << c.report.vel_rms << " success " << c.report.success_rate
                << "\n";
  } else {
    const PolicyBundle bundle = load_bundle(scenario);
    std::map<std::string, MetricReport> by;
    by[name] = run_episodes(scenario.env, bundle, scenario.payload_events,
                            scenario.seeds, scenario.env.episode_duration);
    emit_episode_report(by, out_dir);
    std::cout << "roll RMS " << by[name].roll_rms << " vel RMS "
              << by[name].vel_rms << " success " << by[name].success_rate
              << "\n";
  }
  return 0;
}

int cmd_train(const std::string& config_path) {
  const TrainerConfig cfg = load_trainer_config(Config::from_file(config_path));
  PpoTrainer trainer(cfg);
  const TrainResult result = trainer.run();
  std::cout << "training done: " << result.updates << " updates, "
            << result.env_steps << " env steps, final return "
            << result.final_mean_return << "\n";
  if (result.threshold_reached_at)
    std::cout << "tracking threshold reached at update "
              << *result.threshold_reached_at << "\n";
  return 0;
}

int cmd_train_rd(const std::string& dataset_path, const std::string& out_path,
                 int epochs, uint64_t seed) {
  const RdDataset dataset = RdDataset::load(dataset_path);
  std::cout << "dataset: " << dataset.size() << " samples\n";
  RdNetwork net(kRdHistory, {256, 128}, seed);
  RdTrainOptions opts;
  opts.epochs = epochs;
  opts.seed = seed;
  const RdTrainReport report = train_rd_network(dataset, net, opts);
  std::cout << "train mse " << report.train_mse << " validation mse "
            << report.validation_mse << " (label variance "
            << report.label_variance << ")\n";
  net.save(out_path);
  std::cout << "saved " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"residual-module locomotion workbench"};
  app.require_subcommand(1);

  std::string scenario_path, variant_flag, seeds_flag, out_dir = "out";
  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--variant", variant_flag, "controller variant override");
  run->add_option("--seeds", seeds_flag, "seed range a..b or list");
  run->add_option("--out", out_dir, "report directory");

  std::string train_config;
  auto* train = app.add_subcommand("train", "PPO training run");
  train->add_option("--config", train_config, "trainer config file")
      ->required();

  std::string dataset_path, rd_out = "rd_network.bin";
  int rd_epochs = 20;
  uint64_t rd_seed = 0;
  auto* train_rd =
      app.add_subcommand("train-rd", "fit the residual-dynamics network");
  train_rd->add_option("--dataset", dataset_path, "RD dataset file")
      ->required();
  train_rd->add_option("--out", rd_out, "output network file");
  train_rd->add_option("--epochs", rd_epochs, "training epochs");
  train_rd->add_option("--seed", rd_seed, "init seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario_path, variant_flag, seeds_flag, out_dir);
    if (*train) return cmd_train(train_config);
    if (*train_rd) return cmd_train_rd(dataset_path, rd_out, rd_epochs,
                                       rd_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
