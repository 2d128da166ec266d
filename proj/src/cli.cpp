#include <CLI11.hpp>

#include <iostream>

#include "spe/commands.hpp"
#include "spe/version.hpp"

namespace spe {
namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> metrics;
  std::optional<std::uint64_t> seed;
  std::optional<int> support_size;
  std::optional<int> n_repeats;
  std::optional<std::string> plugin_cmd;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration");
  cmd->add_option("--metric", flags.metrics, "Metric(s) to evaluate");
  cmd->add_option("--seed", flags.seed, "Root seed");
  cmd->add_option("--support-size", flags.support_size,
                  "Support-set size (max 64)");
  cmd->add_option("--repeats", flags.n_repeats,
                  "Support resampling repeats per checkpoint");
  cmd->add_option("--plugin-cmd", flags.plugin_cmd,
                  "Reference-segmenter plugin command");
  cmd->add_option("--out", flags.out_dir, "Output directory");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig config;
  if (!flags.config_path.empty()) config = load_config(flags.config_path);
  // Flags win over the config file.
  if (!flags.metrics.empty()) {
    config.metrics.clear();
    for (const auto& m : flags.metrics)
      config.metrics.push_back(parse_metric(m));
  }
  if (flags.seed) config.seed = *flags.seed;
  if (flags.support_size) config.support_size = *flags.support_size;
  if (flags.n_repeats) config.n_repeats = *flags.n_repeats;
  if (flags.plugin_cmd) config.plugin_cmd = *flags.plugin_cmd;
  if (flags.out_dir) config.out_dir = *flags.out_dir;
  return config;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Segmentation performance estimation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // metrics
  auto* metrics_cmd =
      app.add_subcommand("metrics", "Score predictions against ground truth");
  std::string pred_dir, gt_dir;
  std::vector<std::string> metric_names{"dice"};
  std::string metrics_out = "out";
  metrics_cmd->add_option("pred_dir", pred_dir, "Directory of predicted masks")
      ->required();
  metrics_cmd->add_option("gt_dir", gt_dir, "Directory of ground-truth masks")
      ->required();
  metrics_cmd->add_option("--metric", metric_names, "Metric(s) to compute");
  metrics_cmd->add_option("--out", metrics_out, "Output directory");

  // calibrate
  auto* calibrate_cmd = app.add_subcommand(
      "calibrate", "Collect checkpoint pairs and fit the mapping");
  CommonFlags calibrate_flags;
  add_common(calibrate_cmd, calibrate_flags);

  // estimate
  auto* estimate_cmd = app.add_subcommand(
      "estimate", "Estimate performance on an unlabeled cohort");
  CommonFlags estimate_flags;
  add_common(estimate_cmd, estimate_flags);
  std::string artifact_path, unlabeled_dir;
  estimate_cmd
      ->add_option("--artifact", artifact_path, "Calibration artifact file")
      ->required();
  estimate_cmd
      ->add_option("--unlabeled", unlabeled_dir,
                   "Directory of unlabeled images")
      ->required();

  // synth-demo
  auto* demo_cmd = app.add_subcommand(
      "synth-demo", "End-to-end run on the synthetic harness");
  CommonFlags demo_flags;
  add_common(demo_cmd, demo_flags);
  std::vector<std::uint64_t> demo_seeds;
  demo_cmd->add_option("--seeds", demo_seeds,
                       "Run once per seed and add Mean/STD rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (metrics_cmd->parsed()) {
      MetricsArgs args;
      args.pred_dir = pred_dir;
      args.gt_dir = gt_dir;
      args.metrics.clear();
      for (const auto& m : metric_names)
        args.metrics.push_back(parse_metric(m));
      args.out_dir = metrics_out;
      cmd_metrics(args);
    } else if (calibrate_cmd->parsed()) {
      cmd_calibrate(resolve_config(calibrate_flags));
    } else if (estimate_cmd->parsed()) {
      cmd_estimate(resolve_config(estimate_flags), artifact_path,
                   unlabeled_dir);
    } else if (demo_cmd->parsed()) {
      RunConfig config = resolve_config(demo_flags);
      if (!demo_seeds.empty()) {
        if (!config.synthetic) config.synthetic = SyntheticConfig{};
        config.synthetic->seeds = demo_seeds;
      }
      cmd_synth_demo(config);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace spe
