#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spe/calibration.hpp"
#include "spe/synthetic.hpp"

namespace spe {

/// Synthetic-world parameters for calibrate/estimate/synth-demo runs that
/// use the builtin harness instead of a dataset manifest.
struct SyntheticConfig {
  std::size_t n_shapes = 200;
  int n_levels = 20;
  int holdout_levels = 5;
  Eigen::Index canvas = 128;
  CouplingSpec coupling{0.9, 0.05, 0.01};
  DegradationParams degradation;
  std::vector<std::uint64_t> seeds;  // synth-demo repetitions; empty = {seed}
};

/// The full run configuration. Loaded from a JSON file, overridable by CLI
/// flags; the effective form is echoed into every output file.
struct RunConfig {
  std::vector<MetricId> metrics;  // empty = command default
  std::uint64_t seed = 17;
  int support_size = 64;
  int n_repeats = 6;
  std::string out_dir = "out";
  int workers = 1;
  std::string fit_family = "auto";  // auto | linear | log_linear
  std::size_t train_cap = 0;
  std::string manifest;
  std::string plugin_cmd;
  double plugin_timeout_sec = 0.0;
  std::string gray_conversion = "luma";  // luma | average
  std::vector<CheckpointRef> checkpoints;
  std::optional<CheckpointRef> deployed;
  bool stamp = false;  // wall-clock created_at (breaks byte reproducibility)
  std::optional<SyntheticConfig> synthetic;
};

RunConfig load_config(const std::filesystem::path& path);

/// Canonical single-line JSON echo of the effective config.
std::string config_echo(const RunConfig& config);

struct MetricsArgs {
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  std::vector<MetricId> metrics{MetricId::dice};
  std::filesystem::path out_dir = "out";
};

// Command bodies. They throw on failure; run_cli maps exceptions to the
// exit-code contract (0 ok, 1 internal, 2 validation, 3 undefined metric,
// 4 artifact mismatch).
void cmd_metrics(const MetricsArgs& args);
void cmd_calibrate(const RunConfig& config);
void cmd_estimate(const RunConfig& config,
                  const std::filesystem::path& artifact_path,
                  const std::filesystem::path& unlabeled_dir);
void cmd_synth_demo(const RunConfig& config);

int exit_code_for(const std::exception& e);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace spe
