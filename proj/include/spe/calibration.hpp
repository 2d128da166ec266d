#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spe/metrics.hpp"
#include "spe/segmenter.hpp"
#include "spe/types.hpp"

namespace spe {

/// One (pseudo, real) observation for one checkpoint.
struct PerformancePair {
  int epoch = 0;
  double phi_real = 0.0;
  double phi_pseudo = 0.0;  // mean of pseudo_repeat_values
  std::vector<double> pseudo_repeat_values;
};

struct PairSet {
  MetricId metric = MetricId::dice;
  std::vector<PerformancePair> pairs;

  std::size_t size() const { return pairs.size(); }
  /// Observed pseudo range, for extrapolation flagging.
  std::pair<double, double> pseudo_range() const;
};

enum class FitFamily { linear, log_linear };

FitFamily parse_family(const std::string& name);
std::string to_string(FitFamily family);

/// The fitted mapping from pseudo to real performance:
/// linear a*x + b, or log_linear a*ln(x) + b.
struct MappingFunction {
  FitFamily family = FitFamily::linear;
  double a = 0.0;
  double b = 0.0;
  double residual_sse = 0.0;
};

struct CollectOptions {
  int support_size = 64;
  int n_repeats = 6;
  std::uint64_t seed = 0;
  std::size_t train_cap = 0;  // 0 = score against the full training set
  int workers = 1;
};

/// Audit trail recorded into the calibration artifact: content hashes of the
/// under-test predictions per checkpoint and of the reference-segmenter
/// outputs per (checkpoint, repeat).
struct CollectAudit {
  std::vector<std::string> checkpoint_hashes;
  std::vector<std::vector<std::string>> reference_hashes;
};

/// Walks the checkpoint series: real score on the test split, then
/// `n_repeats` reference-segmenter rounds with support sets sampled from
/// (test images, checkpoint predictions), scored against the training split.
/// Support sampling is without replacement, seeded by (seed, epoch index,
/// repeat index). Checkpoints may run in parallel; results are deterministic
/// for any worker count.
PairSet collect_pairs(const AdapterRegistry& registry,
                      const CheckpointSeries& series,
                      const DatasetSplit& split, const SegmenterPlugin& plugin,
                      MetricId metric, const CollectOptions& options,
                      CollectAudit* audit = nullptr);

/// Same walk, scoring every requested metric on one set of predictions
/// (one reference inference serves all metrics).
std::map<MetricId, PairSet> collect_pairs_multi(
    const AdapterRegistry& registry, const CheckpointSeries& series,
    const DatasetSplit& split, const SegmenterPlugin& plugin,
    const std::vector<MetricId>& metrics, const CollectOptions& options,
    CollectAudit* audit = nullptr);

/// Closed-form least squares of phi_real against phi_pseudo (or its log).
MappingFunction fit_mapping(const PairSet& psi, FitFamily family);

/// linear for everything except hd95, where both families are fitted (when
/// log_linear is feasible) and the lower residual wins; ties go to linear.
FitFamily select_family(const PairSet& psi, MetricId metric);

struct ProtocolRecord {
  int support_size = 64;
  int n_repeats = 6;
  std::uint64_t seed = 0;
  std::size_t train_cap = 0;
  std::string plugin_id;
  std::vector<std::string> checkpoint_hashes;
};

/// Persisted calibration bundle. created_at stays empty unless the caller
/// stamps it; artifacts are byte-identical across reruns by default.
struct CalibrationArtifact {
  int schema_version = 1;
  MetricId metric = MetricId::dice;
  MappingFunction mapping;
  PairSet pair_set;
  ProtocolRecord protocol;
  std::vector<std::vector<std::string>> reference_hashes;
  std::string created_at;
  std::string toolkit_version;
  std::string config_echo;  // the RunConfig the artifact was produced with
};

/// Canonical JSON serialization: sorted keys, deterministic float encoding.
void save_artifact(const CalibrationArtifact& artifact,
                   const std::filesystem::path& path);
CalibrationArtifact load_artifact(const std::filesystem::path& path);

}  // namespace spe
