#pragma once

#include <cstdint>
#include <vector>

#include "spe/calibration.hpp"
#include "spe/segmenter.hpp"
#include "spe/types.hpp"

namespace spe {

/// a*x + b, or a*ln(x) + b for log_linear (x must be positive there).
double apply_mapping(const MappingFunction& g, double x);

struct EstimationResult {
  MetricId metric = MetricId::dice;
  double phi_pseudo = 0.0;
  double phi_estimated = 0.0;  // after clamping to the metric's range
  bool clamped = false;
  bool extrapolated = false;  // pseudo value outside the calibrated range
  std::size_t n_unlabeled = 0;
  std::vector<double> repeat_values;
  // Protocol echo.
  int support_size = 0;
  int n_repeats = 0;
  std::uint64_t seed = 0;
  bool protocol_overridden = false;
};

struct EstimateOptions {
  /// The estimation protocol is locked to the artifact unless explicitly
  /// overridden; overrides are flagged in the result.
  bool override_protocol = false;
  int support_size = 0;
  int n_repeats = 0;
  int workers = 1;
};

/// Applies a calibration artifact to an unlabeled cohort: the deployed
/// checkpoint predicts on the unlabeled images, those predictions form the
/// support sets, the reference segmenter runs on the (labeled) training
/// pairs, and the fitted mapping converts the resulting pseudo score into an
/// estimated real score.
EstimationResult estimate_unlabeled(const AdapterRegistry& registry,
                                    const CheckpointRef& deployed,
                                    const std::vector<Image>& unlabeled,
                                    const std::vector<LabeledPair>& train_pairs,
                                    const SegmenterPlugin& plugin,
                                    const CalibrationArtifact& artifact,
                                    std::uint64_t seed,
                                    const EstimateOptions& options = {});

}  // namespace spe
