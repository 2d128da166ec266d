#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "spe/calibration.hpp"
#include "spe/segmenter.hpp"
#include "spe/types.hpp"

namespace spe {

struct GeneratorConfig {
  Eigen::Index height = 128;
  Eigen::Index width = 128;
  double min_axis_frac = 0.10;  // ellipse semi-axes relative to canvas
  double max_axis_frac = 0.30;
  double fg_frac_min = 0.02;  // accepted foreground fraction window
  double fg_frac_max = 0.45;
  int min_foreground = 20;
};

/// n image/label pairs: random rotated ellipse blobs with smooth intensity
/// fields correlated with the mask (foreground brighter). Deterministic per
/// seed; every mask meets the foreground floor. Intensities are 8-bit
/// quantized so pairs survive the wire protocol bit-exactly.
std::vector<LabeledPair> generate_shapes(std::size_t n,
                                         const GeneratorConfig& config,
                                         std::uint64_t seed);

/// Operator mix at full corruption; each parameter scales linearly with the
/// degradation level.
struct DegradationParams {
  int erode_steps = 6;
  int dilate_steps = 0;
  int translate_dx = 26;
  int translate_dy = 18;
  double boundary_noise = 0.30;  // flip probability on the boundary band
  double dropout = 0.0;          // excluded from defaults: can plateau
};

struct DegradationSpec {
  double level = 0.0;  // 0 = identity, 1 = maximal configured corruption
  DegradationParams params;
  std::uint64_t seed = 0;
};

/// Applies erode, dilate, translate, boundary noise, dropout in that order,
/// each scaled by the level. Level 0 returns the input unchanged. Random
/// flips are pixel-hash driven, so corruption is nested as the level grows.
Mask degrade(const Mask& mask, const DegradationSpec& spec);

/// Level -> mean-dice table over a probe population, with a strictly
/// decreasing envelope for inverting target quality back to a level.
struct QualityCurve {
  std::vector<double> levels;     // ascending
  std::vector<double> mean_dice;  // observed at each level
  std::vector<double> envelope;   // strictly decreasing version used to invert
  bool monotone = false;
  double inversion_tolerance = 0.0;  // max |target - achieved| on a probe grid

  double min_dice() const { return envelope.back(); }
  double max_dice() const { return envelope.front(); }
  /// Level whose expected dice is closest to the target (clamped to range).
  double invert(double target_dice) const;
};

/// Builds the curve on >= 5 grid points in [0, 1] using common random
/// numbers per probe across levels, verifies monotonicity (small Monte-Carlo
/// rises are tolerated), and measures inversion error with an independent
/// forward pass.
QualityCurve build_quality_curve(std::span<const double> levels,
                                 std::span<const LabeledPair> probes,
                                 const DegradationParams& params,
                                 std::uint64_t seed);

/// Reference-segmenter coupling: query quality is
/// clip(a * support_quality + b + Normal(0, sigma^2)).
struct CouplingSpec {
  double a = 1.0;
  double b = 0.0;
  double sigma = 0.0;
};

/// A self-contained world with hidden ground truth: generated pairs split
/// into train/test/extra cohorts, a checkpoint series of increasing quality,
/// and a reference segmenter whose output quality is coupled to its support
/// quality. Everything derives from the seed.
class SyntheticWorld {
 public:
  SyntheticWorld(std::size_t n_shapes, const GeneratorConfig& config,
                 const DegradationParams& params, std::uint64_t seed);

  const DatasetSplit& split() const;
  const QualityCurve& curve() const;
  const DegradationParams& params() const;
  std::uint64_t seed() const;

  /// Checkpoints of decreasing corruption (quality grows with epoch),
  /// epochs 5, 10, ..., 5*n. Level 1 at the first, level 0 at the last.
  CheckpointSeries series(int n_levels) const;

  /// Deployment-stage checkpoints at levels off the series grid.
  std::vector<CheckpointRef> holdout_checkpoints(int n) const;

  /// Registry with the world's "synthetic" adapter (and the builtin
  /// threshold adapter). The registry holds a reference into this world.
  AdapterRegistry adapters() const;

  /// Builtin reference segmenter with the given coupling. Runs through the
  /// wire protocol against a scratch directory like an external plugin.
  SegmenterPlugin reference_plugin(const CouplingSpec& coupling) const;

  /// Hidden ground truth for an image digest; null when unknown.
  const Mask* hidden_gt(std::uint64_t digest) const;

 private:
  struct State;
  // Plugin handlers and adapters capture the state, so they stay valid even
  // after the world object itself goes away.
  std::shared_ptr<const State> state_;
};

}  // namespace spe
