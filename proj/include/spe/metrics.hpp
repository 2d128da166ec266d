#pragma once

#include <span>
#include <string>
#include <vector>

#include "spe/types.hpp"

namespace spe {

enum class MetricId { dice, hd95, jaccard, pearson, recall, precision };

MetricId parse_metric(const std::string& name);
std::string to_string(MetricId id);
std::vector<MetricId> all_metrics();

/// false only for hd95 (a distance: lower is better).
bool higher_is_better(MetricId id);

struct MetricValue {
  double value = 0.0;
  bool defined = false;
  bool higher_is_better = true;
};

/// Per-image values plus the mean over defined ones.
struct SetScore {
  MetricId metric = MetricId::dice;
  double mean = 0.0;  // meaningless unless defined()
  std::vector<MetricValue> per_image;
  std::size_t n_defined = 0;

  bool defined() const { return n_defined > 0; }
};

// Pairwise metrics. Empty-mask conventions:
//   dice/jaccard: both empty -> 1.0, one empty -> 0.0
//   recall undefined when gt empty; precision undefined when pred empty
//   pearson undefined when either grid is constant
//   hd95 undefined when either mask is empty
MetricValue dice(const Mask& pred, const Mask& gt);
MetricValue jaccard(const Mask& pred, const Mask& gt);
MetricValue recall(const Mask& pred, const Mask& gt);
MetricValue precision(const Mask& pred, const Mask& gt);
MetricValue pearson_pixel(const Mask& pred, const Mask& gt);

/// Max over both directions of the nearest-rank 95th percentile of minimal
/// Euclidean distances between foreground pixel sets (pixel-center
/// coordinates, distances taken over all foreground pixels).
MetricValue hd95(const Mask& pred, const Mask& gt);

MetricValue evaluate(MetricId id, const Mask& pred, const Mask& gt);

/// Per-image evaluation plus mean over defined values, fixed summation order.
SetScore evaluate_set(MetricId id, std::span<const Mask> preds,
                      std::span<const Mask> gts);

/// Nearest-rank percentile: value at position ceil(p/100 * n) (1-indexed) of
/// the sorted multiset. `values` is consumed (sorted in place).
double nearest_rank_percentile(std::vector<double>& values, double p);

}  // namespace spe
