#include "spe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spe/distance_transform.hpp"

namespace spe {
namespace {

struct OverlapCounts {
  long long pred = 0;
  long long gt = 0;
  long long both = 0;
  long long total = 0;
};

OverlapCounts count_overlap(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt, "metric");
  OverlapCounts c;
  c.pred = pred.count();
  c.gt = gt.count();
  c.both = (pred && gt).count();
  c.total = static_cast<long long>(pred.size());
  return c;
}

MetricValue defined_value(double v, MetricId id) {
  return MetricValue{v, true, higher_is_better(id)};
}

MetricValue undefined_value(MetricId id) {
  return MetricValue{0.0, false, higher_is_better(id)};
}

}  // namespace

MetricId parse_metric(const std::string& name) {
  if (name == "dice") return MetricId::dice;
  if (name == "hd95") return MetricId::hd95;
  if (name == "jaccard") return MetricId::jaccard;
  if (name == "pearson") return MetricId::pearson;
  if (name == "recall") return MetricId::recall;
  if (name == "precision") return MetricId::precision;
  throw ValidationError("unknown metric: " + name);
}

std::string to_string(MetricId id) {
  switch (id) {
    case MetricId::dice: return "dice";
    case MetricId::hd95: return "hd95";
    case MetricId::jaccard: return "jaccard";
    case MetricId::pearson: return "pearson";
    case MetricId::recall: return "recall";
    case MetricId::precision: return "precision";
  }
  throw ValidationError("invalid metric id");
}

std::vector<MetricId> all_metrics() {
  return {MetricId::dice,    MetricId::hd95,   MetricId::jaccard,
          MetricId::pearson, MetricId::recall, MetricId::precision};
}

bool higher_is_better(MetricId id) { return id != MetricId::hd95; }

MetricValue dice(const Mask& pred, const Mask& gt) {
  const auto c = count_overlap(pred, gt);
  if (c.pred + c.gt == 0) return defined_value(1.0, MetricId::dice);
  return defined_value(2.0 * static_cast<double>(c.both) /
                           static_cast<double>(c.pred + c.gt),
                       MetricId::dice);
}

MetricValue jaccard(const Mask& pred, const Mask& gt) {
  const auto c = count_overlap(pred, gt);
  const long long uni = c.pred + c.gt - c.both;
  if (uni == 0) return defined_value(1.0, MetricId::jaccard);
  return defined_value(static_cast<double>(c.both) / static_cast<double>(uni),
                       MetricId::jaccard);
}

MetricValue recall(const Mask& pred, const Mask& gt) {
  const auto c = count_overlap(pred, gt);
  if (c.gt == 0) return undefined_value(MetricId::recall);
  return defined_value(static_cast<double>(c.both) / static_cast<double>(c.gt),
                       MetricId::recall);
}

MetricValue precision(const Mask& pred, const Mask& gt) {
  const auto c = count_overlap(pred, gt);
  if (c.pred == 0) return undefined_value(MetricId::precision);
  return defined_value(
      static_cast<double>(c.both) / static_cast<double>(c.pred),
      MetricId::precision);
}

MetricValue pearson_pixel(const Mask& pred, const Mask& gt) {
  const auto c = count_overlap(pred, gt);
  // Correlation of two 0/1 grids reduces to counts (phi coefficient).
  if (c.pred == 0 || c.pred == c.total || c.gt == 0 || c.gt == c.total)
    return undefined_value(MetricId::pearson);
  const double n = static_cast<double>(c.total);
  const double num = n * static_cast<double>(c.both) -
                     static_cast<double>(c.pred) * static_cast<double>(c.gt);
  const double den =
      std::sqrt(static_cast<double>(c.pred) *
                static_cast<double>(c.total - c.pred) *
                static_cast<double>(c.gt) *
                static_cast<double>(c.total - c.gt));
  return defined_value(num / den, MetricId::pearson);
}

double nearest_rank_percentile(std::vector<double>& values, double p) {
  if (values.empty()) throw ValidationError("percentile of empty multiset");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(
      std::ceil(p / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return values[rank - 1];
}

namespace {

// 95th-percentile of distances from `from` foreground pixels to the nearest
// `to` foreground pixel.
double directed_p95(const Mask& from, const Mask& to) {
  const Eigen::ArrayXXd d2 = squared_edt(to);
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(from.count()));
  for (Eigen::Index y = 0; y < from.rows(); ++y)
    for (Eigen::Index x = 0; x < from.cols(); ++x)
      if (from(y, x)) dists.push_back(std::sqrt(d2(y, x)));
  return nearest_rank_percentile(dists, 95.0);
}

}  // namespace

MetricValue hd95(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt, "hd95");
  if (pred.count() == 0 || gt.count() == 0)
    return undefined_value(MetricId::hd95);
  const double forward = directed_p95(pred, gt);
  const double backward = directed_p95(gt, pred);
  return defined_value(std::max(forward, backward), MetricId::hd95);
}

MetricValue evaluate(MetricId id, const Mask& pred, const Mask& gt) {
  switch (id) {
    case MetricId::dice: return dice(pred, gt);
    case MetricId::hd95: return hd95(pred, gt);
    case MetricId::jaccard: return jaccard(pred, gt);
    case MetricId::pearson: return pearson_pixel(pred, gt);
    case MetricId::recall: return recall(pred, gt);
    case MetricId::precision: return precision(pred, gt);
  }
  throw ValidationError("invalid metric id");
}

SetScore evaluate_set(MetricId id, std::span<const Mask> preds,
                      std::span<const Mask> gts) {
  if (preds.empty() || gts.empty())
    throw ValidationError("evaluate_set: empty input");
  if (preds.size() != gts.size())
    throw ValidationError("evaluate_set: list length mismatch (" +
                          std::to_string(preds.size()) + " vs " +
                          std::to_string(gts.size()) + ")");
  SetScore score;
  score.metric = id;
  score.per_image.reserve(preds.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const MetricValue v = evaluate(id, preds[i], gts[i]);
    if (v.defined) {
      sum += v.value;
      ++score.n_defined;
    }
    score.per_image.push_back(v);
  }
  score.mean = score.n_defined > 0
                   ? sum / static_cast<double>(score.n_defined)
                   : std::numeric_limits<double>::quiet_NaN();
  return score;
}

}  // namespace spe
