#include "spe/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spe/rng.hpp"

namespace spe {

double apply_mapping(const MappingFunction& g, double x) {
  if (g.family == FitFamily::log_linear) {
    if (x <= 0.0)
      throw DomainError("log_linear mapping needs positive input, got " +
                        std::to_string(x));
    return g.a * std::log(x) + g.b;
  }
  return g.a * x + g.b;
}

namespace {

std::pair<double, double> metric_range(MetricId id) {
  switch (id) {
    case MetricId::pearson:
      return {-1.0, 1.0};
    case MetricId::hd95:
      return {0.0, std::numeric_limits<double>::infinity()};
    default:
      return {0.0, 1.0};
  }
}

}  // namespace

EstimationResult estimate_unlabeled(const AdapterRegistry& registry,
                                    const CheckpointRef& deployed,
                                    const std::vector<Image>& unlabeled,
                                    const std::vector<LabeledPair>& train_pairs,
                                    const SegmenterPlugin& plugin,
                                    const CalibrationArtifact& artifact,
                                    std::uint64_t seed,
                                    const EstimateOptions& options) {
  if (unlabeled.empty())
    throw ValidationError("estimate_unlabeled: no unlabeled images");
  if (train_pairs.empty())
    throw ValidationError("estimate_unlabeled: no training pairs");

  EstimationResult result;
  result.metric = artifact.metric;
  result.n_unlabeled = unlabeled.size();
  result.seed = seed;
  result.support_size = artifact.protocol.support_size;
  result.n_repeats = artifact.protocol.n_repeats;
  if (options.override_protocol) {
    result.protocol_overridden = true;
    if (options.support_size > 0) result.support_size = options.support_size;
    if (options.n_repeats > 0) result.n_repeats = options.n_repeats;
  }
  if (result.support_size < 1 ||
      result.support_size > static_cast<int>(SupportSet::kMaxSize))
    throw ValidationError("support_size must be in [1, 64]");
  if (result.n_repeats < 1)
    throw ValidationError("n_repeats must be at least 1");

  std::size_t n_train = train_pairs.size();
  if (artifact.protocol.train_cap > 0 &&
      artifact.protocol.train_cap < n_train)
    n_train = artifact.protocol.train_cap;
  std::vector<Image> train_images;
  std::vector<Mask> train_labels;
  for (std::size_t i = 0; i < n_train; ++i) {
    train_images.push_back(train_pairs[i].image);
    train_labels.push_back(train_pairs[i].label);
  }

  const std::vector<Mask> unlabeled_preds =
      predict_under_test(registry, deployed, unlabeled);
  const std::size_t k_support = std::min<std::size_t>(
      static_cast<std::size_t>(result.support_size), unlabeled.size());

  double sum = 0.0;
  for (int r = 0; r < result.n_repeats; ++r) {
    rng::Engine eng(rng::mix(seed, 0xDu, static_cast<std::uint64_t>(r)));
    const auto idx =
        rng::sample_without_replacement(unlabeled.size(), k_support, eng);
    std::vector<LabeledPair> support_pairs;
    support_pairs.reserve(idx.size());
    for (const std::size_t j : idx)
      support_pairs.push_back(LabeledPair{unlabeled[j], unlabeled_preds[j],
                                          "query-" + std::to_string(j)});
    const SupportSet support(std::move(support_pairs));

    const std::vector<Mask> ref_preds =
        reference_infer(plugin, support, train_images);
    const SetScore score =
        evaluate_set(artifact.metric, ref_preds, train_labels);
    if (!score.defined())
      throw CalibrationError("pseudo set score undefined for metric '" +
                             to_string(artifact.metric) + "' at repeat " +
                             std::to_string(r));
    result.repeat_values.push_back(score.mean);
    sum += score.mean;
  }
  result.phi_pseudo = sum / static_cast<double>(result.n_repeats);

  const auto [lo, hi] = artifact.pair_set.pseudo_range();
  result.extrapolated = result.phi_pseudo < lo || result.phi_pseudo > hi;

  double estimate = apply_mapping(artifact.mapping, result.phi_pseudo);
  const auto [range_lo, range_hi] = metric_range(artifact.metric);
  if (estimate < range_lo) {
    estimate = range_lo;
    result.clamped = true;
  } else if (estimate > range_hi) {
    estimate = range_hi;
    result.clamped = true;
  }
  result.phi_estimated = estimate;
  return result;
}

}  // namespace spe
