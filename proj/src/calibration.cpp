#include "spe/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "spe/parallel.hpp"
#include "spe/rng.hpp"

namespace spe {

std::pair<double, double> PairSet::pseudo_range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& p : pairs) {
    lo = std::min(lo, p.phi_pseudo);
    hi = std::max(hi, p.phi_pseudo);
  }
  return {lo, hi};
}

FitFamily parse_family(const std::string& name) {
  if (name == "linear") return FitFamily::linear;
  if (name == "log_linear") return FitFamily::log_linear;
  throw ParseError("unknown fit family: " + name);
}

std::string to_string(FitFamily family) {
  return family == FitFamily::linear ? "linear" : "log_linear";
}

namespace {

std::string masks_hash(const std::vector<Mask>& masks) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& m : masks) h = rng::mix(h, mask_digest(m));
  return rng::to_hex(h);
}

struct CheckpointOutcome {
  std::map<MetricId, double> phi_real;
  std::map<MetricId, std::vector<double>> repeat_values;
  std::string checkpoint_hash;
  std::vector<std::string> reference_hashes;
};

double require_defined_mean(const SetScore& score, int epoch) {
  if (!score.defined())
    throw CalibrationError("set score for metric '" + to_string(score.metric) +
                           "' at epoch " + std::to_string(epoch) +
                           " is undefined (no defined per-image values)");
  return score.mean;
}

}  // namespace

std::map<MetricId, PairSet> collect_pairs_multi(
    const AdapterRegistry& registry, const CheckpointSeries& series,
    const DatasetSplit& split, const SegmenterPlugin& plugin,
    const std::vector<MetricId>& metrics, const CollectOptions& options,
    CollectAudit* audit) {
  series.validate();
  if (metrics.empty()) throw ValidationError("collect_pairs: no metrics");
  if (split.test.empty())
    throw ValidationError("collect_pairs: test split is empty");
  if (split.train.empty())
    throw ValidationError("collect_pairs: train split is empty");
  if (options.support_size < 1 ||
      options.support_size > static_cast<int>(SupportSet::kMaxSize))
    throw ValidationError("support_size must be in [1, 64]");
  if (options.n_repeats < 1)
    throw ValidationError("n_repeats must be at least 1");

  std::vector<Image> test_images;
  std::vector<Mask> test_labels;
  for (const auto& pair : split.test) {
    test_images.push_back(pair.image);
    test_labels.push_back(pair.label);
  }

  // Optional cap keeps desk-scale runs cheap; prefix order is manifest order.
  std::size_t n_train = split.train.size();
  if (options.train_cap > 0 && options.train_cap < n_train)
    n_train = options.train_cap;
  std::vector<Image> train_images;
  std::vector<Mask> train_labels;
  for (std::size_t i = 0; i < n_train; ++i) {
    train_images.push_back(split.train[i].image);
    train_labels.push_back(split.train[i].label);
  }

  const std::size_t k_support =
      std::min<std::size_t>(static_cast<std::size_t>(options.support_size),
                            split.test.size());
  const std::size_t n_ckpts = series.size();
  std::vector<CheckpointOutcome> outcomes(n_ckpts);

  parallel_for(n_ckpts, options.workers, [&](std::size_t i) {
    const CheckpointRef& ckpt = series.checkpoints[i];
    CheckpointOutcome& out = outcomes[i];

    const std::vector<Mask> test_preds =
        predict_under_test(registry, ckpt, test_images);
    out.checkpoint_hash = masks_hash(test_preds);
    for (const MetricId metric : metrics) {
      out.phi_real[metric] = require_defined_mean(
          evaluate_set(metric, test_preds, test_labels), ckpt.epoch);
      out.repeat_values[metric] = {};
    }

    for (int r = 0; r < options.n_repeats; ++r) {
      rng::Engine eng(rng::mix(options.seed, 0x5u, i, static_cast<std::uint64_t>(r)));
      const auto idx =
          rng::sample_without_replacement(split.test.size(), k_support, eng);
      std::vector<LabeledPair> support_pairs;
      support_pairs.reserve(idx.size());
      for (const std::size_t j : idx)
        support_pairs.push_back(LabeledPair{test_images[j], test_preds[j],
                                            split.test[j].id});
      const SupportSet support(std::move(support_pairs));

      const std::vector<Mask> ref_preds =
          reference_infer(plugin, support, train_images);
      out.reference_hashes.push_back(masks_hash(ref_preds));
      for (const MetricId metric : metrics) {
        out.repeat_values[metric].push_back(require_defined_mean(
            evaluate_set(metric, ref_preds, train_labels), ckpt.epoch));
      }
    }
  });

  std::map<MetricId, PairSet> result;
  for (const MetricId metric : metrics) {
    PairSet psi;
    psi.metric = metric;
    for (std::size_t i = 0; i < n_ckpts; ++i) {
      PerformancePair pair;
      pair.epoch = series.checkpoints[i].epoch;
      pair.phi_real = outcomes[i].phi_real.at(metric);
      pair.pseudo_repeat_values = outcomes[i].repeat_values.at(metric);
      double sum = 0.0;
      for (const double v : pair.pseudo_repeat_values) sum += v;
      pair.phi_pseudo =
          sum / static_cast<double>(pair.pseudo_repeat_values.size());
      psi.pairs.push_back(std::move(pair));
    }
    result.emplace(metric, std::move(psi));
  }

  if (audit) {
    audit->checkpoint_hashes.clear();
    audit->reference_hashes.clear();
    for (const auto& out : outcomes) {
      audit->checkpoint_hashes.push_back(out.checkpoint_hash);
      audit->reference_hashes.push_back(out.reference_hashes);
    }
  }
  return result;
}

PairSet collect_pairs(const AdapterRegistry& registry,
                      const CheckpointSeries& series,
                      const DatasetSplit& split, const SegmenterPlugin& plugin,
                      MetricId metric, const CollectOptions& options,
                      CollectAudit* audit) {
  auto sets = collect_pairs_multi(registry, series, split, plugin, {metric},
                                  options, audit);
  return std::move(sets.at(metric));
}

MappingFunction fit_mapping(const PairSet& psi, FitFamily family) {
  const std::size_t k = psi.size();
  if (k < 2) throw FitError("need at least two pairs to fit a mapping");

  std::vector<double> x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    double xi = psi.pairs[i].phi_pseudo;
    if (family == FitFamily::log_linear) {
      if (xi <= 0.0) {
        std::string offenders;
        for (const auto& p : psi.pairs)
          if (p.phi_pseudo <= 0.0)
            offenders += (offenders.empty() ? "" : ", ") +
                         std::to_string(p.epoch);
        throw FitError(
            "log_linear requires positive pseudo values; offending epochs: " +
            offenders);
      }
      xi = std::log(xi);
    }
    x[i] = xi;
    y[i] = psi.pairs[i].phi_real;
  }

  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= static_cast<double>(k);
  mean_y /= static_cast<double>(k);

  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mean_x) * (x[i] - mean_x);
    sxy += (x[i] - mean_x) * (y[i] - mean_y);
  }
  if (sxx == 0.0)
    throw FitError("degenerate predictor: pseudo values have zero variance");

  MappingFunction g;
  g.family = family;
  g.a = sxy / sxx;
  g.b = mean_y - g.a * mean_x;
  g.residual_sse = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = y[i] - (g.a * x[i] + g.b);
    g.residual_sse += r * r;
  }
  return g;
}

FitFamily select_family(const PairSet& psi, MetricId metric) {
  if (metric != MetricId::hd95) return FitFamily::linear;
  const MappingFunction linear = fit_mapping(psi, FitFamily::linear);
  MappingFunction log_linear;
  try {
    log_linear = fit_mapping(psi, FitFamily::log_linear);
  } catch (const FitError&) {
    return FitFamily::linear;  // log fit infeasible
  }
  return log_linear.residual_sse < linear.residual_sse ? FitFamily::log_linear
                                                       : FitFamily::linear;
}

namespace {

constexpr int kSchemaVersion = 1;

nlohmann::json pair_to_json(const PerformancePair& p) {
  return nlohmann::json{{"epoch", p.epoch},
                        {"phi_real", p.phi_real},
                        {"phi_pseudo", p.phi_pseudo},
                        {"pseudo_repeat_values", p.pseudo_repeat_values}};
}

}  // namespace

void save_artifact(const CalibrationArtifact& artifact,
                   const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["schema_version"] = artifact.schema_version;
  doc["metric"] = to_string(artifact.metric);
  doc["mapping"] = {{"family", to_string(artifact.mapping.family)},
                    {"a", artifact.mapping.a},
                    {"b", artifact.mapping.b},
                    {"residual_sse", artifact.mapping.residual_sse}};
  doc["pairs"] = nlohmann::json::array();
  for (const auto& p : artifact.pair_set.pairs)
    doc["pairs"].push_back(pair_to_json(p));
  doc["protocol"] = {{"support_size", artifact.protocol.support_size},
                     {"n_repeats", artifact.protocol.n_repeats},
                     {"seed", artifact.protocol.seed},
                     {"train_cap", artifact.protocol.train_cap},
                     {"plugin_id", artifact.protocol.plugin_id},
                     {"checkpoint_hashes", artifact.protocol.checkpoint_hashes}};
  doc["reference_hashes"] = artifact.reference_hashes;
  doc["created_at"] = artifact.created_at;
  doc["toolkit_version"] = artifact.toolkit_version;
  doc["config"] = artifact.config_echo;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write artifact: " + path.string());
  out << doc.dump(2) << "\n";
}

CalibrationArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open artifact: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("artifact parse error in " + path.string() + ": " +
                     e.what());
  }

  try {
    CalibrationArtifact artifact;
    artifact.schema_version = doc.at("schema_version").get<int>();
    if (artifact.schema_version != kSchemaVersion)
      throw ParseError("unsupported artifact schema version " +
                       std::to_string(artifact.schema_version));
    artifact.metric = parse_metric(doc.at("metric").get<std::string>());
    const auto& mapping = doc.at("mapping");
    artifact.mapping.family =
        parse_family(mapping.at("family").get<std::string>());
    artifact.mapping.a = mapping.at("a").get<double>();
    artifact.mapping.b = mapping.at("b").get<double>();
    artifact.mapping.residual_sse = mapping.at("residual_sse").get<double>();
    artifact.pair_set.metric = artifact.metric;
    for (const auto& jp : doc.at("pairs")) {
      PerformancePair p;
      p.epoch = jp.at("epoch").get<int>();
      p.phi_real = jp.at("phi_real").get<double>();
      p.phi_pseudo = jp.at("phi_pseudo").get<double>();
      p.pseudo_repeat_values =
          jp.at("pseudo_repeat_values").get<std::vector<double>>();
      artifact.pair_set.pairs.push_back(std::move(p));
    }
    const auto& proto = doc.at("protocol");
    artifact.protocol.support_size = proto.at("support_size").get<int>();
    artifact.protocol.n_repeats = proto.at("n_repeats").get<int>();
    artifact.protocol.seed = proto.at("seed").get<std::uint64_t>();
    artifact.protocol.train_cap = proto.at("train_cap").get<std::size_t>();
    artifact.protocol.plugin_id = proto.at("plugin_id").get<std::string>();
    artifact.protocol.checkpoint_hashes =
        proto.at("checkpoint_hashes").get<std::vector<std::string>>();
    artifact.reference_hashes =
        doc.at("reference_hashes").get<std::vector<std::vector<std::string>>>();
    artifact.created_at = doc.at("created_at").get<std::string>();
    artifact.toolkit_version = doc.at("toolkit_version").get<std::string>();
    artifact.config_echo = doc.at("config").get<std::string>();
    return artifact;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("artifact schema error in " + path.string() + ": " +
                     e.what());
  }
}

}  // namespace spe
