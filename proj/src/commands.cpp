#include "spe/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spe/dataset.hpp"
#include "spe/estimator.hpp"
#include "spe/meta_eval.hpp"
#include "spe/parallel.hpp"
#include "spe/png_io.hpp"
#include "spe/rng.hpp"
#include "spe/version.hpp"

namespace spe {
namespace {

using nlohmann::json;

CheckpointRef checkpoint_from_json(const json& j) {
  CheckpointRef ckpt;
  ckpt.model_id = j.at("model_id").get<std::string>();
  ckpt.epoch = j.at("epoch").get<int>();
  ckpt.locator = j.value("locator", std::string{});
  return ckpt;
}

json checkpoint_to_json(const CheckpointRef& ckpt) {
  return json{{"model_id", ckpt.model_id},
              {"epoch", ckpt.epoch},
              {"locator", ckpt.locator}};
}

png::GrayConversion parse_conversion(const std::string& name) {
  if (name == "luma") return png::GrayConversion::luma;
  if (name == "average") return png::GrayConversion::average;
  throw ValidationError("unknown gray_conversion: " + name);
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError("config parse error in " + path.string() + ": " +
                     e.what());
  }

  RunConfig cfg;
  try {
    if (doc.contains("metrics"))
      for (const auto& m : doc.at("metrics"))
        cfg.metrics.push_back(parse_metric(m.get<std::string>()));
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.support_size = doc.value("support_size", cfg.support_size);
    cfg.n_repeats = doc.value("n_repeats", cfg.n_repeats);
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    cfg.workers = doc.value("workers", cfg.workers);
    cfg.fit_family = doc.value("fit_family", cfg.fit_family);
    cfg.train_cap = doc.value("train_cap", cfg.train_cap);
    cfg.manifest = doc.value("manifest", cfg.manifest);
    cfg.plugin_cmd = doc.value("plugin_cmd", cfg.plugin_cmd);
    cfg.plugin_timeout_sec =
        doc.value("plugin_timeout_sec", cfg.plugin_timeout_sec);
    cfg.gray_conversion = doc.value("gray_conversion", cfg.gray_conversion);
    if (doc.contains("checkpoints"))
      for (const auto& j : doc.at("checkpoints"))
        cfg.checkpoints.push_back(checkpoint_from_json(j));
    if (doc.contains("deployed"))
      cfg.deployed = checkpoint_from_json(doc.at("deployed"));
    cfg.stamp = doc.value("stamp", cfg.stamp);
    if (doc.contains("synthetic")) {
      const auto& s = doc.at("synthetic");
      SyntheticConfig syn;
      syn.n_shapes = s.value("n_shapes", syn.n_shapes);
      syn.n_levels = s.value("n_levels", syn.n_levels);
      syn.holdout_levels = s.value("holdout_levels", syn.holdout_levels);
      syn.canvas = s.value("canvas", static_cast<int>(syn.canvas));
      if (s.contains("coupling")) {
        const auto& c = s.at("coupling");
        syn.coupling.a = c.value("a", syn.coupling.a);
        syn.coupling.b = c.value("b", syn.coupling.b);
        syn.coupling.sigma = c.value("sigma", syn.coupling.sigma);
      }
      if (s.contains("degradation")) {
        const auto& d = s.at("degradation");
        syn.degradation.erode_steps =
            d.value("erode_steps", syn.degradation.erode_steps);
        syn.degradation.dilate_steps =
            d.value("dilate_steps", syn.degradation.dilate_steps);
        syn.degradation.translate_dx =
            d.value("translate_dx", syn.degradation.translate_dx);
        syn.degradation.translate_dy =
            d.value("translate_dy", syn.degradation.translate_dy);
        syn.degradation.boundary_noise =
            d.value("boundary_noise", syn.degradation.boundary_noise);
        syn.degradation.dropout = d.value("dropout", syn.degradation.dropout);
      }
      if (s.contains("seeds"))
        syn.seeds = s.at("seeds").get<std::vector<std::uint64_t>>();
      cfg.synthetic = std::move(syn);
    }
  } catch (const json::exception& e) {
    throw ParseError("config schema error in " + path.string() + ": " +
                     e.what());
  }
  return cfg;
}

std::string config_echo(const RunConfig& config) {
  json doc;
  json metrics = json::array();
  for (const MetricId m : config.metrics) metrics.push_back(to_string(m));
  doc["metrics"] = metrics;
  doc["seed"] = config.seed;
  doc["support_size"] = config.support_size;
  doc["n_repeats"] = config.n_repeats;
  doc["out_dir"] = config.out_dir;
  doc["workers"] = config.workers;
  doc["fit_family"] = config.fit_family;
  doc["train_cap"] = config.train_cap;
  doc["manifest"] = config.manifest;
  doc["plugin_cmd"] = config.plugin_cmd;
  doc["plugin_timeout_sec"] = config.plugin_timeout_sec;
  doc["gray_conversion"] = config.gray_conversion;
  json ckpts = json::array();
  for (const auto& c : config.checkpoints) ckpts.push_back(checkpoint_to_json(c));
  doc["checkpoints"] = ckpts;
  if (config.deployed) doc["deployed"] = checkpoint_to_json(*config.deployed);
  doc["stamp"] = config.stamp;
  if (config.synthetic) {
    const auto& s = *config.synthetic;
    doc["synthetic"] = {
        {"n_shapes", s.n_shapes},
        {"n_levels", s.n_levels},
        {"holdout_levels", s.holdout_levels},
        {"canvas", static_cast<int>(s.canvas)},
        {"coupling",
         {{"a", s.coupling.a}, {"b", s.coupling.b}, {"sigma", s.coupling.sigma}}},
        {"degradation",
         {{"erode_steps", s.degradation.erode_steps},
          {"dilate_steps", s.degradation.dilate_steps},
          {"translate_dx", s.degradation.translate_dx},
          {"translate_dy", s.degradation.translate_dy},
          {"boundary_noise", s.degradation.boundary_noise},
          {"dropout", s.degradation.dropout}}},
        {"seeds", s.seeds}};
  }
  return doc.dump();
}

namespace {

std::vector<std::filesystem::path> list_pngs(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ValidationError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

std::string timestamp_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::vector<std::string> preamble_for(const RunConfig& config) {
  return {std::string("spe-version: ") + kVersion,
          "config: " + config_echo(config)};
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct PipelineParts {
  DatasetSplit split;
  AdapterRegistry registry;
  SegmenterPlugin plugin;
  CheckpointSeries series;
  std::vector<CheckpointRef> holdout;
  std::optional<SyntheticWorld> world;
};

PipelineParts build_pipeline(const RunConfig& config, std::uint64_t seed) {
  PipelineParts parts;
  if (config.synthetic) {
    const auto& syn = *config.synthetic;
    GeneratorConfig gen;
    gen.height = syn.canvas;
    gen.width = syn.canvas;
    parts.world.emplace(syn.n_shapes, gen, syn.degradation, seed);
    parts.split = parts.world->split();
    parts.registry = parts.world->adapters();
    parts.plugin = parts.world->reference_plugin(syn.coupling);
    parts.series = parts.world->series(syn.n_levels);
    parts.holdout = parts.world->holdout_checkpoints(syn.holdout_levels);
  } else {
    if (config.manifest.empty())
      throw ValidationError(
          "config needs either a dataset manifest or a synthetic block");
    parts.split = load_dataset(config.manifest,
                               parse_conversion(config.gray_conversion));
    parts.registry = default_adapters();
    if (config.plugin_cmd.empty())
      throw ValidationError("config needs plugin_cmd for the reference "
                            "segmenter (or a synthetic block)");
    parts.plugin =
        make_external_plugin(config.plugin_cmd, config.plugin_timeout_sec);
    parts.series.checkpoints = config.checkpoints;
  }
  return parts;
}

FitFamily resolve_family(const RunConfig& config, const PairSet& psi,
                         MetricId metric) {
  if (config.fit_family == "auto") return select_family(psi, metric);
  return parse_family(config.fit_family);
}

CalibrationArtifact assemble_artifact(const RunConfig& config,
                                      std::uint64_t seed, MetricId metric,
                                      const MappingFunction& mapping,
                                      PairSet psi, const CollectAudit& audit,
                                      const std::string& plugin_id) {
  CalibrationArtifact artifact;
  artifact.metric = metric;
  artifact.mapping = mapping;
  artifact.pair_set = std::move(psi);
  artifact.protocol.support_size = config.support_size;
  artifact.protocol.n_repeats = config.n_repeats;
  artifact.protocol.seed = seed;
  artifact.protocol.train_cap = config.train_cap;
  artifact.protocol.plugin_id = plugin_id;
  artifact.protocol.checkpoint_hashes = audit.checkpoint_hashes;
  artifact.reference_hashes = audit.reference_hashes;
  artifact.created_at = config.stamp ? timestamp_now() : "";
  artifact.toolkit_version = kVersion;
  artifact.config_echo = config_echo(config);
  return artifact;
}

}  // namespace

namespace {

std::string metrics_args_echo(const MetricsArgs& args) {
  json doc;
  doc["pred_dir"] = args.pred_dir.string();
  doc["gt_dir"] = args.gt_dir.string();
  json metrics = json::array();
  for (const MetricId m : args.metrics) metrics.push_back(to_string(m));
  doc["metrics"] = metrics;
  doc["out_dir"] = args.out_dir.string();
  return doc.dump();
}

}  // namespace

void cmd_metrics(const MetricsArgs& args) {
  const auto preds = list_pngs(args.pred_dir);
  const auto gts = list_pngs(args.gt_dir);

  std::set<std::string> pred_names, gt_names;
  for (const auto& p : preds) pred_names.insert(p.filename().string());
  for (const auto& p : gts) gt_names.insert(p.filename().string());
  if (pred_names != gt_names) {
    std::string msg = "prediction/ground-truth filenames do not match;";
    for (const auto& n : pred_names)
      if (!gt_names.count(n)) msg += " only-in-pred: " + n;
    for (const auto& n : gt_names)
      if (!pred_names.count(n)) msg += " only-in-gt: " + n;
    throw ValidationError(msg);
  }
  if (preds.empty()) throw ValidationError("no .png files to evaluate");

  std::vector<Mask> pred_masks, gt_masks;
  std::vector<std::string> ids;
  for (const auto& name : pred_names) {
    pred_masks.push_back(png::read_mask(args.pred_dir / name));
    gt_masks.push_back(png::read_mask(args.gt_dir / name));
    ids.push_back(name);
  }

  std::filesystem::create_directories(args.out_dir);
  std::ofstream summary(args.out_dir / "summary.csv", std::ios::binary);
  if (!summary)
    throw IoError("cannot write " + (args.out_dir / "summary.csv").string());
  summary << "# spe-version: " << kVersion << "\n";
  summary << "# config: " << metrics_args_echo(args) << "\n";
  summary << "metric,mean,n_defined,n\n";

  for (const MetricId metric : args.metrics) {
    const SetScore score = evaluate_set(metric, pred_masks, gt_masks);
    if (!score.defined())
      throw UndefinedMetricError("set score undefined for metric '" +
                                 to_string(metric) + "'");
    const auto csv_path = args.out_dir / (to_string(metric) + ".csv");
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    csv << "# spe-version: " << kVersion << "\n";
    csv << "# config: " << metrics_args_echo(args) << "\n";
    csv << "id,value,defined\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const MetricValue& v = score.per_image[i];
      csv << ids[i] << ',' << fmt6(v.defined ? v.value : 0.0) << ','
          << (v.defined ? 1 : 0) << "\n";
    }
    summary << to_string(metric) << ',' << fmt6(score.mean) << ','
            << score.n_defined << ',' << score.per_image.size() << "\n";
    std::cout << to_string(metric) << ": mean=" << fmt6(score.mean)
              << " n_defined=" << score.n_defined << "/" << ids.size()
              << "\n";
  }
}

void cmd_calibrate(const RunConfig& config) {
  RunConfig effective = config;
  if (effective.metrics.empty()) effective.metrics = {MetricId::dice};

  PipelineParts parts = build_pipeline(effective, effective.seed);
  CollectOptions options;
  options.support_size = effective.support_size;
  options.n_repeats = effective.n_repeats;
  options.seed = effective.seed;
  options.train_cap = effective.train_cap;
  options.workers = resolve_workers(effective.workers);

  CollectAudit audit;
  auto pair_sets =
      collect_pairs_multi(parts.registry, parts.series, parts.split,
                          parts.plugin, effective.metrics, options, &audit);

  const auto out_root = std::filesystem::path(effective.out_dir);
  if (effective.synthetic && !parts.split.extra_test.empty()) {
    // Export the extra cohort as an unlabeled directory so the estimate
    // command can be pointed at it.
    const auto unlabeled_dir = out_root / "extra_unlabeled";
    std::filesystem::create_directories(unlabeled_dir);
    for (std::size_t i = 0; i < parts.split.extra_test.size(); ++i)
      png::write_image8(unlabeled_dir / wire::frame_name(i),
                        parts.split.extra_test[i].image);
  }
  for (const MetricId metric : effective.metrics) {
    PairSet& psi = pair_sets.at(metric);
    const FitFamily family = resolve_family(effective, psi, metric);
    const MappingFunction mapping = fit_mapping(psi, family);

    const auto metric_dir = out_root / to_string(metric);
    std::filesystem::create_directories(metric_dir);
    emit_report(psi, mapping, {}, metric_dir, preamble_for(effective));
    const CalibrationArtifact artifact =
        assemble_artifact(effective, effective.seed, metric, mapping,
                          std::move(psi), audit, parts.plugin.id);
    save_artifact(artifact, metric_dir / "artifact.json");

    std::cout << to_string(metric) << ": family=" << to_string(family)
              << " a=" << mapping.a << " b=" << mapping.b
              << " sse=" << mapping.residual_sse
              << " K=" << artifact.pair_set.size() << "\n";
  }
}

void cmd_estimate(const RunConfig& config,
                  const std::filesystem::path& artifact_path,
                  const std::filesystem::path& unlabeled_dir) {
  RunConfig effective = config;
  if (!std::filesystem::exists(artifact_path))
    throw IoError("artifact file not found: " + artifact_path.string());
  const CalibrationArtifact artifact = load_artifact(artifact_path);

  if (!effective.metrics.empty() &&
      std::find(effective.metrics.begin(), effective.metrics.end(),
                artifact.metric) == effective.metrics.end())
    throw ArtifactMismatchError("artifact holds metric '" +
                                to_string(artifact.metric) +
                                "' but the run requests a different one");

  PipelineParts parts = build_pipeline(effective, effective.seed);
  if (!effective.deployed)
    throw ValidationError("config needs a 'deployed' checkpoint to estimate");

  std::vector<Image> unlabeled;
  for (const auto& path : list_pngs(unlabeled_dir)) {
    Image img = png::read_image(path,
                                parse_conversion(effective.gray_conversion));
    // Synthetic worlds own their intensity scale; real rasters are
    // normalized like any ingested image.
    if (!effective.synthetic) img = normalize_minmax(img);
    unlabeled.push_back(std::move(img));
  }
  if (unlabeled.empty())
    throw ValidationError("no .png images in " + unlabeled_dir.string());

  EstimateOptions est_options;
  est_options.workers = resolve_workers(effective.workers);
  const EstimationResult result = estimate_unlabeled(
      parts.registry, *effective.deployed, unlabeled, parts.split.train,
      parts.plugin, artifact, effective.seed, est_options);

  std::filesystem::create_directories(effective.out_dir);
  json doc;
  doc["metric"] = to_string(result.metric);
  doc["phi_pseudo"] = result.phi_pseudo;
  doc["phi_estimated"] = result.phi_estimated;
  doc["clamped"] = result.clamped;
  doc["extrapolated"] = result.extrapolated;
  doc["n_unlabeled"] = result.n_unlabeled;
  doc["repeat_values"] = result.repeat_values;
  doc["support_size"] = result.support_size;
  doc["n_repeats"] = result.n_repeats;
  doc["seed"] = result.seed;
  doc["protocol_overridden"] = result.protocol_overridden;
  doc["artifact"] = artifact_path.string();
  doc["toolkit_version"] = kVersion;
  doc["config"] = config_echo(effective);
  const auto out_path =
      std::filesystem::path(effective.out_dir) / "estimate.json";
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_path.string());
  out << doc.dump(2) << "\n";

  std::cout << to_string(result.metric) << ": phi_pseudo="
            << fmt6(result.phi_pseudo)
            << " phi_estimated=" << fmt6(result.phi_estimated)
            << (result.extrapolated ? " [extrapolated]" : "")
            << (result.clamped ? " [clamped]" : "") << "\n";
}

namespace {

struct DemoCell {
  double mae = 0.0;
  std::optional<double> corr;
};

std::string corr_str(const std::optional<double>& corr) {
  return corr ? fmt6(*corr) : "--";
}

}  // namespace

void cmd_synth_demo(const RunConfig& config) {
  RunConfig effective = config;
  if (!effective.synthetic) effective.synthetic = SyntheticConfig{};
  if (effective.metrics.empty()) effective.metrics = all_metrics();
  std::vector<std::uint64_t> seeds = effective.synthetic->seeds;
  if (seeds.empty()) seeds = {effective.seed};
  effective.synthetic->seeds = seeds;

  const auto out_root = std::filesystem::path(effective.out_dir);
  std::filesystem::create_directories(out_root);
  const auto preamble = preamble_for(effective);

  // seed -> metric -> holdout meta score
  std::map<std::uint64_t, std::map<MetricId, DemoCell>> table;

  for (const std::uint64_t seed : seeds) {
    PipelineParts parts = build_pipeline(effective, seed);
    const auto seed_dir = out_root / ("seed_" + std::to_string(seed));

    // A few world samples so the run is inspectable.
    const auto samples_dir = seed_dir / "world_samples";
    std::filesystem::create_directories(samples_dir);
    const auto& train = parts.split.train;
    for (std::size_t i = 0; i < std::min<std::size_t>(8, train.size()); ++i) {
      png::write_image8(samples_dir / ("image" + wire::frame_name(i)),
                        train[i].image);
      png::write_mask(samples_dir / ("label" + wire::frame_name(i)),
                      train[i].label);
    }

    CollectOptions options;
    options.support_size = effective.support_size;
    options.n_repeats = effective.n_repeats;
    options.seed = seed;
    options.train_cap = effective.train_cap;
    options.workers = resolve_workers(effective.workers);

    CollectAudit audit;
    auto pair_sets =
        collect_pairs_multi(parts.registry, parts.series, parts.split,
                            parts.plugin, effective.metrics, options, &audit);

    // Real holdout scores come from the extra-test labels the estimator
    // never sees.
    std::vector<Image> extra_images;
    std::vector<Mask> extra_labels;
    for (const auto& pair : parts.split.extra_test) {
      extra_images.push_back(pair.image);
      extra_labels.push_back(pair.label);
    }
    if (extra_images.empty())
      throw ValidationError("synthetic world has no extra-test cohort");

    for (const MetricId metric : effective.metrics) {
      PairSet& psi = pair_sets.at(metric);
      const FitFamily family = resolve_family(effective, psi, metric);
      const MappingFunction mapping = fit_mapping(psi, family);

      const auto metric_dir = seed_dir / to_string(metric);
      std::filesystem::create_directories(metric_dir);

      CalibrationArtifact artifact =
          assemble_artifact(effective, seed, metric, mapping, psi, audit,
                            parts.plugin.id);
      save_artifact(artifact, metric_dir / "artifact.json");

      std::vector<HoldoutPoint> holdout_points;
      for (const CheckpointRef& deployed : parts.holdout) {
        const EstimationResult est = estimate_unlabeled(
            parts.registry, deployed, extra_images, parts.split.train,
            parts.plugin, artifact,
            rng::mix(seed, 0x7e, static_cast<std::uint64_t>(deployed.epoch)));
        const std::vector<Mask> extra_preds =
            predict_under_test(parts.registry, deployed, extra_images);
        const SetScore real =
            evaluate_set(metric, extra_preds, extra_labels);
        if (!real.defined())
          throw CalibrationError("holdout real score undefined for metric '" +
                                 to_string(metric) + "'");
        holdout_points.push_back(
            HoldoutPoint{deployed.epoch, est.phi_pseudo, real.mean});
      }

      emit_report(psi, mapping, holdout_points, metric_dir, preamble);

      std::vector<double> real_values, est_values;
      for (const auto& h : holdout_points) {
        const double pseudo = round6(h.phi_pseudo);
        real_values.push_back(round6(h.phi_real));
        est_values.push_back(round6(apply_mapping(mapping, pseudo)));
      }
      const MetaScore score = meta_score(metric, real_values, est_values);
      table[seed][metric] = DemoCell{score.mae, score.corr};
    }
  }

  // Table in the MAE | Corr layout, one row per seed plus Mean/STD rows.
  std::vector<std::string> row_names;
  std::map<std::string, std::map<MetricId, DemoCell>> rows;
  for (const std::uint64_t seed : seeds) {
    const std::string name = "seed " + std::to_string(seed);
    row_names.push_back(name);
    rows[name] = table[seed];
  }
  if (seeds.size() > 1) {
    std::map<MetricId, DemoCell> mean_row, std_row;
    for (const MetricId metric : effective.metrics) {
      std::vector<double> maes, corrs;
      for (const std::uint64_t seed : seeds) {
        maes.push_back(table[seed][metric].mae);
        if (table[seed][metric].corr)
          corrs.push_back(*table[seed][metric].corr);
      }
      const auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (const double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      const auto std_of = [&](const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean_of(v);
        double s = 0.0;
        for (const double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(v.size() - 1));
      };
      mean_row[metric] =
          DemoCell{mean_of(maes), corrs.empty()
                                      ? std::nullopt
                                      : std::optional<double>(mean_of(corrs))};
      std_row[metric] =
          DemoCell{std_of(maes), corrs.size() < 2
                                     ? std::nullopt
                                     : std::optional<double>(std_of(corrs))};
    }
    row_names.push_back("Mean");
    rows["Mean"] = mean_row;
    row_names.push_back("STD");
    rows["STD"] = std_row;
  }

  // Long-format CSV plus an aligned text table.
  {
    std::ofstream csv(out_root / "table.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write " + (out_root / "table.csv").string());
    for (const auto& line : preamble) csv << "# " << line << "\n";
    csv << "row,metric,mae,corr\n";
    for (const auto& name : row_names)
      for (const MetricId metric : effective.metrics)
        csv << name << ',' << to_string(metric) << ','
            << fmt6(rows[name][metric].mae) << ','
            << corr_str(rows[name][metric].corr) << "\n";
  }
  {
    std::ostringstream txt;
    txt << "Holdout estimation accuracy (MAE / Corr per metric)\n";
    txt << std::left << std::setw(14) << "row";
    for (const MetricId metric : effective.metrics)
      txt << std::setw(12) << (to_string(metric) + " MAE") << std::setw(12)
          << (to_string(metric) + " Corr");
    txt << "\n";
    for (const auto& name : row_names) {
      txt << std::left << std::setw(14) << name;
      for (const MetricId metric : effective.metrics)
        txt << std::setw(12) << fmt6(rows[name][metric].mae) << std::setw(12)
            << corr_str(rows[name][metric].corr);
      txt << "\n";
    }
    std::ofstream out(out_root / "table.txt", std::ios::binary);
    if (!out) throw IoError("cannot write " + (out_root / "table.txt").string());
    for (const auto& line : preamble) out << "# " << line << "\n";
    out << txt.str();
    std::cout << txt.str();
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UndefinedMetricError*>(&e)) return 3;
  if (dynamic_cast<const ArtifactMismatchError*>(&e)) return 4;
  if (dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const IngestionError*>(&e) ||
      dynamic_cast<const ParseError*>(&e))
    return 2;
  return 1;
}

}  // namespace spe
