#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spe/calibration.hpp"

namespace spe {

/// (1/K) * sum |real - estimated|. Lists must be nonempty, equal length.
double mean_absolute_error(std::span<const double> real_values,
                           std::span<const double> estimated);

/// Sample Pearson correlation. Needs length >= 2 and nonconstant inputs.
double correlation(std::span<const double> real_values,
                   std::span<const double> estimated);

/// Accuracy of the estimator itself over matched (real, estimated) pairs.
struct MetaScore {
  MetricId metric = MetricId::dice;
  double mae = 0.0;
  std::optional<double> corr;  // absent when n < 2 or inputs constant
  std::size_t n = 0;
};

MetaScore meta_score(MetricId metric, std::span<const double> real_values,
                     std::span<const double> estimated);

/// A point never used in fitting, evaluated through the frozen mapping.
struct HoldoutPoint {
  int epoch = 0;
  double phi_pseudo = 0.0;
  double phi_real = 0.0;
};

struct ReportFiles {
  std::filesystem::path csv;
  std::filesystem::path plot;
  std::filesystem::path summary;
};

/// Writes report.csv (one row per calibration pair and holdout point, all
/// values rounded to the canonical 6 decimals), calibration_plot.svg
/// (scatter + fitted curve sampled at 200 points + holdout points), and
/// summary.json (per-cohort MetaScore computed on the canonical values, so
/// re-deriving the scores from the CSV is exact). `preamble` lines are
/// embedded as '#' comments ahead of the CSV header.
ReportFiles emit_report(const PairSet& psi, const MappingFunction& mapping,
                        const std::vector<HoldoutPoint>& holdout,
                        const std::filesystem::path& out_dir,
                        const std::vector<std::string>& preamble = {});

/// Canonical report rounding (6 decimal places, away-from-zero ties).
double round6(double v);

}  // namespace spe
