#include "spe/meta_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "spe/estimator.hpp"

namespace spe {

double mean_absolute_error(std::span<const double> real_values,
                           std::span<const double> estimated) {
  if (real_values.empty())
    throw ValidationError("mean_absolute_error: empty input");
  if (real_values.size() != estimated.size())
    throw ValidationError("mean_absolute_error: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < real_values.size(); ++i)
    sum += std::abs(real_values[i] - estimated[i]);
  return sum / static_cast<double>(real_values.size());
}

double correlation(std::span<const double> real_values,
                   std::span<const double> estimated) {
  if (real_values.size() != estimated.size())
    throw ValidationError("correlation: length mismatch");
  const std::size_t n = real_values.size();
  if (n < 2) throw ValidationError("correlation needs at least two pairs");

  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += real_values[i];
    mean_b += estimated[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);

  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = real_values[i] - mean_a;
    const double db = estimated[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw ValidationError("correlation undefined for constant input");
  return sab / std::sqrt(saa * sbb);
}

MetaScore meta_score(MetricId metric, std::span<const double> real_values,
                     std::span<const double> estimated) {
  MetaScore score;
  score.metric = metric;
  score.n = real_values.size();
  score.mae = mean_absolute_error(real_values, estimated);
  try {
    score.corr = correlation(real_values, estimated);
  } catch (const ValidationError&) {
    score.corr = std::nullopt;
  }
  return score;
}

double round6(double v) {
  return std::round(v * 1e6) / 1e6;
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct ReportRow {
  int epoch;
  double phi_pseudo;
  double phi_real;
  double phi_estimated;
  const char* cohort;
};

nlohmann::json score_json(const MetaScore& s) {
  nlohmann::json j;
  j["mae"] = s.mae;
  j["n"] = s.n;
  if (s.corr)
    j["correlation"] = *s.corr;
  else
    j["correlation"] = nullptr;
  return j;
}

}  // namespace

ReportFiles emit_report(const PairSet& psi, const MappingFunction& mapping,
                        const std::vector<HoldoutPoint>& holdout,
                        const std::filesystem::path& out_dir,
                        const std::vector<std::string>& preamble) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  // Canonical 6-decimal values: the CSV, the plot, and the summary scores all
  // derive from these, so re-parsing the CSV reproduces the scores exactly.
  std::vector<ReportRow> rows;
  for (const auto& p : psi.pairs) {
    const double pseudo = round6(p.phi_pseudo);
    rows.push_back(ReportRow{p.epoch, pseudo, round6(p.phi_real),
                             round6(apply_mapping(mapping, pseudo)),
                             "calibration"});
  }
  for (const auto& h : holdout) {
    const double pseudo = round6(h.phi_pseudo);
    rows.push_back(ReportRow{h.epoch, pseudo, round6(h.phi_real),
                             round6(apply_mapping(mapping, pseudo)),
                             "holdout"});
  }

  ReportFiles files;
  files.csv = out_dir / "report.csv";
  {
    std::ofstream csv(files.csv, std::ios::binary);
    if (!csv) throw IoError("cannot write " + files.csv.string());
    for (const auto& line : preamble) csv << "# " << line << "\n";
    csv << "epoch,phi_pseudo,phi_real,phi_estimated,abs_error,cohort\n";
    for (const auto& r : rows) {
      csv << r.epoch << ',' << fmt6(r.phi_pseudo) << ',' << fmt6(r.phi_real)
          << ',' << fmt6(r.phi_estimated) << ','
          << fmt6(round6(std::abs(r.phi_real - r.phi_estimated))) << ','
          << r.cohort << "\n";
    }
  }

  files.summary = out_dir / "summary.json";
  {
    nlohmann::json doc;
    doc["metric"] = to_string(psi.metric);
    doc["mapping"] = {{"family", to_string(mapping.family)},
                      {"a", mapping.a},
                      {"b", mapping.b},
                      {"residual_sse", mapping.residual_sse}};
    std::vector<double> cal_real, cal_est, hold_real, hold_est;
    for (const auto& r : rows) {
      if (std::string_view(r.cohort) == "calibration") {
        cal_real.push_back(r.phi_real);
        cal_est.push_back(r.phi_estimated);
      } else {
        hold_real.push_back(r.phi_real);
        hold_est.push_back(r.phi_estimated);
      }
    }
    doc["calibration"] = score_json(meta_score(psi.metric, cal_real, cal_est));
    if (!hold_real.empty())
      doc["holdout"] = score_json(meta_score(psi.metric, hold_real, hold_est));
    for (const auto& line : preamble) doc["preamble"].push_back(line);
    std::ofstream out(files.summary, std::ios::binary);
    if (!out) throw IoError("cannot write " + files.summary.string());
    out << doc.dump(2) << "\n";
  }

  files.plot = out_dir / "calibration_plot.svg";
  {
    // Plot domain: observed pseudo range over both cohorts.
    double x_lo = rows.front().phi_pseudo, x_hi = x_lo;
    double y_lo = rows.front().phi_real, y_hi = y_lo;
    for (const auto& r : rows) {
      x_lo = std::min({x_lo, r.phi_pseudo});
      x_hi = std::max({x_hi, r.phi_pseudo});
      y_lo = std::min({y_lo, r.phi_real, r.phi_estimated});
      y_hi = std::max({y_hi, r.phi_real, r.phi_estimated});
    }
    if (x_hi - x_lo < 1e-9) {
      x_lo -= 0.5;
      x_hi += 0.5;
    }
    if (y_hi - y_lo < 1e-9) {
      y_lo -= 0.5;
      y_hi += 0.5;
    }
    const double margin_x = 0.05 * (x_hi - x_lo);
    const double margin_y = 0.05 * (y_hi - y_lo);
    x_lo -= margin_x;
    x_hi += margin_x;
    y_lo -= margin_y;
    y_hi += margin_y;

    const double w = 640, h = 480, pad = 56;
    const auto sx = [&](double x) {
      return pad + (x - x_lo) / (x_hi - x_lo) * (w - 2 * pad);
    };
    const auto sy = [&](double y) {
      return h - pad - (y - y_lo) / (y_hi - y_lo) * (h - 2 * pad);
    };
    const auto fmt2 = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f", v);
      return std::string(buf);
    };

    std::ofstream svg(files.plot, std::ios::binary);
    if (!svg) throw IoError("cannot write " + files.plot.string());
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
        << "\" height=\"" << h << "\">\n";
    for (const auto& line : preamble) svg << "<!-- " << line << " -->\n";
    svg << "<rect width=\"" << w << "\" height=\"" << h
        << "\" fill=\"white\"/>\n";
    svg << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\""
        << w - 2 * pad << "\" height=\"" << h - 2 * pad
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    // Axis ticks and labels.
    for (int t = 0; t <= 4; ++t) {
      const double fx = x_lo + (x_hi - x_lo) * t / 4.0;
      const double fy = y_lo + (y_hi - y_lo) * t / 4.0;
      svg << "<text x=\"" << fmt2(sx(fx)) << "\" y=\"" << fmt2(h - pad + 20)
          << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt2(fx)
          << "</text>\n";
      svg << "<text x=\"" << fmt2(pad - 8) << "\" y=\"" << fmt2(sy(fy) + 4)
          << "\" font-size=\"11\" text-anchor=\"end\">" << fmt2(fy)
          << "</text>\n";
    }
    svg << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
        << "\" font-size=\"13\" text-anchor=\"middle\">pseudo "
        << to_string(psi.metric) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << h / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
           "16 "
        << h / 2 << ")\">real " << to_string(psi.metric) << "</text>\n";

    // Fitted curve, 200 samples over the observed pseudo range.
    double curve_lo = x_lo, curve_hi = x_hi;
    if (mapping.family == FitFamily::log_linear)
      curve_lo = std::max(curve_lo, 1e-9);
    svg << "<polyline fill=\"none\" stroke=\"#cc2222\" stroke-width=\"1.5\" "
           "points=\"";
    for (int i = 0; i < 200; ++i) {
      const double x = curve_lo + (curve_hi - curve_lo) * i / 199.0;
      const double y =
          std::clamp(apply_mapping(mapping, x), y_lo - (y_hi - y_lo),
                     y_hi + (y_hi - y_lo));
      svg << fmt2(sx(x)) << ',' << fmt2(sy(y)) << ' ';
    }
    svg << "\"/>\n";

    for (const auto& r : rows) {
      const bool hold = std::string_view(r.cohort) == "holdout";
      svg << "<circle cx=\"" << fmt2(sx(r.phi_pseudo)) << "\" cy=\""
          << fmt2(sy(r.phi_real)) << "\" r=\"3.5\" fill=\""
          << (hold ? "#ee8800" : "#2266bb") << "\" fill-opacity=\"0.85\"/>\n";
    }
    svg << "</svg>\n";
  }
  return files;
}

}  // namespace spe
