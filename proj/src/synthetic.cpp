#include "spe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "spe/metrics.hpp"
#include "spe/morphology.hpp"
#include "spe/png_io.hpp"
#include "spe/rng.hpp"

namespace spe {
namespace {

constexpr std::uint64_t kTagShape = 0x51;
constexpr std::uint64_t kTagCurve = 0x9c;
constexpr std::uint64_t kTagCurveCheck = 0xf0;
constexpr std::uint64_t kTagUnderTest = 0xad;
constexpr std::uint64_t kTagReferencePred = 0xcf;
constexpr std::uint64_t kTagReferenceNoise = 0xee;

Mask ellipse_blob(const GeneratorConfig& cfg, rng::Engine& eng) {
  const double h = static_cast<double>(cfg.height);
  const double w = static_cast<double>(cfg.width);
  const double cy = eng.uniform(0.32, 0.68) * h;
  const double cx = eng.uniform(0.32, 0.68) * w;
  const double semi_b = eng.uniform(cfg.min_axis_frac, cfg.max_axis_frac) * h;
  const double semi_a = eng.uniform(cfg.min_axis_frac, cfg.max_axis_frac) * w;
  const double theta = eng.uniform(0.0, std::numbers::pi);

  // Radial perturbation turns the ellipse into an organic blob.
  double amp[4], phase[4];
  for (int k = 0; k < 4; ++k) {
    amp[k] = eng.uniform(0.0, 0.12 / std::sqrt(static_cast<double>(k + 2)));
    phase[k] = eng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  Mask mask(cfg.height, cfg.width);
  for (Eigen::Index y = 0; y < cfg.height; ++y) {
    for (Eigen::Index x = 0; x < cfg.width; ++x) {
      const double dy = static_cast<double>(y) - cy;
      const double dx = static_cast<double>(x) - cx;
      const double u = (dx * cos_t + dy * sin_t) / semi_a;
      const double v = (-dx * sin_t + dy * cos_t) / semi_b;
      const double r = std::sqrt(u * u + v * v);
      const double angle = std::atan2(v, u);
      double boundary = 1.0;
      for (int k = 0; k < 4; ++k)
        boundary += amp[k] * std::cos((k + 2) * angle + phase[k]);
      mask(y, x) = r <= boundary;
    }
  }
  return mask;
}

Image shape_image(const Mask& mask, rng::Engine& eng) {
  const Eigen::Index rows = mask.rows();
  const Eigen::Index cols = mask.cols();

  // Low-frequency value noise: a coarse normal grid upsampled bilinearly.
  constexpr Eigen::Index kCoarse = 9;
  Eigen::ArrayXXd coarse(kCoarse, kCoarse);
  for (Eigen::Index i = 0; i < kCoarse; ++i)
    for (Eigen::Index j = 0; j < kCoarse; ++j)
      coarse(i, j) = 0.10 * eng.normal();

  Image img(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    const double fy = rows > 1 ? static_cast<double>(y) /
                                     static_cast<double>(rows - 1) *
                                     (kCoarse - 1)
                               : 0.0;
    const Eigen::Index y0 = static_cast<Eigen::Index>(fy);
    const Eigen::Index y1 = std::min(y0 + 1, kCoarse - 1);
    const double wy = fy - static_cast<double>(y0);
    for (Eigen::Index x = 0; x < cols; ++x) {
      const double fx = cols > 1 ? static_cast<double>(x) /
                                       static_cast<double>(cols - 1) *
                                       (kCoarse - 1)
                                 : 0.0;
      const Eigen::Index x0 = static_cast<Eigen::Index>(fx);
      const Eigen::Index x1 = std::min(x0 + 1, kCoarse - 1);
      const double wx = fx - static_cast<double>(x0);
      const double noise =
          (1.0 - wy) * ((1.0 - wx) * coarse(y0, x0) + wx * coarse(y0, x1)) +
          wy * ((1.0 - wx) * coarse(y1, x0) + wx * coarse(y1, x1));
      const double base = mask(y, x) ? 0.70 : 0.30;
      const double v = base + noise + 0.02 * eng.normal();
      // Quantize so the image survives 8-bit file round trips bit-exactly.
      img(y, x) = static_cast<float>(quantize8(static_cast<float>(v))) / 255.0f;
    }
  }
  return img;
}

}  // namespace

std::vector<LabeledPair> generate_shapes(std::size_t n,
                                         const GeneratorConfig& config,
                                         std::uint64_t seed) {
  if (n < 1) throw ValidationError("generate_shapes: n must be positive");
  const auto canvas = static_cast<double>(config.height * config.width);
  std::vector<LabeledPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    rng::Engine eng(rng::mix(seed, kTagShape, i));
    Mask mask;
    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
      mask = ellipse_blob(config, eng);
      const double frac = static_cast<double>(mask.count()) / canvas;
      accepted = mask.count() >= config.min_foreground &&
                 frac >= config.fg_frac_min && frac <= config.fg_frac_max;
    }
    if (!accepted)
      throw HarnessError("shape generation failed to meet foreground bounds");
    LabeledPair pair;
    pair.label = mask;
    pair.image = shape_image(mask, eng);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "shape-%04zu", i);
    pair.id = buf;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

namespace {

// Pixel-indexed uniform draw: flips are nested as probability grows and do
// not depend on scan order.
double pixel_uniform(std::uint64_t seed, std::uint64_t tag, Eigen::Index y,
                     Eigen::Index x) {
  std::uint64_t h = rng::mix(seed, tag, static_cast<std::uint64_t>(y),
                             static_cast<std::uint64_t>(x));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

namespace {

// Randomized rounding of a scaled integer parameter. The dither draw is a
// pure function of (seed, tag), so for a fixed seed the result is monotone
// in x and the population-mean corruption is smooth in the level.
int dithered(double x, std::uint64_t seed, std::uint64_t tag) {
  const double fl = std::floor(x);
  int value = static_cast<int>(fl);
  const double frac = x - fl;
  if (frac > 0.0) {
    const double u =
        static_cast<double>(rng::mix(seed, 0xD17, tag) >> 11) * 0x1.0p-53;
    if (u < frac) ++value;
  }
  return value;
}

int dithered_signed(double magnitude, int sign, std::uint64_t seed,
                    std::uint64_t tag) {
  return sign * dithered(magnitude, seed, tag);
}

}  // namespace

Mask degrade(const Mask& mask, const DegradationSpec& spec) {
  if (spec.level < 0.0 || spec.level > 1.0)
    throw ValidationError("degradation level must be in [0, 1]");
  if (spec.level == 0.0) return mask;

  const double level = spec.level;
  const auto& p = spec.params;
  Mask out = mask;

  const int erode_steps =
      dithered(level * p.erode_steps, spec.seed, 1);
  if (erode_steps > 0) out = erode(out, erode_steps);

  const int dilate_steps =
      dithered(level * p.dilate_steps, spec.seed, 2);
  if (dilate_steps > 0) out = dilate(out, dilate_steps);

  const int dx = dithered_signed(level * std::abs(p.translate_dx),
                                 p.translate_dx < 0 ? -1 : 1, spec.seed, 3);
  const int dy = dithered_signed(level * std::abs(p.translate_dy),
                                 p.translate_dy < 0 ? -1 : 1, spec.seed, 4);
  if (dx != 0 || dy != 0) out = translate(out, dy, dx);

  const double flip_p = level * p.boundary_noise;
  if (flip_p > 0.0) {
    const Mask band = boundary_band(out);
    for (Eigen::Index y = 0; y < out.rows(); ++y)
      for (Eigen::Index x = 0; x < out.cols(); ++x)
        if (band(y, x) && pixel_uniform(spec.seed, 0xB0, y, x) < flip_p)
          out(y, x) = !out(y, x);
  }

  const double drop_p = level * p.dropout;
  if (drop_p > 0.0) {
    for (Eigen::Index y = 0; y < out.rows(); ++y)
      for (Eigen::Index x = 0; x < out.cols(); ++x)
        if (out(y, x) && pixel_uniform(spec.seed, 0xD0, y, x) < drop_p)
          out(y, x) = false;
  }
  return out;
}

double QualityCurve::invert(double target_dice) const {
  const double lo = envelope.back();
  const double hi = envelope.front();
  const double t = std::clamp(target_dice, lo, hi);
  // envelope is strictly decreasing over ascending levels.
  for (std::size_t i = 0; i + 1 < envelope.size(); ++i) {
    if (t <= envelope[i] && t >= envelope[i + 1]) {
      const double span = envelope[i] - envelope[i + 1];
      const double w = span > 0.0 ? (envelope[i] - t) / span : 0.0;
      return levels[i] + w * (levels[i + 1] - levels[i]);
    }
  }
  return levels.back();
}

QualityCurve build_quality_curve(std::span<const double> levels,
                                 std::span<const LabeledPair> probes,
                                 const DegradationParams& params,
                                 std::uint64_t seed) {
  if (levels.size() < 5)
    throw ValidationError("quality curve needs at least 5 grid points");
  if (probes.empty()) throw ValidationError("quality curve needs probe pairs");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0.0 || levels[i] > 1.0)
      throw ValidationError("quality curve levels must lie in [0, 1]");
    if (i > 0 && levels[i] <= levels[i - 1])
      throw ValidationError("quality curve levels must be ascending");
  }

  const auto population_dice = [&](double level, std::uint64_t tag) {
    double sum = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      DegradationSpec spec;
      spec.level = level;
      spec.params = params;
      // Common random numbers per probe across levels.
      spec.seed = rng::mix(seed, tag, i);
      sum += dice(degrade(probes[i].label, spec), probes[i].label).value;
    }
    return sum / static_cast<double>(probes.size());
  };

  QualityCurve curve;
  curve.levels.assign(levels.begin(), levels.end());
  for (const double level : levels)
    curve.mean_dice.push_back(population_dice(level, kTagCurve));

  // Tolerate tiny Monte-Carlo rises; anything more means the operator mix is
  // misconfigured.
  constexpr double kMonotoneTolerance = 0.01;
  for (std::size_t i = 1; i < curve.mean_dice.size(); ++i) {
    if (curve.mean_dice[i] > curve.mean_dice[i - 1] + kMonotoneTolerance)
      throw HarnessError("quality curve is not monotone decreasing at level " +
                         std::to_string(curve.levels[i]));
  }
  curve.monotone = true;

  curve.envelope = curve.mean_dice;
  for (std::size_t i = 1; i < curve.envelope.size(); ++i)
    curve.envelope[i] =
        std::min(curve.envelope[i], curve.envelope[i - 1] - 1e-9);

  // Inversion check: independent forward pass at interior targets.
  const double t_lo = std::max(0.2, curve.min_dice() + 0.01);
  const double t_hi = std::min(0.98, curve.max_dice());
  double worst = 0.0;
  if (t_hi > t_lo) {
    for (int i = 0; i < 10; ++i) {
      const double target = t_lo + (t_hi - t_lo) * i / 9.0;
      const double achieved =
          population_dice(curve.invert(target), kTagCurveCheck);
      worst = std::max(worst, std::abs(target - achieved));
    }
  }
  curve.inversion_tolerance = worst;
  return curve;
}

struct SyntheticWorld::State {
  GeneratorConfig config;
  DegradationParams params;
  std::uint64_t seed = 0;
  DatasetSplit split;
  std::map<std::uint64_t, Mask> gt_by_digest;
  QualityCurve curve;
};

SyntheticWorld::SyntheticWorld(std::size_t n_shapes,
                               const GeneratorConfig& config,
                               const DegradationParams& params,
                               std::uint64_t seed) {
  if (n_shapes < 10)
    throw ValidationError("synthetic world needs at least 10 shapes");
  auto state = std::make_shared<State>();
  state->config = config;
  state->params = params;
  state->seed = seed;

  const std::vector<LabeledPair> pairs =
      generate_shapes(n_shapes, config, seed);
  const std::size_t n_train = n_shapes / 2;
  const std::size_t n_test = (n_shapes * 3) / 10;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i < n_train)
      state->split.train.push_back(pairs[i]);
    else if (i < n_train + n_test)
      state->split.test.push_back(pairs[i]);
    else
      state->split.extra_test.push_back(pairs[i]);
  }
  for (const auto& pair : pairs)
    state->gt_by_digest.emplace(image_digest(pair.image), pair.label);

  // Probe population: a train-split prefix.
  const std::size_t n_probes = std::min<std::size_t>(100, n_train);
  std::vector<LabeledPair> probes(state->split.train.begin(),
                                  state->split.train.begin() +
                                      static_cast<std::ptrdiff_t>(n_probes));
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  state->curve =
      build_quality_curve(grid, probes, params, rng::mix(seed, kTagCurve));

  state_ = std::move(state);
}

const DatasetSplit& SyntheticWorld::split() const { return state_->split; }
const QualityCurve& SyntheticWorld::curve() const { return state_->curve; }
const DegradationParams& SyntheticWorld::params() const {
  return state_->params;
}
std::uint64_t SyntheticWorld::seed() const { return state_->seed; }

const Mask* SyntheticWorld::hidden_gt(std::uint64_t digest) const {
  const auto it = state_->gt_by_digest.find(digest);
  return it == state_->gt_by_digest.end() ? nullptr : &it->second;
}

namespace {

std::string level_locator(double level) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "level=%.17g", level);
  return buf;
}

double parse_level(const std::string& locator) {
  if (locator.rfind("level=", 0) != 0)
    throw HarnessError("synthetic checkpoint locator must be 'level=<x>'");
  return std::stod(locator.substr(6));
}

}  // namespace

CheckpointSeries SyntheticWorld::series(int n_levels) const {
  if (n_levels < 2)
    throw ValidationError("synthetic series needs at least 2 levels");
  CheckpointSeries series;
  for (int i = 0; i < n_levels; ++i) {
    // Corruption falls as the epoch grows, mimicking training progress.
    const double level =
        1.0 - static_cast<double>(i) / static_cast<double>(n_levels - 1);
    series.checkpoints.push_back(
        CheckpointRef{"synthetic", 5 * (i + 1), level_locator(level)});
  }
  return series;
}

std::vector<CheckpointRef> SyntheticWorld::holdout_checkpoints(int n) const {
  if (n < 1) throw ValidationError("need at least one holdout checkpoint");
  std::vector<CheckpointRef> ckpts;
  for (int j = 0; j < n; ++j) {
    // Levels off the series grid, spanning the calibrated quality range.
    const double level =
        0.1 + 0.8 * (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    ckpts.push_back(
        CheckpointRef{"synthetic", 1000 + j, level_locator(level)});
  }
  return ckpts;
}

AdapterRegistry SyntheticWorld::adapters() const {
  AdapterRegistry registry = default_adapters();
  auto state = state_;
  registry.add(
      "synthetic",
      [state](const CheckpointRef& ckpt, const std::vector<Image>& images) {
        const double level = parse_level(ckpt.locator);
        std::vector<Mask> preds;
        preds.reserve(images.size());
        for (const auto& img : images) {
          const std::uint64_t digest = image_digest(img);
          const auto it = state->gt_by_digest.find(digest);
          if (it == state->gt_by_digest.end())
            throw HarnessError(
                "synthetic adapter queried with an unknown image");
          DegradationSpec spec;
          spec.level = level;
          spec.params = state->params;
          spec.seed = rng::mix(state->seed, kTagUnderTest,
                               static_cast<std::uint64_t>(ckpt.epoch), digest);
          preds.push_back(degrade(it->second, spec));
        }
        return preds;
      });
  return registry;
}

SegmenterPlugin SyntheticWorld::reference_plugin(
    const CouplingSpec& coupling) const {
  auto state = state_;
  SegmenterPlugin plugin;
  plugin.kind = SegmenterPlugin::Kind::builtin;
  plugin.id = "builtin-synthetic";
  plugin.handler = [state, coupling](const std::filesystem::path& workdir) {
    namespace fs = std::filesystem;
    const auto gt_for = [&](const Image& img) -> const Mask& {
      const auto it = state->gt_by_digest.find(image_digest(img));
      if (it == state->gt_by_digest.end())
        throw HarnessError("reference plugin saw an image outside the world");
      return it->second;
    };

    // Support quality: mean dice of support labels against hidden truth.
    double quality_sum = 0.0;
    std::size_t n_support = 0;
    std::uint64_t support_sig = 0;  // order-free content signature
    for (;; ++n_support) {
      const auto img_path =
          workdir / "support" / "images" / wire::frame_name(n_support);
      if (!fs::exists(img_path)) break;
      const Image img = png::read_image(img_path);
      const Mask label = png::read_mask(workdir / "support" / "labels" /
                                        wire::frame_name(n_support));
      quality_sum += dice(label, gt_for(img)).value;
      support_sig ^= rng::mix(image_digest(img), mask_digest(label));
    }
    if (n_support == 0) throw HarnessError("no support pairs in work dir");
    const double q_support = quality_sum / static_cast<double>(n_support);

    double noise = 0.0;
    if (coupling.sigma > 0.0) {
      rng::Engine eng(rng::mix(state->seed, kTagReferenceNoise, support_sig));
      noise = coupling.sigma * eng.normal();
    }
    const double q_target =
        std::clamp(coupling.a * q_support + coupling.b + noise, 0.0, 1.0);
    const double level = state->curve.invert(q_target);

    fs::create_directories(workdir / "out" / "predictions");
    for (std::size_t j = 0;; ++j) {
      const auto query_path =
          workdir / "query" / "images" / wire::frame_name(j);
      if (!fs::exists(query_path)) break;
      const Image query = png::read_image(query_path);
      DegradationSpec spec;
      spec.level = level;
      spec.params = state->params;
      spec.seed = rng::mix(state->seed, kTagReferencePred, image_digest(query));
      png::write_mask(workdir / "out" / "predictions" / wire::frame_name(j),
                      degrade(gt_for(query), spec));
    }
  };
  return plugin;
}

}  // namespace spe
