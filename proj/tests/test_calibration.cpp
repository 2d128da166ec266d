#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "oracles.hpp"
#include "spe/calibration.hpp"
#include "spe/synthetic.hpp"

using namespace spe;

namespace {

PairSet make_pairs(MetricId metric,
                   const std::vector<std::pair<double, double>>& pseudo_real) {
  PairSet psi;
  psi.metric = metric;
  int epoch = 5;
  for (const auto& [pseudo, real] : pseudo_real) {
    PerformancePair p;
    p.epoch = epoch;
    epoch += 5;
    p.phi_pseudo = pseudo;
    p.phi_real = real;
    p.pseudo_repeat_values = {pseudo};
    psi.pairs.push_back(p);
  }
  return psi;
}

}  // namespace

TEST_CASE("fit_mapping exact lines") {
  const PairSet identity = make_pairs(MetricId::dice, {{0, 0}, {1, 1}});
  const MappingFunction g1 = fit_mapping(identity, FitFamily::linear);
  CHECK(g1.a == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g1.b == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g1.residual_sse == doctest::Approx(0.0).epsilon(1e-15));

  const PairSet doubled =
      make_pairs(MetricId::dice, {{1, 2}, {2, 4}, {3, 6}});
  const MappingFunction g2 = fit_mapping(doubled, FitFamily::linear);
  CHECK(g2.a == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g2.b == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g2.residual_sse == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fit_mapping matches the normal-equations oracle on noisy pairs") {
  rng::Engine eng(808);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<double, double>> data;
    std::vector<double> xs, ys;
    const double a = eng.uniform(-3.0, 3.0);
    const double b = eng.uniform(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      const double x = eng.uniform(0.05, 1.0);
      const double y = a * x + b + 0.05 * eng.normal();
      data.push_back({x, y});
      xs.push_back(x);
      ys.push_back(y);
    }
    const MappingFunction g =
        fit_mapping(make_pairs(MetricId::dice, data), FitFamily::linear);
    const oracle::LineFit ref = oracle::least_squares(xs, ys);
    CHECK(g.a == doctest::Approx(ref.a).epsilon(1e-9));
    CHECK(g.b == doctest::Approx(ref.b).epsilon(1e-9));
    CHECK(g.residual_sse == doctest::Approx(ref.sse).epsilon(1e-9));
  }
}

TEST_CASE("fitted line is a local sse minimum") {
  rng::Engine eng(909);
  std::vector<std::pair<double, double>> data;
  for (int i = 0; i < 15; ++i) {
    const double x = eng.uniform(0.0, 1.0);
    data.push_back({x, 0.8 * x + 0.1 + 0.02 * eng.normal()});
  }
  const PairSet psi = make_pairs(MetricId::dice, data);
  const MappingFunction g = fit_mapping(psi, FitFamily::linear);

  const auto sse_at = [&](double a, double b) {
    double s = 0.0;
    for (const auto& p : psi.pairs) {
      const double r = p.phi_real - (a * p.phi_pseudo + b);
      s += r * r;
    }
    return s;
  };
  const double base = sse_at(g.a, g.b);
  CHECK(base == doctest::Approx(g.residual_sse).epsilon(1e-12));
  for (const double da : {-1e-3, 0.0, 1e-3}) {
    for (const double db : {-1e-3, 0.0, 1e-3}) {
      if (da == 0.0 && db == 0.0) continue;
      CHECK(sse_at(g.a + da, g.b + db) >= base - 1e-15);
    }
  }
}

TEST_CASE("affine response of the linear fit") {
  rng::Engine eng(111);
  std::vector<std::pair<double, double>> data;
  for (int i = 0; i < 12; ++i) {
    const double x = eng.uniform(0.1, 0.9);
    data.push_back({x, 0.7 * x + 0.2 + 0.03 * eng.normal()});
  }
  const PairSet psi = make_pairs(MetricId::dice, data);
  const MappingFunction g = fit_mapping(psi, FitFamily::linear);

  const double alpha = 1.7, beta = -0.25;
  PairSet scaled = psi;
  for (auto& p : scaled.pairs) p.phi_real = alpha * p.phi_real + beta;
  const MappingFunction g2 = fit_mapping(scaled, FitFamily::linear);
  CHECK(g2.a == doctest::Approx(alpha * g.a).epsilon(1e-9));
  CHECK(g2.b == doctest::Approx(alpha * g.b + beta).epsilon(1e-9));
}

TEST_CASE("fit_mapping error paths") {
  CHECK_THROWS_AS(fit_mapping(make_pairs(MetricId::dice, {{0.5, 0.5}}),
                              FitFamily::linear),
                  FitError);
  // Degenerate predictor.
  CHECK_THROWS_AS(
      fit_mapping(make_pairs(MetricId::dice, {{0.5, 0.2}, {0.5, 0.9}}),
                  FitFamily::linear),
      FitError);
  // Nonpositive pseudo values under the log family, offenders listed.
  try {
    fit_mapping(make_pairs(MetricId::hd95, {{0.0, 1.0}, {2.0, 3.0}}),
                FitFamily::log_linear);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()).find("5") != std::string::npos);
  }
}

TEST_CASE("select_family") {
  SUBCASE("non-hd95 metrics stay linear") {
    rng::Engine eng(4);
    std::vector<std::pair<double, double>> data;
    for (int i = 0; i < 10; ++i) {
      const double x = eng.uniform(0.1, 1.0);
      data.push_back({x, 3.0 * std::log(x) + 1.0});
    }
    CHECK(select_family(make_pairs(MetricId::dice, data), MetricId::dice) ==
          FitFamily::linear);
  }

  SUBCASE("exact log relation picks log_linear with strictly lower sse") {
    std::vector<std::pair<double, double>> data;
    for (int i = 1; i <= 12; ++i) {
      const double x = 0.4 * i;
      data.push_back({x, 3.0 * std::log(x) + 1.0});
    }
    const PairSet psi = make_pairs(MetricId::hd95, data);
    CHECK(select_family(psi, MetricId::hd95) == FitFamily::log_linear);
    const MappingFunction lin = fit_mapping(psi, FitFamily::linear);
    const MappingFunction log = fit_mapping(psi, FitFamily::log_linear);
    CHECK(log.residual_sse < lin.residual_sse);
    CHECK(log.a == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(log.b == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("exactly linear hd95 pairs keep the linear family") {
    std::vector<std::pair<double, double>> data;
    for (int i = 1; i <= 10; ++i) {
      const double x = 1.0 + 0.5 * i;
      data.push_back({x, 2.0 * x + 5.0});
    }
    CHECK(select_family(make_pairs(MetricId::hd95, data), MetricId::hd95) ==
          FitFamily::linear);
  }

  SUBCASE("ties break toward linear") {
    // Two points: both families interpolate exactly (sse 0 each).
    const PairSet psi =
        make_pairs(MetricId::hd95, {{1.0, 2.0}, {std::exp(1.0), 5.0}});
    CHECK(select_family(psi, MetricId::hd95) == FitFamily::linear);
  }

  SUBCASE("log family infeasible falls back to linear") {
    const PairSet psi =
        make_pairs(MetricId::hd95, {{0.0, 1.0}, {1.0, 2.0}, {2.0, 3.0}});
    CHECK(select_family(psi, MetricId::hd95) == FitFamily::linear);
  }
}

namespace {

CalibrationArtifact sample_artifact() {
  CalibrationArtifact artifact;
  artifact.metric = MetricId::hd95;
  artifact.mapping = {FitFamily::log_linear, 3.25, -0.5, 0.0125};
  artifact.pair_set = make_pairs(
      MetricId::hd95, {{1.5, 4.0}, {2.5, 6.5}, {4.0, 9.25}});
  for (auto& p : artifact.pair_set.pairs)
    p.pseudo_repeat_values = {p.phi_pseudo - 0.125, p.phi_pseudo + 0.125};
  artifact.protocol.support_size = 32;
  artifact.protocol.n_repeats = 2;
  artifact.protocol.seed = 31337;
  artifact.protocol.train_cap = 50;
  artifact.protocol.plugin_id = "builtin-synthetic";
  artifact.protocol.checkpoint_hashes = {"aa", "bb", "cc"};
  artifact.reference_hashes = {{"r1", "r2"}, {"r3", "r4"}, {"r5", "r6"}};
  artifact.toolkit_version = "0.1.0";
  artifact.config_echo = "{}";
  return artifact;
}

}  // namespace

TEST_CASE("artifact save/load round trip") {
  oracle::TempDir tmp("spe-artifact");
  const CalibrationArtifact artifact = sample_artifact();
  save_artifact(artifact, tmp.path() / "a.json");
  const CalibrationArtifact back = load_artifact(tmp.path() / "a.json");

  CHECK(back.metric == artifact.metric);
  CHECK(back.mapping.family == artifact.mapping.family);
  CHECK(back.mapping.a == artifact.mapping.a);
  CHECK(back.mapping.b == artifact.mapping.b);
  CHECK(back.mapping.residual_sse == artifact.mapping.residual_sse);
  REQUIRE(back.pair_set.size() == artifact.pair_set.size());
  for (std::size_t i = 0; i < back.pair_set.size(); ++i) {
    CHECK(back.pair_set.pairs[i].epoch == artifact.pair_set.pairs[i].epoch);
    CHECK(back.pair_set.pairs[i].phi_real ==
          artifact.pair_set.pairs[i].phi_real);
    CHECK(back.pair_set.pairs[i].phi_pseudo ==
          artifact.pair_set.pairs[i].phi_pseudo);
    CHECK(back.pair_set.pairs[i].pseudo_repeat_values ==
          artifact.pair_set.pairs[i].pseudo_repeat_values);
  }
  CHECK(back.protocol.support_size == 32);
  CHECK(back.protocol.n_repeats == 2);
  CHECK(back.protocol.seed == 31337);
  CHECK(back.protocol.train_cap == 50);
  CHECK(back.protocol.plugin_id == "builtin-synthetic");
  CHECK(back.protocol.checkpoint_hashes == artifact.protocol.checkpoint_hashes);
  CHECK(back.reference_hashes == artifact.reference_hashes);

  // Saving the loaded artifact reproduces the bytes (canonical encoding).
  save_artifact(back, tmp.path() / "b.json");
  std::ifstream fa(tmp.path() / "a.json"), fb(tmp.path() / "b.json");
  const std::string sa((std::istreambuf_iterator<char>(fa)),
                       std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(fb)),
                       std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("artifact schema errors") {
  oracle::TempDir tmp("spe-artifact-err");
  const CalibrationArtifact artifact = sample_artifact();
  save_artifact(artifact, tmp.path() / "a.json");

  SUBCASE("unknown family tag") {
    std::ifstream in(tmp.path() / "a.json");
    nlohmann::json doc;
    in >> doc;
    doc["mapping"]["family"] = "quadratic";
    std::ofstream(tmp.path() / "bad.json") << doc.dump();
    CHECK_THROWS_AS(load_artifact(tmp.path() / "bad.json"), ParseError);
  }

  SUBCASE("schema version mismatch") {
    std::ifstream in(tmp.path() / "a.json");
    nlohmann::json doc;
    in >> doc;
    doc["schema_version"] = 99;
    std::ofstream(tmp.path() / "bad.json") << doc.dump();
    CHECK_THROWS_AS(load_artifact(tmp.path() / "bad.json"), ParseError);
  }

  SUBCASE("corrupted file") {
    std::ofstream(tmp.path() / "bad.json") << "{broken";
    CHECK_THROWS_AS(load_artifact(tmp.path() / "bad.json"), ParseError);
  }

  SUBCASE("pair records are enumerated") {
    std::vector<std::pair<double, double>> data;
    for (int i = 1; i <= 20; ++i)
      data.push_back({0.04 * i, 0.05 * i});
    CalibrationArtifact wide = sample_artifact();
    wide.pair_set = make_pairs(MetricId::hd95, data);
    save_artifact(wide, tmp.path() / "wide.json");
    std::ifstream in(tmp.path() / "wide.json");
    nlohmann::json doc;
    in >> doc;
    CHECK(doc.at("pairs").size() == 20);
  }
}

TEST_CASE("support sampling invariants") {
  rng::Engine eng(5150);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(eng.below(200));
    const std::size_t k = std::min<std::size_t>(
        n, 1 + static_cast<std::size_t>(eng.below(64)));
    const auto idx = rng::sample_without_replacement(n, k, eng);
    CHECK(idx.size() == k);
    CHECK(idx.size() <= 64);
    std::set<std::size_t> unique(idx.begin(), idx.end());
    CHECK(unique.size() == idx.size());
    for (const std::size_t i : idx) CHECK(i < n);
  }
}

TEST_CASE("collect_pairs on a synthetic world") {
  SyntheticWorld world(60, GeneratorConfig{}, DegradationParams{}, 777);
  const AdapterRegistry registry = world.adapters();

  SUBCASE("identity coupling puts pairs on the diagonal") {
    const SegmenterPlugin plugin = world.reference_plugin({1.0, 0.0, 0.0});
    const CheckpointSeries series = world.series(10);
    CollectOptions opt;
    opt.support_size = 18;  // covers the whole test split
    opt.n_repeats = 2;
    opt.seed = 777;
    const PairSet psi = collect_pairs(registry, series, world.split(), plugin,
                                      MetricId::dice, opt);
    REQUIRE(psi.size() == 10);
    for (const auto& p : psi.pairs)
      CHECK(std::abs(p.phi_real - p.phi_pseudo) <= 0.02);
  }

  SUBCASE("noiseless coupling makes repeats exactly equal") {
    const SegmenterPlugin plugin = world.reference_plugin({0.8, 0.1, 0.0});
    const CheckpointSeries series = world.series(3);
    CollectOptions opt;
    opt.support_size = 18;  // full test split: every repeat sees the same set
    opt.seed = 12;
    opt.n_repeats = 1;
    const PairSet once = collect_pairs(registry, series, world.split(),
                                       plugin, MetricId::dice, opt);
    opt.n_repeats = 6;
    const PairSet six = collect_pairs(registry, series, world.split(), plugin,
                                      MetricId::dice, opt);
    REQUIRE(once.size() == six.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(std::abs(once.pairs[i].phi_pseudo - six.pairs[i].phi_pseudo) <=
            1e-9);
      for (const double v : six.pairs[i].pseudo_repeat_values)
        CHECK(v == six.pairs[i].pseudo_repeat_values.front());
    }
  }

  SUBCASE("deterministic across runs and worker counts") {
    const SegmenterPlugin plugin = world.reference_plugin({0.9, 0.05, 0.01});
    const CheckpointSeries series = world.series(4);
    CollectOptions opt;
    opt.support_size = 8;
    opt.n_repeats = 2;
    opt.seed = 99;
    opt.workers = 1;
    CollectAudit audit1, audit2;
    const PairSet a = collect_pairs(registry, series, world.split(), plugin,
                                    MetricId::dice, opt, &audit1);
    opt.workers = 4;
    const PairSet b = collect_pairs(registry, series, world.split(), plugin,
                                    MetricId::dice, opt, &audit2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.pairs[i].phi_real == b.pairs[i].phi_real);
      CHECK(a.pairs[i].phi_pseudo == b.pairs[i].phi_pseudo);
      CHECK(a.pairs[i].pseudo_repeat_values ==
            b.pairs[i].pseudo_repeat_values);
    }
    CHECK(audit1.checkpoint_hashes == audit2.checkpoint_hashes);
    CHECK(audit1.reference_hashes == audit2.reference_hashes);
  }

  SUBCASE("multi-metric collection shares predictions") {
    const SegmenterPlugin plugin = world.reference_plugin({1.0, 0.0, 0.0});
    const CheckpointSeries series = world.series(3);
    CollectOptions opt;
    opt.support_size = 8;
    opt.n_repeats = 1;
    opt.seed = 5;
    const auto sets = collect_pairs_multi(
        registry, series, world.split(), plugin,
        {MetricId::dice, MetricId::jaccard}, opt);
    REQUIRE(sets.size() == 2);
    const auto& d = sets.at(MetricId::dice);
    const auto& j = sets.at(MetricId::jaccard);
    REQUIRE(d.size() == 3);
    // Same predictions scored two ways: the dice-jaccard identity holds at
    // the per-repeat level only, but both must be populated and ordered.
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(d.pairs[i].epoch == j.pairs[i].epoch);
      CHECK(d.pairs[i].phi_pseudo >= j.pairs[i].phi_pseudo);
    }
  }

  SUBCASE("overlap metrics respond linearly to the dice coupling") {
    // The dice-level coupling should carry over to near-linear
    // pseudo/real relations for the other overlap metrics.
    const SegmenterPlugin plugin = world.reference_plugin({0.9, 0.05, 0.0});
    const CheckpointSeries series = world.series(8);
    CollectOptions opt;
    opt.support_size = 18;
    opt.n_repeats = 1;
    opt.seed = 2;
    const auto sets = collect_pairs_multi(
        registry, series, world.split(), plugin,
        {MetricId::dice, MetricId::jaccard, MetricId::recall,
         MetricId::precision},
        opt);
    for (const auto& [metric, psi] : sets) {
      std::vector<double> pseudo, real;
      for (const auto& p : psi.pairs) {
        pseudo.push_back(p.phi_pseudo);
        real.push_back(p.phi_real);
      }
      double mp = 0.0, mr = 0.0;
      for (std::size_t i = 0; i < pseudo.size(); ++i) {
        mp += pseudo[i];
        mr += real[i];
      }
      mp /= static_cast<double>(pseudo.size());
      mr /= static_cast<double>(real.size());
      double spp = 0.0, srr = 0.0, spr = 0.0;
      for (std::size_t i = 0; i < pseudo.size(); ++i) {
        spp += (pseudo[i] - mp) * (pseudo[i] - mp);
        srr += (real[i] - mr) * (real[i] - mr);
        spr += (pseudo[i] - mp) * (real[i] - mr);
      }
      const double corr = spr / std::sqrt(spp * srr);
      INFO("metric ", to_string(metric));
      CHECK(corr >= 0.98);
    }
  }

  SUBCASE("series with one checkpoint rejected") {
    const SegmenterPlugin plugin = world.reference_plugin({1.0, 0.0, 0.0});
    CheckpointSeries tiny;
    tiny.checkpoints.push_back({"synthetic", 5, "level=0.5"});
    CollectOptions opt;
    CHECK_THROWS_AS(collect_pairs(registry, tiny, world.split(), plugin,
                                  MetricId::dice, opt),
                    ValidationError);
  }

  SUBCASE("oversized support request rejected") {
    const SegmenterPlugin plugin = world.reference_plugin({1.0, 0.0, 0.0});
    CollectOptions opt;
    opt.support_size = 65;
    CHECK_THROWS_AS(collect_pairs(registry, world.series(3), world.split(),
                                  plugin, MetricId::dice, opt),
                    ValidationError);
  }
}

TEST_CASE("pseudo_range reports the observed span") {
  const PairSet psi =
      make_pairs(MetricId::dice, {{0.3, 0.4}, {0.7, 0.8}, {0.5, 0.6}});
  const auto [lo, hi] = psi.pseudo_range();
  CHECK(lo == 0.3);
  CHECK(hi == 0.7);
}
