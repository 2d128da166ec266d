#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "spe/distance_transform.hpp"
#include "spe/metrics.hpp"
#include "spe/morphology.hpp"

using namespace spe;

namespace {

Mask empty8() { return Mask::Constant(8, 8, false); }

Mask full8() { return Mask::Constant(8, 8, true); }

}  // namespace

TEST_CASE("dice on hand-built pairs") {
  // |pred|=4, |gt|=6, |intersection|=3 laid out on an 8x8 grid.
  const Mask pred = oracle::mask_from({
      "####----",
      "--------",
      "--------",
      "--------",
      "--------",
      "--------",
      "--------",
      "--------",
  });
  const Mask gt = oracle::mask_from({
      "-###----",
      "--------",
      "###-----",
      "--------",
      "--------",
      "--------",
      "--------",
      "--------",
  });
  REQUIRE(pred.count() == 4);
  REQUIRE(gt.count() == 6);
  REQUIRE((pred && gt).count() == 3);

  const double expected = oracle::dice(pred, gt);
  CHECK(expected == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(dice(pred, gt).value == doctest::Approx(expected).epsilon(1e-15));

  // Same counts feed jaccard: 3 / 7.
  CHECK(jaccard(pred, gt).value ==
        doctest::Approx(oracle::jaccard(pred, gt)).epsilon(1e-15));
  CHECK(jaccard(pred, gt).value == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("dice conventions") {
  Mask a = empty8();
  Mask b = empty8();
  CHECK(dice(a, b).value == 1.0);
  CHECK(dice(a, b).defined);

  b(3, 3) = true;
  CHECK(dice(a, b).value == 0.0);

  a = full8();
  b = full8();
  CHECK(dice(a, b).value == 1.0);

  Mask left = empty8(), right = empty8();
  left(1, 1) = true;
  right(6, 6) = true;
  CHECK(dice(left, right).value == 0.0);
  CHECK(jaccard(left, right).value == 0.0);
}

TEST_CASE("shape mismatch is a validation error") {
  Mask a = Mask::Constant(8, 8, false);
  Mask b = Mask::Constant(9, 8, false);
  CHECK_THROWS_AS(dice(a, b), ValidationError);
  CHECK_THROWS_AS(hd95(a, b), ValidationError);
}

TEST_CASE("recall and precision") {
  Mask gt = empty8();
  gt(2, 2) = gt(2, 3) = gt(3, 2) = true;
  Mask pred = gt;
  CHECK(recall(pred, gt).value == 1.0);
  CHECK(precision(pred, gt).value == 1.0);

  // pred is a superset with |pred| = 2|gt|.
  pred(5, 5) = pred(5, 6) = pred(6, 5) = true;
  REQUIRE(pred.count() == 2 * gt.count());
  CHECK(recall(pred, gt).value ==
        doctest::Approx(*oracle::recall(pred, gt)).epsilon(1e-15));
  CHECK(recall(pred, gt).value == 1.0);
  CHECK(precision(pred, gt).value ==
        doctest::Approx(*oracle::precision(pred, gt)).epsilon(1e-15));
  CHECK(precision(pred, gt).value == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_FALSE(recall(pred, empty8()).defined);
  CHECK_FALSE(precision(empty8(), gt).defined);
}

TEST_CASE("pearson on binary grids") {
  Mask gt = empty8();
  gt(0, 0) = gt(1, 1) = gt(2, 2) = true;
  CHECK(pearson_pixel(gt, gt).value == doctest::Approx(1.0).epsilon(1e-12));

  const Mask complement = !gt;
  CHECK(pearson_pixel(complement, gt).value ==
        doctest::Approx(-1.0).epsilon(1e-12));

  CHECK_FALSE(pearson_pixel(empty8(), gt).defined);
  CHECK_FALSE(pearson_pixel(full8(), gt).defined);
  CHECK_FALSE(pearson_pixel(gt, empty8()).defined);
}

TEST_CASE("hd95 basics") {
  Mask square = Mask::Constant(32, 32, false);
  for (Eigen::Index y = 10; y < 20; ++y)
    for (Eigen::Index x = 10; x < 20; ++x) square(y, x) = true;

  CHECK(hd95(square, square).value == 0.0);
  CHECK_FALSE(hd95(empty8(), full8()).defined);
  CHECK_FALSE(hd95(full8(), empty8()).defined);

  // 10x10 square vs the same square shifted one pixel: against the
  // exhaustive sup-inf oracle with the exact percentile.
  const Mask shifted = translate(square, 1, 0);
  const double expected = *oracle::hd95(shifted, square);
  CHECK(hd95(shifted, square).value ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hd95 matches the all-pairs oracle on random masks") {
  rng::Engine eng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const Mask pred = oracle::random_mask(16, 16, 0.3, eng);
    const Mask gt = oracle::random_mask(16, 16, 0.3, eng);
    const auto expected = oracle::hd95(pred, gt);
    const MetricValue got = hd95(pred, gt);
    REQUIRE(got.defined == expected.has_value());
    if (expected) CHECK(got.value == doctest::Approx(*expected).epsilon(1e-12));
  }
}

TEST_CASE("hd95 never exceeds the exact Hausdorff distance") {
  rng::Engine eng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Mask pred = oracle::random_mask(12, 12, 0.35, eng);
    const Mask gt = oracle::random_mask(12, 12, 0.35, eng);
    if (pred.count() == 0 || gt.count() == 0) continue;
    CHECK(hd95(pred, gt).value <= oracle::hausdorff(pred, gt) + 1e-12);
  }
}

TEST_CASE("squared EDT agrees with brute force") {
  rng::Engine eng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Mask m = oracle::random_mask(14, 14, 0.2, eng);
    if (m.count() == 0) continue;
    const Eigen::ArrayXXd d2 = squared_edt(m);
    const auto fg = oracle::foreground(m);
    for (Eigen::Index y = 0; y < m.rows(); ++y) {
      for (Eigen::Index x = 0; x < m.cols(); ++x) {
        double best = kEdtInfinity;
        for (const auto& [fy, fx] : fg) {
          const double dy = static_cast<double>(y - fy);
          const double dx = static_cast<double>(x - fx);
          best = std::min(best, dy * dy + dx * dx);
        }
        CHECK(d2(y, x) == doctest::Approx(best).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("symmetry properties") {
  rng::Engine eng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Mask a = oracle::random_mask(16, 16, 0.3, eng);
    const Mask b = oracle::random_mask(16, 16, 0.3, eng);
    CHECK(dice(a, b).value == dice(b, a).value);
    CHECK(jaccard(a, b).value == jaccard(b, a).value);
    const auto pab = pearson_pixel(a, b);
    const auto pba = pearson_pixel(b, a);
    CHECK(pab.defined == pba.defined);
    if (pab.defined) CHECK(pab.value == doctest::Approx(pba.value).epsilon(1e-15));
    const auto hab = hd95(a, b);
    const auto hba = hd95(b, a);
    CHECK(hab.defined == hba.defined);
    if (hab.defined) CHECK(hab.value == hba.value);
    // recall(pred, gt) = precision(gt, pred)
    const auto r = recall(a, b);
    const auto p = precision(b, a);
    CHECK(r.defined == p.defined);
    if (r.defined) CHECK(r.value == p.value);
  }
}

TEST_CASE("dice-jaccard identity and range bounds") {
  rng::Engine eng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const Mask a = oracle::random_mask(16, 16, eng.uniform(0.05, 0.8), eng);
    const Mask b = oracle::random_mask(16, 16, eng.uniform(0.05, 0.8), eng);
    const double d = dice(a, b).value;
    const double j = jaccard(a, b).value;
    CHECK(d == doctest::Approx(2.0 * j / (1.0 + j)).epsilon(1e-12));
    CHECK(j <= d + 1e-15);
    CHECK((d >= 0.0 && d <= 1.0));
    CHECK((j >= 0.0 && j <= 1.0));
    const auto r = recall(a, b);
    if (r.defined) CHECK((r.value >= 0.0 && r.value <= 1.0));
    const auto p = pearson_pixel(a, b);
    if (p.defined) CHECK((p.value >= -1.0 - 1e-12 && p.value <= 1.0 + 1e-12));
    const auto h = hd95(a, b);
    if (h.defined) CHECK(h.value >= 0.0);
  }
}

TEST_CASE("translation invariance") {
  rng::Engine eng(17);
  Mask a = Mask::Constant(24, 24, false);
  Mask b = Mask::Constant(24, 24, false);
  // Shapes confined to the interior so a (2, 3) shift stays in bounds.
  for (Eigen::Index y = 6; y < 14; ++y)
    for (Eigen::Index x = 6; x < 14; ++x) {
      a(y, x) = eng.uniform01() < 0.6;
      b(y, x) = eng.uniform01() < 0.6;
    }
  const Mask at = translate(a, 2, 3);
  const Mask bt = translate(b, 2, 3);
  CHECK(dice(a, b).value == dice(at, bt).value);
  CHECK(jaccard(a, b).value == jaccard(at, bt).value);
  CHECK(hd95(a, b).value == doctest::Approx(hd95(at, bt).value).epsilon(1e-12));
}

TEST_CASE("dice is non-increasing under nested erosion") {
  Mask pred = Mask::Constant(32, 32, false);
  for (Eigen::Index y = 8; y < 26; ++y)
    for (Eigen::Index x = 6; x < 24; ++x) pred(y, x) = true;
  const Mask gt = pred;
  double prev = 1.0;
  for (int steps = 0; steps < 9; ++steps) {
    const double d = dice(erode(pred, steps), gt).value;
    CHECK(d <= prev + 1e-15);
    prev = d;
  }
}

TEST_CASE("evaluate_set") {
  Mask gt = empty8();
  gt(1, 1) = gt(1, 2) = gt(2, 1) = true;

  SUBCASE("mean of defined per-image values") {
    Mask half = empty8();
    half(1, 1) = half(1, 2) = half(2, 1) = half(2, 2) = true;  // dice 6/7
    const std::vector<Mask> preds{gt, half};
    const std::vector<Mask> gts{gt, gt};
    const SetScore s = evaluate_set(MetricId::dice, preds, gts);
    CHECK(s.n_defined == 2);
    const double expected =
        (oracle::dice(gt, gt) + oracle::dice(half, gt)) / 2.0;
    CHECK(s.mean == doctest::Approx(expected).epsilon(1e-15));
  }

  SUBCASE("two dice values 1.0 and 0.6 average to 0.8") {
    Mask pred2 = empty8();
    Mask gt2 = empty8();
    pred2(0, 0) = pred2(0, 1) = pred2(0, 2) = pred2(0, 3) = true;
    gt2(0, 1) = gt2(0, 2) = gt2(0, 3) = gt2(4, 0) = gt2(4, 1) = gt2(4, 2) =
        true;
    REQUIRE(dice(pred2, gt2).value == doctest::Approx(0.6));
    const std::vector<Mask> preds{gt, pred2};
    const std::vector<Mask> gts{gt, gt2};
    CHECK(evaluate_set(MetricId::dice, preds, gts).mean ==
          doctest::Approx(0.8).epsilon(1e-15));
  }

  SUBCASE("undefined set score flagged") {
    const std::vector<Mask> preds{empty8()};
    const std::vector<Mask> gts{gt};
    const SetScore s = evaluate_set(MetricId::hd95, preds, gts);
    CHECK(s.n_defined == 0);
    CHECK_FALSE(s.defined());
  }

  SUBCASE("empty input rejected") {
    const std::vector<Mask> none;
    CHECK_THROWS_AS(evaluate_set(MetricId::dice, none, none),
                    ValidationError);
  }

  SUBCASE("length mismatch rejected") {
    const std::vector<Mask> preds{gt};
    const std::vector<Mask> gts{gt, gt};
    CHECK_THROWS_AS(evaluate_set(MetricId::dice, preds, gts),
                    ValidationError);
  }

  SUBCASE("mean equals per-pair oracle on random pairs") {
    rng::Engine eng(23);
    std::vector<Mask> preds, gts;
    double expected = 0.0;
    for (int i = 0; i < 50; ++i) {
      preds.push_back(oracle::random_mask(16, 16, 0.4, eng));
      gts.push_back(oracle::random_mask(16, 16, 0.4, eng));
      expected += oracle::dice(preds.back(), gts.back());
    }
    expected /= 50.0;
    CHECK(evaluate_set(MetricId::dice, preds, gts).mean ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("metric names round-trip") {
  for (const MetricId id : all_metrics())
    CHECK(parse_metric(to_string(id)) == id);
  CHECK_THROWS_AS(parse_metric("accuracy"), ValidationError);
  CHECK(higher_is_better(MetricId::dice));
  CHECK_FALSE(higher_is_better(MetricId::hd95));
}
