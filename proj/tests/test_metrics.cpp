#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hcdn/metrics/metrics.hpp"
#include "hcdn/rng.hpp"
#include "testutil.hpp"

using namespace hcdn;

namespace {

BinaryMask random_mask(int h, int w, std::mt19937_64& rng, double p) {
  BinaryMask m(h, w);
  for (auto& v : m.values) v = rng_bernoulli(rng, p) ? 1 : 0;
  return m;
}

// Independent per-pixel counter used as the oracle.
ConfusionCounts brute_force(const BinaryMask& pred, const BinaryMask& target) {
  ConfusionCounts c;
  for (int y = 0; y < pred.height; ++y)
    for (int x = 0; x < pred.width; ++x) {
      const int p = pred.at(y, x);
      const int t = target.at(y, x);
      c.tp += p == 1 && t == 1;
      c.fp += p == 1 && t == 0;
      c.fn += p == 0 && t == 1;
      c.tn += p == 0 && t == 0;
    }
  return c;
}

}  // namespace

TEST_CASE("confusion accumulation", "[metrics]") {
  std::mt19937_64 rng(400);

  SECTION("perfect prediction") {
    const auto target = random_mask(10, 10, rng, 0.3);
    const auto c = accumulate_confusion(target, target);
    REQUIRE(c.tp == static_cast<long long>(target.count_ones()));
    REQUIRE(c.tn == 100 - c.tp);
    REQUIRE(c.fp == 0);
    REQUIRE(c.fn == 0);
  }
  SECTION("total inversion") {
    const auto target = random_mask(10, 10, rng, 0.4);
    BinaryMask inverted(10, 10);
    for (std::size_t i = 0; i < target.values.size(); ++i)
      inverted.values[i] = target.values[i] ? 0 : 1;
    const auto c = accumulate_confusion(inverted, target);
    REQUIRE(c.tp == 0);
    REQUIRE(c.tn == 0);
    REQUIRE(c.fp + c.fn == 100);
  }
  SECTION("matches the brute-force oracle on random 16x16 pairs") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto pred = random_mask(16, 16, rng, 0.5);
      const auto target = random_mask(16, 16, rng, 0.3);
      REQUIRE(accumulate_confusion(pred, target) == brute_force(pred, target));
    }
  }
  SECTION("order independent and mergeable") {
    const auto p1 = random_mask(8, 8, rng, 0.5), t1 = random_mask(8, 8, rng, 0.5);
    const auto p2 = random_mask(8, 8, rng, 0.5), t2 = random_mask(8, 8, rng, 0.5);
    const auto ab = accumulate_confusion(p2, t2, accumulate_confusion(p1, t1));
    const auto ba = accumulate_confusion(p1, t1, accumulate_confusion(p2, t2));
    REQUIRE(ab == ba);
    REQUIRE(ab == accumulate_confusion(p1, t1) + accumulate_confusion(p2, t2));
  }
  SECTION("shape mismatch") {
    REQUIRE_THROWS_AS(accumulate_confusion(BinaryMask(4, 4), BinaryMask(4, 5)), Error);
  }
}

TEST_CASE("metric formulas", "[metrics]") {
  SECTION("hand case tp=30 fp=10 fn=20 tn=40") {
    const auto m = compute_metrics({30, 10, 20, 40});
    REQUIRE(m.precision == Catch::Approx(0.75).margin(1e-12));
    REQUIRE(m.recall == Catch::Approx(0.60).margin(1e-12));
    REQUIRE(m.f1 == Catch::Approx(0.6667).margin(1e-4));
    REQUIRE(m.iou == Catch::Approx(0.50).margin(1e-12));
    REQUIRE(m.acc == Catch::Approx(0.70).margin(1e-12));
    REQUIRE_FALSE(m.zero_division);
  }
  SECTION("perfect case") {
    const auto m = compute_metrics({50, 0, 0, 50});
    REQUIRE(m.precision == 1.0);
    REQUIRE(m.recall == 1.0);
    REQUIRE(m.f1 == 1.0);
    REQUIRE(m.iou == 1.0);
    REQUIRE(m.acc == 1.0);
  }
  SECTION("all-negative prediction uses the 0/0 convention") {
    const auto m = compute_metrics({0, 0, 10, 90});
    REQUIRE(m.precision == 0.0);
    REQUIRE(m.recall == 0.0);
    REQUIRE(m.f1 == 0.0);
    REQUIRE(m.iou == 0.0);
    REQUIRE(m.acc == Catch::Approx(0.90).margin(1e-12));
    REQUIRE(m.zero_division);
  }
  SECTION("empty confusion raises") {
    try {
      compute_metrics({0, 0, 0, 0});
      FAIL("expected EmptyConfusion");
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::EmptyConfusion);
    }
  }
}

TEST_CASE("metric identities on random confusions", "[metrics]") {
  std::mt19937_64 rng(401);
  for (int trial = 0; trial < 200; ++trial) {
    ConfusionCounts c{static_cast<long long>(rng_below(rng, 50)),
                      static_cast<long long>(rng_below(rng, 50)),
                      static_cast<long long>(rng_below(rng, 50)),
                      static_cast<long long>(rng_below(rng, 50))};
    if (c.total() == 0) continue;
    const auto m = compute_metrics(c);

    if (c.tp + c.fp + c.fn > 0) {
      REQUIRE(m.f1 == Catch::Approx(2.0 * m.iou / (1.0 + m.iou)).margin(1e-12));
    }
    if (c.tp + c.fp > 0 && c.tp + c.fn > 0) {
      REQUIRE(m.iou <= std::min(m.precision, m.recall) + 1e-12);
    }
    // aACC is invariant under swapping the positive class
    const auto swapped = compute_metrics(swap_classes(c));
    REQUIRE(m.acc == Catch::Approx(swapped.acc).margin(1e-12));
  }
}

TEST_CASE("mean metrics and report", "[metrics]") {
  SECTION("two-class means") {
    const ConfusionCounts c{30, 10, 20, 40};
    const auto r = full_report(c);
    const auto change = compute_metrics(c);
    const auto nochange = compute_metrics(swap_classes(c));
    REQUIRE(r.m_precision == Catch::Approx((change.precision + nochange.precision) / 2));
    REQUIRE(r.m_recall == Catch::Approx((change.recall + nochange.recall) / 2));
    REQUIRE(r.m_fscore == Catch::Approx((change.f1 + nochange.f1) / 2));
    REQUIRE(r.m_iou == Catch::Approx((change.iou + nochange.iou) / 2));
    REQUIRE(r.aacc == Catch::Approx(0.70));
  }
  SECTION("symmetric confusion gives mPrecision equal to per-class precision") {
    const ConfusionCounts c{25, 5, 5, 25};
    const auto r = full_report(c);
    REQUIRE(r.m_precision == Catch::Approx(r.change.precision).margin(1e-12));
  }
  SECTION("perfect prediction means are all 1") {
    const auto r = full_report({70, 0, 0, 30});
    REQUIRE(r.m_fscore == 1.0);
    REQUIRE(r.m_precision == 1.0);
    REQUIRE(r.m_recall == 1.0);
    REQUIRE(r.m_iou == 1.0);
    REQUIRE(r.aacc == 1.0);
  }
}

TEST_CASE("report JSON schema and formatting", "[metrics]") {
  const auto r = full_report({30, 10, 20, 40});
  const auto j = metrics_report_to_json(r);
  REQUIRE(j.contains("aACC"));
  REQUIRE(j.contains("mFscore"));
  REQUIRE(j.contains("mPrecision"));
  REQUIRE(j.contains("mRecall"));
  REQUIRE(j.contains("mIoU"));
  REQUIRE(j.contains("change"));
  REQUIRE(j.contains("nochange"));
  REQUIRE(j["aACC"].get<double>() == Catch::Approx(70.0).margin(1e-9));
  // percentages carry exactly two decimals: 2/3 -> 66.67
  REQUIRE(j["change"]["f1"].get<double>() == Catch::Approx(66.67).margin(1e-9));
  REQUIRE(j["zero_division"].get<bool>() == false);

  SECTION("writes byte-identical files") {
    testutil::TempDir dir;
    save_metrics_report(dir.path() / "a.json", r);
    save_metrics_report(dir.path() / "b.json", r);
    REQUIRE(testutil::read_file(dir.path() / "a.json") ==
            testutil::read_file(dir.path() / "b.json"));
    REQUIRE_FALSE(testutil::read_file(dir.path() / "a.json").empty());
  }
}
