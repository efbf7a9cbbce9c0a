#include "probe_latency/latency_core.h"

#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "probe_latency/error.h"
#include "test_util.h"

namespace probe_latency {
namespace {

using testing::range;
using testing::series;

std::vector<double> random_profile(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> step(0.0, 3.0);
  std::vector<double> v(n);
  double x = 50.0;
  for (auto& e : v) {
    x = std::clamp(x + step(rng), 10.0, 80.0);
    e = x;
  }
  return v;
}

TEST(EvaluateObjectives, IdenticalCurves) {
  std::vector<double> v = {60, 55, 40, 30, 35, 50, 60};
  auto t = evaluate_objectives(series(v), series(v, 0, SeriesSource::kProbe), 0,
                               range(0, 6));
  EXPECT_EQ(t.avd, 0.0);
  EXPECT_EQ(t.svd, 0.0);
  ASSERT_TRUE(t.cor);
  EXPECT_NEAR(*t.cor, 1.0, 1e-12);
}

TEST(EvaluateObjectives, ConstantCurvesHaveNoCorrelation) {
  auto t = evaluate_objectives(series(std::vector<double>(10, 60)),
                               series(std::vector<double>(10, 55)), 0, range(0, 9));
  EXPECT_NEAR(t.avd, 5.0, 1e-12);
  EXPECT_NEAR(t.svd, 25.0, 1e-12);
  EXPECT_FALSE(t.cor);
}

TEST(EvaluateObjectives, CorrelationIsAffineInvariant) {
  std::mt19937_64 rng(21);
  auto v = random_profile(rng, 30);
  auto w = random_profile(rng, 30);
  std::vector<double> scaled(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) scaled[i] = 2.5 * w[i] + 7.0;
  auto a = evaluate_objectives(series(v), series(w), 0, range(0, 29));
  auto b = evaluate_objectives(series(v), series(scaled), 0, range(0, 29));
  EXPECT_NEAR(*a.cor, *b.cor, 1e-12);
}

TEST(EvaluateObjectives, MissingCoverageIsAnError) {
  std::vector<double> v(20, 50.0);
  try {
    evaluate_objectives(series(v), series(v), 5, range(0, 19));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCoverage);
  }
}

TEST(EstimateLatency, ShiftedCopyFoundAtItsDelay) {
  std::vector<double> v = {60, 60, 58, 50, 40, 30, 25, 25, 30, 40, 50, 58, 60, 60,
                           60, 60, 60, 60, 60, 60, 60, 60, 60, 60, 60, 60};
  auto probe = testing::delayed(v, 3);
  auto est = estimate_latency(series(v), series(probe), {0, 6}, range(0, 19));
  EXPECT_EQ(est.best_offset_avd, 3);
  EXPECT_EQ(est.best_offset_svd, 3);
  EXPECT_EQ(est.best_offset_cor, 3);
  EXPECT_DOUBLE_EQ(est.average_latency, 3.0);
  EXPECT_EQ(est.curves.size(), 7u);
  EXPECT_NEAR(*est.best_correlation(), 1.0, 1e-12);
}

TEST(EstimateLatency, FlatCurvesAverageTwoObjectives) {
  auto est = estimate_latency(series(std::vector<double>(30, 60)),
                              series(std::vector<double>(30, 55)), {0, 10}, range(0, 15));
  EXPECT_EQ(est.best_offset_avd, 0);
  EXPECT_EQ(est.best_offset_svd, 0);
  EXPECT_FALSE(est.best_offset_cor);
  EXPECT_DOUBLE_EQ(est.average_latency, 0.0);
}

TEST(EstimateLatency, TiesGoToSmallestOffset) {
  // Probe periodic with period 2: offsets 1 and 3 match equally.
  std::vector<double> v(40);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2 ? 40 : 60;
  std::vector<double> p(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = i % 2 ? 60 : 40;
  auto est = estimate_latency(series(v), series(p), {0, 5}, range(0, 20));
  EXPECT_EQ(est.best_offset_avd, 1);
  EXPECT_EQ(est.best_offset_svd, 1);
  EXPECT_EQ(est.best_offset_cor, 1);
}

TEST(EstimateLatency, NegativeLowerBoundRecoversLead) {
  std::mt19937_64 rng(9);
  auto v = random_profile(rng, 60);
  std::vector<double> lead(v.begin() + 2, v.end());
  lead.push_back(lead.back());
  lead.push_back(lead.back());
  auto est = estimate_latency(series(v), series(lead), {-4, 4}, range(10, 40));
  EXPECT_EQ(est.best_offset_avd, -2);
  EXPECT_EQ(est.best_offset_svd, -2);
  EXPECT_EQ(est.best_offset_cor, -2);
}

TEST(EstimateLatency, RecoversRandomShifts) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = trial % 16;
    auto v = random_profile(rng, 80);
    auto est = estimate_latency(series(v), series(testing::delayed(v, k)), {0, 15},
                                range(20, 60));
    EXPECT_EQ(est.best_offset_avd, k);
    EXPECT_EQ(est.best_offset_svd, k);
    EXPECT_EQ(est.best_offset_cor, k);
  }
}

TEST(EstimateLatency, AgreesWithBruteForceScan) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = random_profile(rng, 50);
    auto w = random_profile(rng, 50);
    auto est = estimate_latency(series(v), series(w), {0, 10}, range(0, 39));
    std::vector<double> ref(v.begin(), v.begin() + 40);
    auto want = oracle::scan_shifts(ref, w, 0, 10);
    EXPECT_EQ(est.best_offset_avd, want.avd);
    EXPECT_EQ(est.best_offset_svd, want.svd);
    EXPECT_EQ(est.best_offset_cor, want.cor);
  }
}

TEST(EstimateLatency, Deterministic) {
  std::mt19937_64 rng(31);
  auto v = random_profile(rng, 50);
  auto w = random_profile(rng, 50);
  auto a = estimate_latency(series(v), series(w), {0, 10}, range(0, 39));
  auto b = estimate_latency(series(v), series(w), {0, 10}, range(0, 39));
  ASSERT_EQ(a.curves.size(), b.curves.size());
  for (std::size_t i = 0; i < a.curves.size(); ++i) {
    EXPECT_EQ(a.curves[i].avd, b.curves[i].avd);
    EXPECT_EQ(a.curves[i].cor, b.curves[i].cor);
  }
  EXPECT_EQ(a.average_latency, b.average_latency);
}

TEST(ShiftBounds, Validation) {
  EXPECT_THROW((ShiftBounds{5, 4}).validate(), Error);
  EXPECT_NO_THROW((ShiftBounds{-3, 4}).validate());
  EXPECT_EQ((ShiftBounds{0, 15}).count(), 16);
  auto cov = probe_coverage(range(0, 10), {0, 15});
  EXPECT_EQ(cov.first, testing::at(0));
  EXPECT_EQ(cov.last, testing::at(25));
}

}  // namespace
}  // namespace probe_latency
