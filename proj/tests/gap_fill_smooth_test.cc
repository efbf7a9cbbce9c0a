#include "probe_latency/gap_fill_smooth.h"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "test_util.h"

namespace probe_latency {
namespace {

using testing::sparse;

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

TEST(InterpolateGaps, WorkedExample) {
  auto r = interpolate_gaps(sparse({60, std::nullopt, std::nullopt, 66}));
  ASSERT_TRUE(std::holds_alternative<SpeedSeries>(r));
  auto v = std::get<SpeedSeries>(r).dense_values();
  ASSERT_EQ(v.size(), 4u);
  EXPECT_NEAR(v[1], 62.0, 1e-12);
  EXPECT_NEAR(v[2], 64.0, 1e-12);
}

TEST(InterpolateGaps, GapFreeIsIdentity) {
  auto r = interpolate_gaps(sparse({1, 2, 3}));
  EXPECT_EQ(std::get<SpeedSeries>(r).dense_values(), (std::vector<double>{1, 2, 3}));
}

TEST(InterpolateGaps, LongGapExcludesWindow) {
  std::vector<std::optional<double>> v = {60};
  for (int i = 0; i < 6; ++i) v.push_back(std::nullopt);
  v.push_back(66);
  auto r = interpolate_gaps(sparse(v));
  ASSERT_TRUE(std::holds_alternative<WindowExcluded>(r));
  EXPECT_EQ(std::get<WindowExcluded>(r).gap_length, 6);
  EXPECT_FALSE(std::get<WindowExcluded>(r).at_boundary);
  EXPECT_EQ(std::get<WindowExcluded>(r).gap_start, testing::at(1));
}

TEST(InterpolateGaps, BoundaryGapExcludesWindow) {
  auto head = interpolate_gaps(sparse({std::nullopt, 60, 61}));
  ASSERT_TRUE(std::holds_alternative<WindowExcluded>(head));
  EXPECT_TRUE(std::get<WindowExcluded>(head).at_boundary);
  auto tail = interpolate_gaps(sparse({60, 61, std::nullopt}));
  EXPECT_TRUE(std::holds_alternative<WindowExcluded>(tail));
}

TEST(InterpolateGaps, FilledValuesStayWithinBrackets) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(10, 70);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    const double a = v(rng), b = v(rng);
    std::vector<std::optional<double>> s = {a};
    for (int i = 0; i < n; ++i) s.push_back(std::nullopt);
    s.push_back(b);
    auto out = std::get<SpeedSeries>(interpolate_gaps(sparse(s))).dense_values();
    for (double x : out) {
      EXPECT_GE(x, std::min(a, b) - 1e-12);
      EXPECT_LE(x, std::max(a, b) + 1e-12);
    }
  }
}

TEST(SmoothForward, WorkedExample) {
  auto k = SmoothingKernel::decreasing_five_minute();
  std::vector<double> x = {60, 60, 60, 60, 60, 30};
  EXPECT_NEAR(smooth_forward(x, k).back(), 50.1, 1e-9);
}

TEST(SmoothForward, MatchesDirectConvolution) {
  auto k = SmoothingKernel::decreasing_five_minute();
  std::vector<double> w(k.weights().begin(), k.weights().end());
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> v(20, 70);
  std::vector<double> x(40);
  for (auto& e : x) e = v(rng);
  auto got = smooth_forward(x, k);
  auto want = oracle::causal_fir(x, w);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-9);
}

TEST(SmoothForward, ConstantStaysConstantIncludingHead) {
  auto k = SmoothingKernel::decreasing_five_minute();
  std::vector<double> x(12, 47.5);
  for (double y : smooth_forward(x, k)) EXPECT_NEAR(y, 47.5, 1e-12);
  for (double y : smooth_zero_phase(x, k)) EXPECT_NEAR(y, 47.5, 1e-12);
}

TEST(SmoothForward, UnitKernelIsIdentity) {
  SmoothingKernel unit({1.0});
  std::vector<double> x = {3, 1, 4, 1, 5};
  EXPECT_EQ(smooth_forward(x, unit), x);
  EXPECT_EQ(smooth_zero_phase(x, unit), x);
}

TEST(SmoothZeroPhase, KeepsPeakWhereForwardMovesIt) {
  auto k = SmoothingKernel::decreasing_five_minute();
  std::vector<double> x(41, 10.0);
  for (int i = 0; i <= 8; ++i) {
    x[static_cast<std::size_t>(20 - i)] = x[static_cast<std::size_t>(20 + i)] = 50.0 - 5 * i;
  }
  EXPECT_EQ(argmax(smooth_zero_phase(x, k)), 20u);
  EXPECT_GT(argmax(smooth_forward(x, k)), 20u);
}

TEST(Smoothing, OutputWithinInputBounds) {
  auto k = SmoothingKernel::decreasing_five_minute();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(5, 80);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(30);
    for (auto& e : x) e = v(rng);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    for (const auto& y : {smooth_forward(x, k), smooth_zero_phase(x, k)}) {
      for (double e : y) {
        EXPECT_GE(e, *lo - 1e-9);
        EXPECT_LE(e, *hi + 1e-9);
      }
    }
  }
}

TEST(SmoothingKernel, RejectsInvalidWeights) {
  EXPECT_THROW(SmoothingKernel({}), std::invalid_argument);
  EXPECT_THROW(SmoothingKernel({0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(SmoothingKernel({1.2, -0.2}), std::invalid_argument);
  EXPECT_NO_THROW(SmoothingKernel({0.5, 0.5}));
}

TEST(SmoothSeries, RequiresGapFreeInput) {
  auto k = SmoothingKernel::decreasing_five_minute();
  EXPECT_THROW(smooth_forward(sparse({1, std::nullopt, 3}), k), std::invalid_argument);
}

}  // namespace
}  // namespace probe_latency
