#include "probe_latency/gap_fill_smooth.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace probe_latency {

SmoothingKernel::SmoothingKernel(std::vector<double> weights, double tolerance)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("smoothing kernel is empty");
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument(fmt::format("smoothing weight {} is negative", w));
    }
  }
  double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(sum - 1.0) > tolerance) {
    throw std::invalid_argument(
        fmt::format("smoothing weights sum to {}, expected 1", sum));
  }
}

SmoothingKernel SmoothingKernel::decreasing_five_minute() {
  return SmoothingKernel({0.33, 0.27, 0.20, 0.13, 0.07});
}

std::variant<SpeedSeries, WindowExcluded> interpolate_gaps(const SpeedSeries& series,
                                                           GapPolicy policy) {
  auto values = series.values();
  std::vector<std::optional<double>> out(values.begin(), values.end());
  std::size_t i = 0;
  while (i < out.size()) {
    if (out[i]) {
      ++i;
      continue;
    }
    std::size_t gap_begin = i;
    while (i < out.size() && !out[i]) ++i;
    int n = static_cast<int>(i - gap_begin);
    Minute gap_start = series.start() + std::chrono::minutes(gap_begin);
    if (gap_begin == 0 || i == out.size()) {
      return WindowExcluded{gap_start, n, true};
    }
    if (n > policy.max_gap) return WindowExcluded{gap_start, n, false};

    double before = *out[gap_begin - 1];
    double after = *out[i];
    for (int k = 1; k <= n; ++k) {
      out[gap_begin + static_cast<std::size_t>(k) - 1] =
          before + static_cast<double>(k) / (n + 1) * (after - before);
    }
  }
  return SpeedSeries(series.segment_id(), series.start(), std::move(out),
                     series.source());
}

std::vector<double> smooth_forward(std::span<const double> x,
                                   const SmoothingKernel& kernel) {
  auto w = kernel.weights();
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    std::size_t taps = std::min(w.size(), k + 1);
    double acc = 0.0;
    double weight = 0.0;
    for (std::size_t j = 0; j < taps; ++j) {
      acc += w[j] * x[k - j];
      weight += w[j];
    }
    if (taps == w.size()) {
      y[k] = acc;
    } else if (weight > 0.0) {
      y[k] = acc / weight;
    } else {
      y[k] = x[k];  // leading weights are all zero
    }
  }
  return y;
}

std::vector<double> smooth_zero_phase(std::span<const double> x,
                                      const SmoothingKernel& kernel) {
  auto y = smooth_forward(x, kernel);
  std::reverse(y.begin(), y.end());
  y = smooth_forward(y, kernel);
  std::reverse(y.begin(), y.end());
  return y;
}

SpeedSeries smooth_forward(const SpeedSeries& series, const SmoothingKernel& kernel) {
  auto y = smooth_forward(series.dense_values(), kernel);
  return SpeedSeries::dense(series.segment_id(), series.start(), y, series.source());
}

SpeedSeries smooth_zero_phase(const SpeedSeries& series, const SmoothingKernel& kernel) {
  auto y = smooth_zero_phase(series.dense_values(), kernel);
  return SpeedSeries::dense(series.segment_id(), series.start(), y, series.source());
}

}  // namespace probe_latency
