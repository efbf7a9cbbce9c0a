#pragma once

#include <span>
#include <variant>
#include <vector>

#include "probe_latency/series_builder.h"

namespace probe_latency {

/// Causal FIR weights; weights()[0] applies to the current sample.
class SmoothingKernel {
 public:
  /// Throws std::invalid_argument unless weights are non-empty, finite,
  /// non-negative and sum to 1 within `tolerance`.
  explicit SmoothingKernel(std::vector<double> weights,
                           double tolerance = 1e-12);

  /// Five-minute arithmetically decreasing weights 0.33 .. 0.07.
  static SmoothingKernel decreasing_five_minute();

  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }

 private:
  std::vector<double> weights_;
};

struct GapPolicy {
  int max_gap = 5;  // consecutive missing minutes that may be filled
};

/// Why a window was rejected by interpolate_gaps.
struct WindowExcluded {
  Minute gap_start{};
  int gap_length = 0;
  bool at_boundary = false;
};

/// Linear fill between bracketing values for gaps of at most max_gap
/// minutes. A longer gap, or a gap touching either end, excludes the window.
std::variant<SpeedSeries, WindowExcluded> interpolate_gaps(
    const SpeedSeries& series, GapPolicy policy = {});

/// y(k) = sum_j w(j) x(k-j+1). Near the head, weights are renormalized over
/// the samples that exist.
std::vector<double> smooth_forward(std::span<const double> x,
                                   const SmoothingKernel& kernel);
/// Forward pass, then the same pass over the reversed output, reversed back.
std::vector<double> smooth_zero_phase(std::span<const double> x,
                                      const SmoothingKernel& kernel);

/// Series overloads; the input must be gap-free (std::invalid_argument).
SpeedSeries smooth_forward(const SpeedSeries& series,
                           const SmoothingKernel& kernel);
SpeedSeries smooth_zero_phase(const SpeedSeries& series,
                              const SmoothingKernel& kernel);

}  // namespace probe_latency
