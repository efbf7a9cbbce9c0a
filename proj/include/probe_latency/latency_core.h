#pragma once

#include <optional>
#include <vector>

#include "probe_latency/series_builder.h"
#include "probe_latency/time.h"

namespace probe_latency {

/// Inclusive range of candidate latencies in whole minutes. lb may be
/// negative to allow a probe that leads the reference.
struct ShiftBounds {
  int lb = 0;
  int ub = 15;

  /// Throws Error(kConfig) when lb > ub.
  void validate() const;
  int count() const { return ub - lb + 1; }
};

/// Fitness of one candidate offset. `cor` is nullopt when either windowed
/// curve has no variance.
struct ObjectiveTriple {
  int offset = 0;
  double avd = 0.0;  // mean |ref - probe|, mph
  double svd = 0.0;  // mean (ref - probe)^2, mph^2
  std::optional<double> cor;
};

struct LatencyEstimate {
  MinuteRange window{};
  ShiftBounds bounds{};
  int best_offset_avd = 0;
  int best_offset_svd = 0;
  std::optional<int> best_offset_cor;
  double average_latency = 0.0;
  std::vector<ObjectiveTriple> curves;  // one per offset, ascending

  /// Correlation at best_offset_cor, if any.
  std::optional<double> best_correlation() const;
};

/// Compares ref(t) against probe(t + offset) for every t in `window`: a probe
/// that lags the reference by k minutes matches at offset k. Throws
/// Error(kCoverage) if either curve is missing a needed minute.
ObjectiveTriple evaluate_objectives(const SpeedSeries& reference,
                                    const SpeedSeries& probe, int offset,
                                    MinuteRange window);

/// Scans offsets lb..ub over a fixed reference window. AVD and SVD are
/// minimized, COR maximized; ties go to the smallest offset. The average is
/// taken over the objectives that produced a best offset.
LatencyEstimate estimate_latency(const SpeedSeries& reference,
                                 const SpeedSeries& probe, ShiftBounds bounds,
                                 MinuteRange window);

/// Minutes of probe data needed around `window` for `bounds`.
MinuteRange probe_coverage(MinuteRange window, ShiftBounds bounds);

}  // namespace probe_latency
