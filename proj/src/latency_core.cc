#include "probe_latency/latency_core.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "probe_latency/error.h"

namespace probe_latency {
namespace {

// Windowed curves whose standard deviation is below this fraction of their
// magnitude are treated as flat; smoothing leaves ulp-level ripple on
// constant input.
constexpr double kFlatTolerance = 1e-9;

}  // namespace

void ShiftBounds::validate() const {
  if (lb > ub) {
    throw Error(ErrorKind::kConfig,
                fmt::format("latency bounds: lb {} exceeds ub {}", lb, ub));
  }
}

std::optional<double> LatencyEstimate::best_correlation() const {
  if (!best_offset_cor) return std::nullopt;
  for (const auto& c : curves) {
    if (c.offset == *best_offset_cor) return c.cor;
  }
  return std::nullopt;
}

MinuteRange probe_coverage(MinuteRange window, ShiftBounds bounds) {
  return {window.first + std::chrono::minutes(bounds.lb),
          window.last + std::chrono::minutes(bounds.ub)};
}

ObjectiveTriple evaluate_objectives(const SpeedSeries& reference,
                                    const SpeedSeries& probe, int offset,
                                    MinuteRange window) {
  if (window.empty()) {
    throw Error(ErrorKind::kCoverage, "empty evaluation window");
  }
  MinuteRange shifted{window.first + std::chrono::minutes(offset),
                      window.last + std::chrono::minutes(offset)};
  if (!reference.present_over(window)) {
    throw Error(ErrorKind::kCoverage,
                fmt::format("segment {}: reference does not cover {} .. {}",
                            reference.segment_id(), format_minute(window.first),
                            format_minute(window.last)));
  }
  if (!probe.present_over(shifted)) {
    throw Error(ErrorKind::kCoverage,
                fmt::format("segment {}: probe does not cover {} .. {} (offset {})",
                            probe.segment_id(), format_minute(shifted.first),
                            format_minute(shifted.last), offset));
  }

  const auto n = static_cast<std::size_t>(window.length());
  auto ref_begin = static_cast<std::size_t>((window.first - reference.start()).count());
  auto probe_begin = static_cast<std::size_t>((shifted.first - probe.start()).count());
  auto ref = reference.values().subspan(ref_begin, n);
  auto prb = probe.values().subspan(probe_begin, n);

  double abs_sum = 0.0, sq_sum = 0.0, ref_sum = 0.0, prb_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = *ref[i] - *prb[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    ref_sum += *ref[i];
    prb_sum += *prb[i];
  }
  const double count = static_cast<double>(n);
  ObjectiveTriple out;
  out.offset = offset;
  out.avd = abs_sum / count;
  out.svd = sq_sum / count;

  if (n >= 2) {
    double ref_mean = ref_sum / count;
    double prb_mean = prb_sum / count;
    double cov = 0.0, ref_var = 0.0, prb_var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double a = *ref[i] - ref_mean;
      double b = *prb[i] - prb_mean;
      cov += a * b;
      ref_var += a * a;
      prb_var += b * b;
    }
    // Sample moments; the n - 1 factors cancel in the ratio.
    double ref_sd = std::sqrt(ref_var / (count - 1));
    double prb_sd = std::sqrt(prb_var / (count - 1));
    bool ref_flat = ref_sd <= kFlatTolerance * std::max(1.0, std::abs(ref_mean));
    bool prb_flat = prb_sd <= kFlatTolerance * std::max(1.0, std::abs(prb_mean));
    if (!ref_flat && !prb_flat) {
      double r = (cov / (count - 1)) / (ref_sd * prb_sd);
      out.cor = std::clamp(r, -1.0, 1.0);
    }
  }
  return out;
}

LatencyEstimate estimate_latency(const SpeedSeries& reference,
                                 const SpeedSeries& probe, ShiftBounds bounds,
                                 MinuteRange window) {
  bounds.validate();
  LatencyEstimate est;
  est.window = window;
  est.bounds = bounds;
  est.curves.reserve(static_cast<std::size_t>(bounds.count()));
  for (int offset = bounds.lb; offset <= bounds.ub; ++offset) {
    est.curves.push_back(evaluate_objectives(reference, probe, offset, window));
  }

  // Strict comparisons over ascending offsets keep the smallest on ties.
  const ObjectiveTriple* best_avd = &est.curves.front();
  const ObjectiveTriple* best_svd = &est.curves.front();
  const ObjectiveTriple* best_cor = nullptr;
  for (const auto& c : est.curves) {
    if (c.avd < best_avd->avd) best_avd = &c;
    if (c.svd < best_svd->svd) best_svd = &c;
    if (c.cor && (!best_cor || *c.cor > *best_cor->cor)) best_cor = &c;
  }
  est.best_offset_avd = best_avd->offset;
  est.best_offset_svd = best_svd->offset;
  double total = est.best_offset_avd + est.best_offset_svd;
  int used = 2;
  if (best_cor) {
    est.best_offset_cor = best_cor->offset;
    total += best_cor->offset;
    ++used;
  }
  est.average_latency = total / used;
  return est;
}

}  // namespace probe_latency
