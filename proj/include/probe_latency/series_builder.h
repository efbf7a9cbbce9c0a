#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probe_latency/reference_ingest.h"
#include "probe_latency/time.h"

namespace probe_latency {

enum class SeriesSource { kReference, kProbe };

/// Per-minute speeds for one segment over a contiguous span of minutes.
/// Missing minutes are nullopt. Present values are finite and > 0.
class SpeedSeries {
 public:
  SpeedSeries() = default;
  SpeedSeries(std::string segment_id, Minute start,
              std::vector<std::optional<double>> values, SeriesSource source);

  /// Builds a gap-free series from dense values.
  static SpeedSeries dense(std::string segment_id, Minute start,
                           std::span<const double> values,
                           SeriesSource source);

  const std::string& segment_id() const { return segment_id_; }
  SeriesSource source() const { return source_; }
  Minute start() const { return start_; }
  /// Last minute covered; only meaningful when !empty().
  Minute last() const {
    return start_ + std::chrono::minutes(static_cast<long>(values_.size()) - 1);
  }
  MinuteRange span() const { return {start(), last()}; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<const std::optional<double>> values() const { return values_; }
  /// nullopt when `m` is outside the span or missing.
  std::optional<double> at(Minute m) const;
  bool present_over(MinuteRange range) const;
  bool gap_free() const;
  std::size_t missing_count() const;

  /// Present values in order; throws std::invalid_argument if any gaps.
  std::vector<double> dense_values() const;

  /// Sub-series over `range` intersected with this series' span.
  SpeedSeries slice(MinuteRange range) const;
  /// Drops leading and trailing missing minutes.
  SpeedSeries trimmed() const;

 private:
  std::string segment_id_;
  Minute start_{};
  std::vector<std::optional<double>> values_;
  SeriesSource source_ = SeriesSource::kReference;
};

/// Speeds observed in one minute.
struct IntervalSample {
  Minute minute{};
  std::vector<double> speeds;
};

/// Population mean and standard deviation.
struct MomentPair {
  double mean = 0.0;
  double stddev = 0.0;
};
MomentPair population_moments(std::span<const double> values);

/// keep[i] is true when values[i] lies within mean +/- k sigma (population).
/// Fewer than two values are always kept.
std::vector<bool> sigma_keep_mask(std::span<const double> values, double k);

IntervalSample filter_sigma(const IntervalSample& interval, double k = 1.5);

/// nullopt (excluded) when COV > cov_max or fewer than min_count speeds.
std::optional<IntervalSample> validate_interval(const IntervalSample& interval,
                                                double cov_max = 1.0,
                                                int min_count = 3);

/// Space-mean speed per minute: n * length / sum(travel time). Observations
/// are bucketed by the minute of their downstream label. Minutes with no
/// observations inside the span are missing.
SpeedSeries aggregate_intervals(std::span<const TravelTimeObservation> observations,
                                const SegmentDefinition& segment);

struct FilterParams {
  double sigma_k = 1.5;
  double cov_max = 1.0;
  int min_count = 3;
};

struct FilterStats {
  std::string segment_id;
  std::size_t observations_in = 0;
  std::size_t dropped_sigma = 0;
  std::size_t dropped_interval = 0;
  std::size_t kept = 0;
  std::size_t intervals = 0;
  std::size_t intervals_excluded_cov = 0;
  std::size_t intervals_excluded_count = 0;
};

struct ReferenceBuild {
  SpeedSeries series;
  FilterStats stats;
};

/// Sigma filter, then COV and count gates, per minute; survivors are
/// aggregated into a reference series.
ReferenceBuild build_reference_series(
    std::span<const TravelTimeObservation> observations,
    const SegmentDefinition& segment, const FilterParams& params = {});

struct TmcPiece {
  std::string tmc_code;
  double overlap_length_mi = 0.0;
};

/// Ordered TMC pieces that tile one reference segment.
struct TmcMapping {
  std::string segment_id;
  std::vector<TmcPiece> pieces;
};

inline constexpr double kConflationTolerance = 0.01;  // miles

/// Throws Error(kConfig) if pieces are empty, non-positive, or their total
/// length differs from the segment by more than 0.01 mi.
void validate_mapping(const TmcMapping& mapping,
                      const SegmentDefinition& segment);

/// Length-weighted conflation: per minute, segment travel time is the sum of
/// piece travel times and the composed speed is length over that. A minute is
/// missing if any piece is missing. Spans the union of the piece series.
SpeedSeries compose_probe_series(
    const std::map<std::string, SpeedSeries>& tmc_series,
    const TmcMapping& mapping, const SegmentDefinition& segment);

}  // namespace probe_latency
