#include "probe_latency/series_builder.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "probe_latency/error.h"

namespace probe_latency {

SpeedSeries::SpeedSeries(std::string segment_id, Minute start,
                         std::vector<std::optional<double>> values,
                         SeriesSource source)
    : segment_id_(std::move(segment_id)),
      start_(start),
      values_(std::move(values)),
      source_(source) {
  for (const auto& v : values_) {
    if (v && !(std::isfinite(*v) && *v > 0.0)) {
      throw std::invalid_argument(
          fmt::format("series {}: speed {} is not finite and positive",
                      segment_id_, *v));
    }
  }
}

SpeedSeries SpeedSeries::dense(std::string segment_id, Minute start,
                               std::span<const double> values,
                               SeriesSource source) {
  std::vector<std::optional<double>> v(values.begin(), values.end());
  return SpeedSeries(std::move(segment_id), start, std::move(v), source);
}

std::optional<double> SpeedSeries::at(Minute m) const {
  if (values_.empty() || m < start_ || m > last()) return std::nullopt;
  return values_[static_cast<std::size_t>((m - start_).count())];
}

bool SpeedSeries::present_over(MinuteRange range) const {
  if (range.empty()) return true;
  if (values_.empty() || range.first < start_ || range.last > last()) return false;
  auto first = static_cast<std::size_t>((range.first - start_).count());
  auto count = static_cast<std::size_t>(range.length());
  return std::all_of(values_.begin() + first, values_.begin() + first + count,
                     [](const auto& v) { return v.has_value(); });
}

bool SpeedSeries::gap_free() const { return missing_count() == 0; }

std::size_t SpeedSeries::missing_count() const {
  return static_cast<std::size_t>(std::count_if(
      values_.begin(), values_.end(), [](const auto& v) { return !v; }));
}

std::vector<double> SpeedSeries::dense_values() const {
  std::vector<double> out;
  out.reserve(values_.size());
  for (const auto& v : values_) {
    if (!v) throw std::invalid_argument("series " + segment_id_ + " has gaps");
    out.push_back(*v);
  }
  return out;
}

SpeedSeries SpeedSeries::slice(MinuteRange range) const {
  if (values_.empty()) return *this;
  Minute first = std::max(range.first, start_);
  Minute last_m = std::min(range.last, last());
  if (last_m < first) return SpeedSeries(segment_id_, first, {}, source_);
  auto offset = (first - start_).count();
  auto count = (last_m - first).count() + 1;
  std::vector<std::optional<double>> v(values_.begin() + offset,
                                       values_.begin() + offset + count);
  return SpeedSeries(segment_id_, first, std::move(v), source_);
}

SpeedSeries SpeedSeries::trimmed() const {
  auto first = std::find_if(values_.begin(), values_.end(),
                            [](const auto& v) { return v.has_value(); });
  if (first == values_.end()) return SpeedSeries(segment_id_, start_, {}, source_);
  auto last_it = std::find_if(values_.rbegin(), values_.rend(),
                              [](const auto& v) { return v.has_value(); });
  auto begin_idx = first - values_.begin();
  auto end_idx = values_.rend() - last_it;
  return SpeedSeries(segment_id_, start_ + std::chrono::minutes(begin_idx),
                     {values_.begin() + begin_idx, values_.begin() + end_idx},
                     source_);
}

MomentPair population_moments(std::span<const double> values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

std::vector<bool> sigma_keep_mask(std::span<const double> values, double k) {
  std::vector<bool> keep(values.size(), true);
  if (values.size() < 2) return keep;
  auto [mean, sd] = population_moments(values);
  double lo = mean - k * sd;
  double hi = mean + k * sd;
  for (std::size_t i = 0; i < values.size(); ++i) {
    keep[i] = values[i] >= lo && values[i] <= hi;
  }
  return keep;
}

IntervalSample filter_sigma(const IntervalSample& interval, double k) {
  auto keep = sigma_keep_mask(interval.speeds, k);
  IntervalSample out{interval.minute, {}};
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.speeds.push_back(interval.speeds[i]);
  }
  return out;
}

namespace {

enum class IntervalVerdict { kKept, kExcludedCov, kExcludedCount };

IntervalVerdict judge_interval(std::span<const double> speeds, double cov_max,
                               int min_count) {
  if (static_cast<int>(speeds.size()) < min_count || speeds.empty()) {
    return IntervalVerdict::kExcludedCount;
  }
  auto [mean, sd] = population_moments(speeds);
  if (!(mean > 0.0) || sd / mean > cov_max) return IntervalVerdict::kExcludedCov;
  return IntervalVerdict::kKept;
}

}  // namespace

std::optional<IntervalSample> validate_interval(const IntervalSample& interval,
                                                double cov_max, int min_count) {
  if (judge_interval(interval.speeds, cov_max, min_count) != IntervalVerdict::kKept) {
    return std::nullopt;
  }
  return interval;
}

SpeedSeries aggregate_intervals(std::span<const TravelTimeObservation> observations,
                                const SegmentDefinition& segment) {
  if (observations.empty()) {
    return SpeedSeries(segment.segment_id, Minute{}, {}, SeriesSource::kReference);
  }
  Minute first = floor_minute(observations.front().label());
  Minute last = first;
  for (const auto& o : observations) {
    first = std::min(first, floor_minute(o.label()));
    last = std::max(last, floor_minute(o.label()));
  }
  auto n = static_cast<std::size_t>((last - first).count()) + 1;
  std::vector<double> tt_sum(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (const auto& o : observations) {
    auto i = static_cast<std::size_t>((floor_minute(o.label()) - first).count());
    tt_sum[i] += o.travel_time_s;
    ++count[i];
  }
  std::vector<std::optional<double>> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (count[i] == 0) continue;
    double hours = tt_sum[i] / 3600.0;
    values[i] = static_cast<double>(count[i]) * segment.length_mi / hours;
  }
  return SpeedSeries(segment.segment_id, first, std::move(values),
                     SeriesSource::kReference);
}

ReferenceBuild build_reference_series(
    std::span<const TravelTimeObservation> observations,
    const SegmentDefinition& segment, const FilterParams& params) {
  ReferenceBuild build;
  build.stats.segment_id = segment.segment_id;

  std::map<Minute, std::vector<const TravelTimeObservation*>> buckets;
  for (const auto& o : observations) {
    if (o.segment_id != segment.segment_id) continue;
    buckets[floor_minute(o.label())].push_back(&o);
    ++build.stats.observations_in;
  }

  std::vector<TravelTimeObservation> survivors;
  for (const auto& [minute, bucket] : buckets) {
    ++build.stats.intervals;
    std::vector<double> speeds;
    speeds.reserve(bucket.size());
    for (const auto* o : bucket) speeds.push_back(o->speed_mph);

    auto keep = sigma_keep_mask(speeds, params.sigma_k);
    std::vector<const TravelTimeObservation*> kept;
    std::vector<double> kept_speeds;
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      if (keep[i]) {
        kept.push_back(bucket[i]);
        kept_speeds.push_back(speeds[i]);
      }
    }
    build.stats.dropped_sigma += bucket.size() - kept.size();

    switch (judge_interval(kept_speeds, params.cov_max, params.min_count)) {
      case IntervalVerdict::kExcludedCov:
        ++build.stats.intervals_excluded_cov;
        build.stats.dropped_interval += kept.size();
        continue;
      case IntervalVerdict::kExcludedCount:
        ++build.stats.intervals_excluded_count;
        build.stats.dropped_interval += kept.size();
        continue;
      case IntervalVerdict::kKept:
        break;
    }
    for (const auto* o : kept) survivors.push_back(*o);
  }
  build.stats.kept = survivors.size();
  build.series = aggregate_intervals(survivors, segment);
  return build;
}

void validate_mapping(const TmcMapping& mapping, const SegmentDefinition& segment) {
  if (mapping.pieces.empty()) {
    throw Error(ErrorKind::kConfig, "segment " + segment.segment_id + " has no TMC pieces");
  }
  double total = 0.0;
  for (const auto& p : mapping.pieces) {
    if (!(p.overlap_length_mi > 0.0)) {
      throw Error(ErrorKind::kConfig,
                  fmt::format("segment {}: TMC {} overlap must be positive",
                              segment.segment_id, p.tmc_code));
    }
    total += p.overlap_length_mi;
  }
  if (std::abs(total - segment.length_mi) > kConflationTolerance + 1e-12) {
    throw Error(ErrorKind::kConfig,
                fmt::format("segment {}: TMC pieces total {} mi but segment is {} mi",
                            segment.segment_id, total, segment.length_mi));
  }
}

SpeedSeries compose_probe_series(const std::map<std::string, SpeedSeries>& tmc_series,
                                 const TmcMapping& mapping,
                                 const SegmentDefinition& segment) {
  validate_mapping(mapping, segment);
  std::vector<const SpeedSeries*> pieces;
  std::optional<Minute> first, last;
  for (const auto& p : mapping.pieces) {
    auto it = tmc_series.find(p.tmc_code);
    if (it == tmc_series.end()) {
      throw Error(ErrorKind::kConfig, fmt::format("segment {}: no speeds for TMC {}",
                                                  segment.segment_id, p.tmc_code));
    }
    pieces.push_back(&it->second);
    if (it->second.empty()) continue;
    first = first ? std::min(*first, it->second.start()) : it->second.start();
    last = last ? std::max(*last, it->second.last()) : it->second.last();
  }
  if (!first) return SpeedSeries(segment.segment_id, Minute{}, {}, SeriesSource::kProbe);

  auto n = static_cast<std::size_t>((*last - *first).count()) + 1;
  std::vector<std::optional<double>> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    Minute m = *first + std::chrono::minutes(i);
    double hours = 0.0;
    double miles = 0.0;
    bool complete = true;
    for (std::size_t j = 0; j < pieces.size(); ++j) {
      auto v = pieces[j]->at(m);
      if (!v) {
        complete = false;
        break;
      }
      hours += mapping.pieces[j].overlap_length_mi / *v;
      miles += mapping.pieces[j].overlap_length_mi;
    }
    // Piece total rather than segment length, so equal piece speeds compose
    // to that speed exactly; the two agree within kConflationTolerance.
    if (complete) values[i] = miles / hours;
  }
  return SpeedSeries(segment.segment_id, *first, std::move(values), SeriesSource::kProbe);
}

}  // namespace probe_latency
