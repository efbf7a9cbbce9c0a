#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probe_latency/gap_fill_smooth.h"
#include "probe_latency/latency_core.h"
#include "probe_latency/series_builder.h"

namespace probe_latency {

enum class Period { kAm, kPm, kOther };

std::string_view to_string(Period p);
/// Accepts AM, PM, other (case-insensitive). Throws std::invalid_argument.
Period parse_period(std::string_view text);
/// AM 05:00-11:59, PM 12:00-20:00 local, otherwise other.
Period classify_period(Minute start,
                       std::chrono::minutes utc_offset = std::chrono::minutes{0});

struct Episode {
  std::string segment_id;
  Minute start{};
  Minute end{};
  Period period = Period::kOther;
  std::optional<Minute> transition;

  MinuteRange window() const { return {start, end}; }
};

/// Throws std::invalid_argument if start >= end or a given transition is not
/// strictly inside the episode.
void validate_episode(const Episode& episode);

/// Earliest minute of minimum reference speed strictly inside the episode.
/// Throws Error(kNoTransition) for a flat profile and Error(kCoverage) if the
/// reference is missing inside the episode.
Minute find_transition(const SpeedSeries& reference, const Episode& episode);

struct EpisodeLatencyReport {
  Episode episode;
  Minute transition{};
  LatencyEstimate full_window;
  LatencyEstimate slowdown_phase;  // [start, transition]
  LatencyEstimate recovery_phase;  // [transition, end]
};

inline constexpr int kDefaultMinPhaseMinutes = 10;

/// Estimates latency over the whole episode and over each phase, split at
/// the given transition or at find_transition. Inputs must already be
/// prepared. Throws Error(kPhaseTooShort) when a phase lasts fewer than
/// `min_phase_min` minutes; coverage errors propagate.
EpisodeLatencyReport analyze_episode(const SpeedSeries& reference,
                                     const SpeedSeries& probe,
                                     const Episode& episode,
                                     ShiftBounds bounds,
                                     int min_phase_min = kDefaultMinPhaseMinutes);

struct PreparedWindow {
  SpeedSeries reference;
  SpeedSeries probe;
};

/// Cuts both raw series to the episode plus the shift range and a smoothing
/// margin, fills short gaps and smooths both identically.
/// Throws Error(kCoverage) or Error(kExcludedWindow).
PreparedWindow prepare_episode_window(const SpeedSeries& reference,
                                      const SpeedSeries& probe,
                                      const Episode& episode,
                                      ShiftBounds bounds, GapPolicy gaps,
                                      const SmoothingKernel& kernel);

// ---------------------------------------------------------------------------
// Summaries

struct ObjectiveMeans {
  std::size_t count = 0;
  double avd = 0.0;
  double svd = 0.0;
  std::optional<double> cor;  // over episodes with a defined COR offset
  double average = 0.0;
};

/// Histogram of average latencies rounded to whole minutes.
struct LatencyDistribution {
  std::map<int, std::size_t> histogram;
  std::map<int, double> cumulative;

  /// Smallest bin whose cumulative fraction reaches 0.95.
  int p95() const;
  /// Fraction of values at or below `minutes`.
  double cumulative_at(int minutes) const;
};

LatencyDistribution latency_distribution(std::span<const double> latencies);

struct PeriodSummaryRow {
  std::string period;  // AM, PM, other, overall
  ObjectiveMeans means;
  int p95 = 0;
};

struct SegmentSummaryRow {
  std::string segment_id;
  double length_mi = 0.0;
  ObjectiveMeans means;
};

struct PhaseSummaryRow {
  std::string period;
  std::string scenario;  // slowdown, recovery
  ObjectiveMeans means;
};

struct Summary {
  std::vector<PeriodSummaryRow> periods;
  std::vector<SegmentSummaryRow> segments;  // by length, then id; plus mean row
  std::vector<PhaseSummaryRow> phases;
  LatencyDistribution distribution;
};

inline constexpr std::string_view kAllSegmentsRow = "all_segments";

/// Table-style aggregates over analyzed episodes. `segment_lengths` maps
/// segment id to miles. Throws Error(kEmptyReport) for no reports.
Summary summarize(std::span<const EpisodeLatencyReport> reports,
                  const std::map<std::string, double>& segment_lengths);

// ---------------------------------------------------------------------------
// Advisory episode detection

struct DetectionParams {
  double freeflow_mph = 0.0;
  double drop_fraction = 0.7;     // trigger below drop_fraction * freeflow
  double recover_fraction = 0.95; // extend until back above this fraction
  int merge_gap_min = 10;
  std::chrono::minutes utc_offset{0};
};

/// High-percentile (85th) speed of the present values.
double estimate_freeflow(const SpeedSeries& reference);

/// Windows where speed dips below drop_fraction * freeflow, widened to the
/// nearest minutes at or above recover_fraction * freeflow. Windows closer
/// than merge_gap_min are merged.
std::vector<Episode> detect_episodes(const SpeedSeries& reference,
                                     const DetectionParams& params);

}  // namespace probe_latency
