#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "probe_latency/episode_analysis.h"
#include "probe_latency/reference_ingest.h"
#include "probe_latency/series_builder.h"

namespace probe_latency::synthetic {

/// Trapezoidal slowdown: free flow, linear ramp down, dwell at the trough,
/// linear ramp up, free flow. The trapezoid is centered in `total_min`.
struct ProfileSpec {
  std::string segment_id = "SYN";
  Minute origin{};
  double freeflow_mph = 65.0;
  double min_speed_mph = 25.0;
  int ramp_down_min = 10;
  int dwell_min = 20;
  int ramp_up_min = 15;
  int total_min = 120;
  double noise_sigma_mph = 2.0;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
  int lead_in_min() const;
};

struct SyntheticPair {
  SpeedSeries reference;
  SpeedSeries probe;
  Episode truth;  // transition at the middle of the dwell
};

/// Reference is the trapezoid plus seeded noise. The probe is the same
/// trapezoid with the ramp down delayed `inject_slowdown` minutes and the ramp
/// up delayed `inject_recovery` minutes, plus independent noise.
SyntheticPair generate_pair(const ProfileSpec& spec, int inject_slowdown,
                            int inject_recovery);

/// Noiseless trapezoid value at minute index `i` with knots delayed.
double trapezoid_speed(const ProfileSpec& spec, int i, int delay_down = 0,
                       int delay_up = 0);

/// Inputs for the CLI pipeline in the same shape the real ingest expects.
struct Dataset {
  std::vector<Station> stations;
  std::vector<SegmentDefinition> segments;
  std::vector<DetectionRecord> detections;
  std::map<std::string, SpeedSeries> tmc_speeds;
  std::vector<TmcMapping> tmc_map;
  std::vector<Episode> episodes;
};

struct ScenarioSpec {
  ProfileSpec profile;  // segment_id and origin are overridden per episode
  int inject_slowdown = 4;
  int inject_recovery = 4;
  std::uint64_t seed = 1;
};

/// Two segments with one morning and one afternoon episode each. Detections
/// are derived from the reference speeds (four matched devices per minute,
/// twin-sensor duplicates, periodic outliers and stopped vehicles); probe
/// speeds are split over TMC pieces.
Dataset synthesize_dataset(const ScenarioSpec& spec);

}  // namespace probe_latency::synthetic
