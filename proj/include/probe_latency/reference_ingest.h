#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "probe_latency/time.h"

namespace probe_latency {

/// One device sighting at one station.
struct DetectionRecord {
  std::string station_id;
  std::string device_id;  // already hashed upstream
  Timestamp detected_at;
};

struct Station {
  std::string station_id;
  std::string co_location_group;
  double position_mi = 0.0;
};

/// Directed road segment between two deployment points.
struct SegmentDefinition {
  std::string segment_id;
  std::string from_group;
  std::string to_group;
  double length_mi = 0.0;
};

/// A matched upstream-to-downstream passage. Its time label is `arrived_at`.
struct TravelTimeObservation {
  std::string segment_id;
  std::string device_id;
  Timestamp departed_at;
  Timestamp arrived_at;
  double travel_time_s = 0.0;
  double speed_mph = 0.0;

  Timestamp label() const { return arrived_at; }
};

/// Speed in mph for a length in miles covered in `travel_time_s` seconds.
inline double speed_from_travel_time(double length_mi, double travel_time_s) {
  return length_mi / (travel_time_s / 3600.0);
}

/// A canonical sighting: the earliest detection of one passage of a device
/// past a co-location group.
struct Passage {
  DetectionRecord record;
  std::string group;
};

struct RejectedRecord {
  std::size_t index = 0;  // position in the input list
  DetectionRecord record;
  std::string reason;
};

struct CanonicalizeResult {
  std::vector<Passage> passages;
  std::vector<RejectedRecord> rejected;
};

inline constexpr std::chrono::minutes kDefaultPassageGap{30};
inline constexpr double kDefaultMinSpeedMph = 5.0;

/// Throws Error(kConfig) on duplicate station ids or co-located stations
/// whose positions differ by more than 0.01 mi.
void validate_stations(std::span<const Station> stations);
/// Throws Error(kConfig) on duplicate ids, from == to, or length <= 0.
void validate_segments(std::span<const SegmentDefinition> segments);

/// Collapses twin sensors at one deployment point and repeated sightings
/// during a dwell into one sighting per passage. Per (device, group),
/// consecutive detections closer than `passage_gap` collapse to the earliest.
/// Records naming an unknown station are reported, not fatal. Output is
/// sorted by time.
CanonicalizeResult canonicalize_passages(
    std::span<const DetectionRecord> detections,
    std::span<const Station> stations,
    std::chrono::seconds passage_gap = kDefaultPassageGap);

struct SegmentMatchStats {
  std::string segment_id;
  std::size_t upstream_passages = 0;
  std::size_t matched = 0;        // upstream sighting followed by downstream
  std::size_t dropped_floor = 0;  // matched but slower than min_speed
  std::size_t kept = 0;
};

struct MatchResult {
  std::vector<TravelTimeObservation> observations;  // sorted per segment
  std::vector<SegmentMatchStats> stats;             // one per segment
};

/// Re-identifies devices between the two groups of each segment. Each
/// upstream sighting pairs with the device's next downstream sighting; a
/// newer upstream sighting replaces a pending one. Pairs slower than
/// `min_speed_mph` are dropped and counted.
MatchResult match_detections(std::span<const Passage> passages,
                             std::span<const SegmentDefinition> segments,
                             double min_speed_mph = kDefaultMinSpeedMph);

}  // namespace probe_latency
