#include "probe_latency/reference_ingest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>

#include "probe_latency/error.h"

namespace probe_latency {
namespace {

constexpr double kColocationTolerance = 0.01;  // miles

bool earlier(const Passage& a, const Passage& b) {
  return std::tie(a.record.detected_at, a.record.device_id, a.group,
                  a.record.station_id) <
         std::tie(b.record.detected_at, b.record.device_id, b.group,
                  b.record.station_id);
}

}  // namespace

void validate_stations(std::span<const Station> stations) {
  std::set<std::string> ids;
  std::map<std::string, double> group_position;
  for (const auto& s : stations) {
    if (s.station_id.empty() || s.co_location_group.empty()) {
      throw Error(ErrorKind::kConfig, "station with empty id or group");
    }
    if (!ids.insert(s.station_id).second) {
      throw Error(ErrorKind::kConfig, "duplicate station " + s.station_id);
    }
    auto [it, inserted] = group_position.emplace(s.co_location_group, s.position_mi);
    if (!inserted && std::abs(it->second - s.position_mi) > kColocationTolerance) {
      throw Error(ErrorKind::kConfig,
                  fmt::format("station {} is {} mi from the rest of group {}",
                              s.station_id, std::abs(it->second - s.position_mi),
                              s.co_location_group));
    }
  }
}

void validate_segments(std::span<const SegmentDefinition> segments) {
  std::set<std::string> ids;
  for (const auto& seg : segments) {
    if (!ids.insert(seg.segment_id).second) {
      throw Error(ErrorKind::kConfig, "duplicate segment " + seg.segment_id);
    }
    if (seg.from_group == seg.to_group) {
      throw Error(ErrorKind::kConfig,
                  "segment " + seg.segment_id + " starts and ends at the same group");
    }
    if (!(seg.length_mi > 0.0) || !std::isfinite(seg.length_mi)) {
      throw Error(ErrorKind::kConfig,
                  "segment " + seg.segment_id + " must have positive length");
    }
  }
}

CanonicalizeResult canonicalize_passages(
    std::span<const DetectionRecord> detections,
    std::span<const Station> stations, std::chrono::seconds passage_gap) {
  std::unordered_map<std::string, const Station*> by_id;
  for (const auto& s : stations) by_id.emplace(s.station_id, &s);

  CanonicalizeResult result;
  std::vector<Passage> resolved;
  resolved.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& d = detections[i];
    auto it = by_id.find(d.station_id);
    if (it == by_id.end()) {
      result.rejected.push_back({i, d, "unknown station " + d.station_id});
      continue;
    }
    if (d.device_id.empty()) {
      result.rejected.push_back({i, d, "empty device id"});
      continue;
    }
    resolved.push_back({d, it->second->co_location_group});
  }

  // Group by (device, group) then time so each run can be collapsed.
  std::sort(resolved.begin(), resolved.end(), [](const Passage& a, const Passage& b) {
    return std::tie(a.record.device_id, a.group, a.record.detected_at,
                    a.record.station_id) <
           std::tie(b.record.device_id, b.group, b.record.detected_at,
                    b.record.station_id);
  });

  for (std::size_t i = 0; i < resolved.size(); ++i) {
    const auto& cur = resolved[i];
    if (i > 0) {
      const auto& prev = resolved[i - 1];
      if (prev.record.device_id == cur.record.device_id && prev.group == cur.group &&
          cur.record.detected_at - prev.record.detected_at < passage_gap) {
        continue;
      }
    }
    result.passages.push_back(cur);
  }
  std::sort(result.passages.begin(), result.passages.end(), earlier);
  return result;
}

MatchResult match_detections(std::span<const Passage> passages,
                             std::span<const SegmentDefinition> segments,
                             double min_speed_mph) {
  // Per device, its passages in time order.
  std::map<std::string, std::vector<const Passage*>> by_device;
  for (const auto& p : passages) by_device[p.record.device_id].push_back(&p);
  for (auto& [device, list] : by_device) {
    std::sort(list.begin(), list.end(),
              [](const Passage* a, const Passage* b) { return earlier(*a, *b); });
  }

  MatchResult result;
  for (const auto& seg : segments) {
    SegmentMatchStats stats;
    stats.segment_id = seg.segment_id;
    std::vector<TravelTimeObservation> seg_obs;

    for (const auto& [device, list] : by_device) {
      std::optional<Timestamp> pending;
      for (const Passage* p : list) {
        if (p->group == seg.from_group) {
          ++stats.upstream_passages;
          pending = p->record.detected_at;
        } else if (p->group == seg.to_group && pending) {
          auto travel = (p->record.detected_at - *pending).count();
          if (travel > 0) {
            ++stats.matched;
            double tt = static_cast<double>(travel);
            double speed = speed_from_travel_time(seg.length_mi, tt);
            if (speed < min_speed_mph) {
              ++stats.dropped_floor;
            } else {
              seg_obs.push_back({seg.segment_id, device, *pending,
                                 p->record.detected_at, tt, speed});
            }
          }
          pending.reset();
        }
      }
    }
    std::sort(seg_obs.begin(), seg_obs.end(),
              [](const TravelTimeObservation& a, const TravelTimeObservation& b) {
                return std::tie(a.arrived_at, a.device_id) <
                       std::tie(b.arrived_at, b.device_id);
              });
    stats.kept = seg_obs.size();
    result.stats.push_back(stats);
    result.observations.insert(result.observations.end(), seg_obs.begin(),
                               seg_obs.end());
  }
  return result;
}

}  // namespace probe_latency
