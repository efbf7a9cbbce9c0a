#include "probe_latency/synthetic.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace probe_latency::synthetic {

using std::chrono::minutes;
using std::chrono::seconds;

void ProfileSpec::validate() const {
  if (!(min_speed_mph > 0.0 && min_speed_mph < freeflow_mph)) {
    throw std::invalid_argument("profile: need 0 < min_speed < freeflow");
  }
  if (ramp_down_min < 0 || dwell_min < 0 || ramp_up_min < 0) {
    throw std::invalid_argument("profile: ramp and dwell lengths must be >= 0");
  }
  if (ramp_down_min + dwell_min + ramp_up_min < 2 ||
      ramp_down_min + dwell_min + ramp_up_min > total_min) {
    throw std::invalid_argument("profile: trapezoid must fit inside total");
  }
  if (!(noise_sigma_mph >= 0.0)) {
    throw std::invalid_argument("profile: noise_sigma must be >= 0");
  }
}

int ProfileSpec::lead_in_min() const {
  return (total_min - (ramp_down_min + dwell_min + ramp_up_min)) / 2;
}

double trapezoid_speed(const ProfileSpec& spec, int i, int delay_down, int delay_up) {
  const double ff = spec.freeflow_mph;
  const double lo = spec.min_speed_mph;
  const int lead = spec.lead_in_min();
  const int down_begin = lead + delay_down;
  const int down_end = down_begin + spec.ramp_down_min;
  const int up_begin = lead + spec.ramp_down_min + spec.dwell_min + delay_up;
  const int up_end = up_begin + spec.ramp_up_min;
  if (i <= down_begin) return ff;
  if (i < down_end) {
    return ff - (ff - lo) * static_cast<double>(i - down_begin) / spec.ramp_down_min;
  }
  if (i <= up_begin) return lo;
  if (i < up_end) {
    return lo + (ff - lo) * static_cast<double>(i - up_begin) / spec.ramp_up_min;
  }
  return ff;
}

SyntheticPair generate_pair(const ProfileSpec& spec, int inject_slowdown,
                            int inject_recovery) {
  spec.validate();
  const int shape = spec.ramp_down_min + spec.dwell_min + spec.ramp_up_min;
  const int tail = spec.total_min - spec.lead_in_min() - shape;
  if (inject_slowdown < 0 || inject_recovery < 0 || inject_slowdown > tail ||
      inject_recovery > tail) {
    throw std::invalid_argument(
        fmt::format("injected shifts must lie in [0, {}]", tail));
  }
  if (spec.dwell_min + inject_recovery - inject_slowdown < 0) {
    throw std::invalid_argument("injected shifts overlap the ramps");
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto noisy = [&](double v) {
    if (spec.noise_sigma_mph > 0.0) v += spec.noise_sigma_mph * noise(rng);
    return std::max(v, 1.0);
  };

  const auto n = static_cast<std::size_t>(spec.total_min);
  std::vector<double> reference(n), probe(n);
  for (std::size_t i = 0; i < n; ++i) {
    reference[i] = noisy(trapezoid_speed(spec, static_cast<int>(i)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    probe[i] = noisy(
        trapezoid_speed(spec, static_cast<int>(i), inject_slowdown, inject_recovery));
  }

  SyntheticPair pair;
  pair.reference = SpeedSeries::dense(spec.segment_id, spec.origin, reference,
                                      SeriesSource::kReference);
  pair.probe = SpeedSeries::dense(spec.segment_id, spec.origin, probe,
                                  SeriesSource::kProbe);
  pair.truth.segment_id = spec.segment_id;
  pair.truth.start = spec.origin + minutes(spec.lead_in_min());
  pair.truth.end = pair.truth.start + minutes(shape);
  pair.truth.transition =
      pair.truth.start + minutes(spec.ramp_down_min + spec.dwell_min / 2);
  pair.truth.period = classify_period(pair.truth.start);
  return pair;
}

namespace {

std::string device_name(std::uint64_t n) {
  // splitmix64 finalizer, so ids look like opaque hashes
  std::uint64_t z = n + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return fmt::format("{:016x}", z);
}

struct SegmentLayout {
  SegmentDefinition segment;
  std::vector<TmcPiece> pieces;
};

}  // namespace

Dataset synthesize_dataset(const ScenarioSpec& spec) {
  using namespace std::chrono;
  Dataset ds;
  ds.stations = {{"A1", "A", 0.0},  {"A2", "A", 0.0},  {"B1", "B", 1.69},
                 {"B2", "B", 1.69}, {"C1", "C", 2.86}, {"C2", "C", 2.86}};
  const std::vector<SegmentLayout> layout = {
      {{"AB", "A", "B", 1.69}, {{"110+04601", 1.00}, {"110+04602", 0.69}}},
      {{"BC", "B", "C", 1.17}, {{"110+04603", 1.17}}},
  };
  const sys_days day = 2015y / December / 4;
  const std::vector<Minute> origins = {Minute{day + hours(6) + minutes(30)},
                                       Minute{day + hours(16) + minutes(30)}};

  std::uint64_t device_counter = 0;
  std::uint64_t episode_index = 0;
  std::map<std::string, std::map<Minute, double>> tmc_points;

  for (const auto& seg : layout) {
    ds.segments.push_back(seg.segment);
    ds.tmc_map.push_back({seg.segment.segment_id, seg.pieces});
    const std::string& from = seg.segment.from_group;
    const std::string& to = seg.segment.to_group;

    for (Minute origin : origins) {
      ProfileSpec profile = spec.profile;
      profile.segment_id = seg.segment.segment_id;
      profile.origin = origin;
      profile.seed = spec.seed + episode_index++;
      auto pair = generate_pair(profile, spec.inject_slowdown, spec.inject_recovery);

      Episode ep = pair.truth;
      ep.transition.reset();
      ds.episodes.push_back(ep);

      for (std::size_t i = 0; i < pair.probe.size(); ++i) {
        Minute m = origin + minutes(i);
        for (const auto& piece : seg.pieces) {
          tmc_points[piece.tmc_code][m] = *pair.probe.values()[i];
        }
      }

      auto emit = [&](const std::string& group, int twin, Timestamp t,
                      const std::string& device) {
        ds.detections.push_back({group + std::to_string(twin), device, t});
      };
      const double length = seg.segment.length_mi;
      for (std::size_t i = 0; i < pair.reference.size(); ++i) {
        const Timestamp minute_start = time_point_cast<seconds>(origin + minutes(i));
        const double v = *pair.reference.values()[i];
        for (int j = 0; j < 4; ++j) {
          auto device = device_name(device_counter++);
          Timestamp arrive = minute_start + seconds(7 + 15 * j);
          auto tt = seconds(std::max<long>(1, std::lround(length / v * 3600.0)));
          int twin = 1 + j % 2;
          emit(from, twin, arrive - tt, device);
          emit(to, twin, arrive, device);
          if (j % 2 == 0) {
            // Seen again by the sensor on the other shoulder.
            emit(from, 3 - twin, arrive - tt + seconds(3), device);
            emit(to, 3 - twin, arrive + seconds(2), device);
          }
        }
        if (i % 10 == 3) {
          auto device = device_name(device_counter++);
          Timestamp arrive = minute_start + seconds(55);
          auto tt = seconds(std::lround(length / (0.3 * v) * 3600.0));
          emit(from, 1, arrive - tt, device);
          emit(to, 2, arrive, device);
        }
        if (i % 30 == 11) {
          // Stopped on the shoulder: slower than any plausible floor.
          auto device = device_name(device_counter++);
          Timestamp arrive = minute_start + seconds(45);
          auto tt = seconds(std::lround(length / 2.0 * 3600.0));
          emit(from, 2, arrive - tt, device);
          emit(to, 1, arrive, device);
        }
        if (i % 20 == 5) {
          emit(to, 1, minute_start + seconds(30), device_name(device_counter++));
        }
      }
    }
  }
  ds.detections.push_back({"Z9", device_name(device_counter++),
                           time_point_cast<seconds>(origins.front())});

  std::stable_sort(ds.detections.begin(), ds.detections.end(),
                   [](const DetectionRecord& a, const DetectionRecord& b) {
                     return std::tie(a.detected_at, a.station_id, a.device_id) <
                            std::tie(b.detected_at, b.station_id, b.device_id);
                   });

  for (const auto& [code, points] : tmc_points) {
    Minute first = points.begin()->first;
    Minute last = points.rbegin()->first;
    std::vector<std::optional<double>> values(
        static_cast<std::size_t>((last - first).count()) + 1);
    for (const auto& [m, v] : points) {
      values[static_cast<std::size_t>((m - first).count())] = v;
    }
    ds.tmc_speeds.emplace(code, SpeedSeries(code, first, std::move(values),
                                            SeriesSource::kProbe));
  }
  return ds;
}

}  // namespace probe_latency::synthetic
