#include "probe_latency/pipeline.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <variant>

#include <fmt/format.h>

#include "probe_latency/csv.h"
#include "probe_latency/error.h"

namespace probe_latency::pipeline {

namespace fs = std::filesystem;
using std::chrono::minutes;

namespace columns {
const std::vector<std::string> kLatency = {
    "segment_id", "window_start", "window_end", "offset_avd",
    "offset_svd", "offset_cor",   "average_latency"};
const std::vector<std::string> kEpisodeReport = {
    "segment_id",          "start",
    "end",                 "period",
    "transition",          "status",
    "offset_avd",          "offset_svd",
    "offset_cor",          "average_latency",
    "slowdown_offset_avd", "slowdown_offset_svd",
    "slowdown_offset_cor", "slowdown_average",
    "recovery_offset_avd", "recovery_offset_svd",
    "recovery_offset_cor", "recovery_average",
    "best_correlation",    "message"};
const std::vector<std::string> kSummaryPeriod = {
    "period", "n_observations", "f1_avd", "f2_svd", "f3_cor", "average", "p95_latency_min"};
const std::vector<std::string> kSummarySegment = {
    "segment_id", "length_mi", "n_observations", "f1_avd", "f2_svd", "f3_cor", "average"};
const std::vector<std::string> kSummaryPhase = {
    "period", "scenario", "n_observations", "f1_avd", "f2_svd", "f3_cor", "average"};
const std::vector<std::string> kDistribution = {"latency_min", "count",
                                                "cumulative_fraction"};
const std::vector<std::string> kPlotDistribution = {"period", "latency_min", "count",
                                                    "cumulative_fraction"};
const std::vector<std::string> kAlignedSeries = {"t", "ref_speed", "probe_speed",
                                                 "probe_shifted_speed"};
const std::vector<std::string> kObjectiveCurves = {
    "segment_id", "episode_start", "window", "offset", "avd", "svd", "cor"};
const std::vector<std::string> kIngestStats = {
    "segment_id",     "upstream_passages", "matched",
    "dropped_floor",  "dropped_sigma",     "dropped_interval",
    "kept",           "intervals",         "intervals_excluded_cov",
    "intervals_excluded_count"};
}  // namespace columns

namespace {

const std::vector<std::string> kObservationColumns = {
    "segment_id", "device_id", "departed_at", "arrived_at", "travel_time_s", "speed_mph"};
const std::vector<std::string> kMatchStatsColumns = {
    "segment_id", "upstream_passages", "matched", "dropped_floor", "kept"};
const std::vector<std::string> kSeriesColumns = {"segment_id", "minute", "speed_mph"};
const std::vector<std::string> kWindowColumns = {"segment_id", "episode_start", "minute",
                                                 "ref_speed", "probe_speed"};
const std::vector<std::string> kWindowErrorColumns = {"segment_id", "window_start",
                                                      "window_end", "kind", "message"};

// ---------------------------------------------------------------------------
// Helpers

bool selected(const RunOptions& o, const std::string& segment_id) {
  return o.segments.empty() ||
         std::find(o.segments.begin(), o.segments.end(), segment_id) != o.segments.end();
}

fs::path input(const RunOptions& o, const char* name) { return o.input_dir / name; }
fs::path output(const RunOptions& o, const char* name) { return o.out_dir / name; }

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorKind::kIo, "file not found", p.string());
}

Timestamp timestamp_field(const csv::Reader& r, std::string_view column) {
  try {
    return parse_timestamp(r.field(column));
  } catch (const std::invalid_argument& e) {
    r.fail(fmt::format("column '{}': {}", column, e.what()));
  }
}

Minute minute_field(const csv::Reader& r, std::string_view column) {
  return floor_minute(timestamp_field(r, column));
}

std::optional<double> optional_number(const csv::Reader& r, std::string_view column) {
  if (r.field(column).empty()) return std::nullopt;
  return r.number(column);
}

std::string one_field(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

std::string offset_text(std::optional<int> v) { return v ? std::to_string(*v) : ""; }

// Runs f(i) for i in [0, n) on up to `jobs` threads; results keep index order.
template <typename F>
auto parallel_map(std::size_t n, int jobs, F f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  auto worker = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n; i += stride) slots[i].emplace(f(i));
  };
  std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1,
                                                std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::future<void>> pending;
    for (std::size_t t = 0; t < threads; ++t) {
      pending.push_back(std::async(std::launch::async, worker, t, threads));
    }
    for (auto& p : pending) p.get();
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Input readers

std::vector<Station> read_stations(const fs::path& path) {
  require_file(path);
  csv::Reader r(path, {"station_id", "co_location_group", "position_mi"});
  std::vector<Station> out;
  while (r.next()) {
    out.push_back({std::string(r.field("station_id")),
                   std::string(r.field("co_location_group")), r.number("position_mi")});
  }
  try {
    validate_stations(out);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.message(), path.string());
  }
  return out;
}

std::vector<SegmentDefinition> read_segments(const fs::path& path) {
  require_file(path);
  csv::Reader r(path, {"segment_id", "from_group", "to_group", "length_mi"});
  std::vector<SegmentDefinition> out;
  while (r.next()) {
    out.push_back({std::string(r.field("segment_id")), std::string(r.field("from_group")),
                   std::string(r.field("to_group")), r.number("length_mi")});
  }
  try {
    validate_segments(out);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.message(), path.string());
  }
  return out;
}

std::vector<DetectionRecord> read_detections(const fs::path& path) {
  require_file(path);
  csv::Reader r(path, {"station_id", "device_id", "detected_at"});
  std::vector<DetectionRecord> out;
  while (r.next()) {
    out.push_back({std::string(r.field("station_id")), std::string(r.field("device_id")),
                   timestamp_field(r, "detected_at")});
  }
  if (out.empty()) {
    throw Error(ErrorKind::kIngest, "no detection records", path.string());
  }
  return out;
}

// Rows keyed by id, each with its own contiguous minute span.
std::map<std::string, SpeedSeries> read_minute_series(const fs::path& path,
                                                      const std::vector<std::string>& cols,
                                                      SeriesSource source,
                                                      bool allow_missing) {
  require_file(path);
  const std::string& id_col = cols[0];
  const std::string& minute_col = cols[1];
  const std::string& speed_col = cols[2];
  csv::Reader r(path, cols);
  std::map<std::string, std::map<Minute, std::optional<double>>> points;
  while (r.next()) {
    auto id = std::string(r.field(id_col));
    Timestamp t = timestamp_field(r, minute_col);
    Minute m = floor_minute(t);
    if (Timestamp(m) != t) r.fail("minute must be truncated to :00 seconds");
    std::optional<double> v;
    if (!r.field(speed_col).empty() || !allow_missing) {
      v = r.number(speed_col);
      if (!(*v > 0.0)) r.fail(fmt::format("speed must be positive, got {}", *v));
    }
    if (!points[id].emplace(m, v).second) {
      r.fail(fmt::format("duplicate minute {} for {}", format_minute(m), id));
    }
  }
  std::map<std::string, SpeedSeries> out;
  for (auto& [id, pts] : points) {
    Minute first = pts.begin()->first;
    Minute last = pts.rbegin()->first;
    std::vector<std::optional<double>> values(static_cast<std::size_t>((last - first).count()) + 1);
    for (auto& [m, v] : pts) values[static_cast<std::size_t>((m - first).count())] = v;
    out.emplace(id, SpeedSeries(id, first, std::move(values), source));
  }
  return out;
}

std::map<std::string, TmcMapping> read_tmc_map(const fs::path& path) {
  require_file(path);
  csv::Reader r(path, {"segment_id", "tmc_code", "overlap_length_mi", "piece_order"});
  std::map<std::string, std::map<long long, TmcPiece>> ordered;
  while (r.next()) {
    auto seg = std::string(r.field("segment_id"));
    auto order = r.integer("piece_order");
    TmcPiece piece{std::string(r.field("tmc_code")), r.number("overlap_length_mi")};
    if (!ordered[seg].emplace(order, piece).second) {
      r.fail(fmt::format("duplicate piece_order {} for segment {}", order, seg));
    }
  }
  std::map<std::string, TmcMapping> out;
  for (auto& [seg, pieces] : ordered) {
    TmcMapping m{seg, {}};
    for (auto& [order, piece] : pieces) m.pieces.push_back(piece);
    out.emplace(seg, std::move(m));
  }
  return out;
}

std::vector<Episode> read_episodes(const fs::path& path) {
  csv::Reader r(path, {"segment_id", "start", "end", "period"}, {"transition"});
  std::vector<Episode> out;
  while (r.next()) {
    Episode e;
    e.segment_id = std::string(r.field("segment_id"));
    e.start = minute_field(r, "start");
    e.end = minute_field(r, "end");
    try {
      e.period = parse_period(r.field("period"));
    } catch (const std::invalid_argument& ex) {
      r.fail(ex.what());
    }
    if (!r.field("transition").empty()) e.transition = minute_field(r, "transition");
    try {
      validate_episode(e);
    } catch (const std::invalid_argument& ex) {
      r.fail(ex.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writers

void write_series(const fs::path& path, const std::map<std::string, SpeedSeries>& series,
                  const std::vector<std::string>& cols) {
  auto out = csv::open_writer(path, cols);
  for (const auto& [id, s] : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto v = s.values()[i];
      out << id << ',' << format_minute(s.start() + minutes(i)) << ','
          << (v ? csv::exact(*v) : "") << '\n';
    }
  }
}

void write_episodes(const fs::path& path, std::span<const Episode> episodes) {
  auto out = csv::open_writer(path, {"segment_id", "start", "end", "period", "transition"});
  for (const auto& e : episodes) {
    out << e.segment_id << ',' << format_minute(e.start) << ',' << format_minute(e.end)
        << ',' << to_string(e.period) << ',' << (e.transition ? format_minute(*e.transition) : "")
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Shared stage plumbing

struct PreparedInputs {
  std::vector<SegmentDefinition> segments;
  std::map<std::string, SpeedSeries> reference;
  std::map<std::string, SpeedSeries> probe;
  std::vector<Episode> episodes;
};

PreparedInputs load_prepared(const RunOptions& o, std::ostream& log) {
  PreparedInputs in;
  in.segments = read_segments(input(o, files::kSegments));
  in.reference = read_minute_series(output(o, files::kReferenceSeries), kSeriesColumns,
                                    SeriesSource::kReference, true);
  in.probe = read_minute_series(output(o, files::kProbeSeries), kSeriesColumns,
                                SeriesSource::kProbe, true);

  std::set<std::string> known;
  for (const auto& s : in.segments) known.insert(s.segment_id);

  fs::path episodes_path = input(o, files::kEpisodes);
  if (fs::exists(episodes_path)) {
    in.episodes = read_episodes(episodes_path);
    for (const auto& e : in.episodes) {
      if (!known.count(e.segment_id)) {
        throw Error(ErrorKind::kConfig, "episode names unknown segment " + e.segment_id,
                    episodes_path.string());
      }
    }
  } else {
    log << "warning: " << episodes_path.string()
        << " not found; using advisory episode detection\n";
    for (const auto& [id, ref] : in.reference) {
      if (!selected(o, id)) continue;
      double freeflow = o.config.freeflow_mph.value_or(estimate_freeflow(ref));
      auto found = detect_episodes(ref, o.config.detection(freeflow));
      in.episodes.insert(in.episodes.end(), found.begin(), found.end());
    }
    write_episodes(output(o, files::kDetectedEpisodes), in.episodes);
  }
  std::erase_if(in.episodes, [&](const Episode& e) { return !selected(o, e.segment_id); });
  return in;
}

using WindowResult = std::variant<PreparedWindow, Error>;

WindowResult prepare_for(const RunOptions& o, const PreparedInputs& in, const Episode& e) {
  auto ref = in.reference.find(e.segment_id);
  auto prb = in.probe.find(e.segment_id);
  if (ref == in.reference.end() || prb == in.probe.end()) {
    return Error(ErrorKind::kCoverage, "no " +
                                           std::string(ref == in.reference.end() ? "reference"
                                                                                  : "probe") +
                                           " series for segment " + e.segment_id);
  }
  try {
    return prepare_episode_window(ref->second, prb->second, e, o.config.bounds(),
                                  o.config.gaps(), o.config.kernel());
  } catch (const Error& err) {
    return err;
  }
}

void write_curves(std::ostream& out, const std::string& segment_id, Minute episode_start,
                  std::string_view label, const LatencyEstimate& est) {
  for (const auto& c : est.curves) {
    out << segment_id << ',' << format_minute(episode_start) << ',' << label << ','
        << c.offset << ',' << csv::fixed(c.avd, 6) << ',' << csv::fixed(c.svd, 6) << ','
        << csv::fixed(c.cor, 6) << '\n';
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages

void run_ingest(const RunOptions& o, std::ostream& log) {
  o.config.validate();
  auto stations = read_stations(input(o, files::kStations));
  auto segments = read_segments(input(o, files::kSegments));
  auto detections = read_detections(input(o, files::kDetections));
  std::erase_if(segments, [&](const SegmentDefinition& s) { return !selected(o, s.segment_id); });

  std::set<std::string> groups;
  for (const auto& s : stations) groups.insert(s.co_location_group);
  for (const auto& seg : segments) {
    for (const auto& g : {seg.from_group, seg.to_group}) {
      if (!groups.count(g)) {
        throw Error(ErrorKind::kConfig,
                    "segment " + seg.segment_id + " names unknown group " + g,
                    input(o, files::kSegments).string());
      }
    }
  }

  auto canonical = canonicalize_passages(detections, stations,
                                         std::chrono::minutes(o.config.passage_gap_min));
  if (!canonical.rejected.empty()) {
    log << "warning: " << canonical.rejected.size() << " detection records rejected\n";
  }
  auto matched = match_detections(canonical.passages, segments, o.config.min_speed_mph);

  fs::create_directories(o.out_dir);
  {
    auto out = csv::open_writer(output(o, files::kObservations), kObservationColumns);
    for (const auto& ob : matched.observations) {
      out << ob.segment_id << ',' << ob.device_id << ',' << format_timestamp(ob.departed_at)
          << ',' << format_timestamp(ob.arrived_at) << ',' << csv::exact(ob.travel_time_s)
          << ',' << csv::exact(ob.speed_mph) << '\n';
    }
  }
  {
    auto out = csv::open_writer(output(o, files::kMatchStats), kMatchStatsColumns);
    for (const auto& s : matched.stats) {
      out << s.segment_id << ',' << s.upstream_passages << ',' << s.matched << ','
          << s.dropped_floor << ',' << s.kept << '\n';
    }
  }
  {
    auto out = csv::open_writer(output(o, files::kRejected),
                                {"index", "station_id", "device_id", "detected_at", "reason"});
    for (const auto& r : canonical.rejected) {
      out << r.index << ',' << r.record.station_id << ',' << r.record.device_id << ','
          << format_timestamp(r.record.detected_at) << ',' << one_field(r.reason) << '\n';
    }
  }
}

void run_prepare(const RunOptions& o, std::ostream& log) {
  o.config.validate();
  auto segments = read_segments(input(o, files::kSegments));
  std::erase_if(segments, [&](const SegmentDefinition& s) { return !selected(o, s.segment_id); });

  fs::path obs_path = output(o, files::kObservations);
  require_file(obs_path);
  csv::Reader obs_reader(obs_path, kObservationColumns, {}, true);
  std::vector<TravelTimeObservation> observations;
  while (obs_reader.next()) {
    TravelTimeObservation ob;
    ob.segment_id = std::string(obs_reader.field("segment_id"));
    ob.device_id = std::string(obs_reader.field("device_id"));
    ob.departed_at = timestamp_field(obs_reader, "departed_at");
    ob.arrived_at = timestamp_field(obs_reader, "arrived_at");
    ob.travel_time_s = obs_reader.number("travel_time_s");
    ob.speed_mph = obs_reader.number("speed_mph");
    observations.push_back(std::move(ob));
  }

  fs::path stats_path = output(o, files::kMatchStats);
  require_file(stats_path);
  csv::Reader stats_reader(stats_path, kMatchStatsColumns, {}, true);
  std::map<std::string, SegmentMatchStats> match_stats;
  while (stats_reader.next()) {
    SegmentMatchStats s;
    s.segment_id = std::string(stats_reader.field("segment_id"));
    s.upstream_passages = static_cast<std::size_t>(stats_reader.integer("upstream_passages"));
    s.matched = static_cast<std::size_t>(stats_reader.integer("matched"));
    s.dropped_floor = static_cast<std::size_t>(stats_reader.integer("dropped_floor"));
    s.kept = static_cast<std::size_t>(stats_reader.integer("kept"));
    match_stats[s.segment_id] = s;
  }

  auto tmc_series = read_minute_series(input(o, files::kTmcSpeeds),
                                       {"tmc_code", "minute", "speed_mph"},
                                       SeriesSource::kProbe, false);
  auto tmc_map = read_tmc_map(input(o, files::kTmcMap));

  std::map<std::string, SpeedSeries> reference, probe;
  std::vector<FilterStats> filter_stats;
  for (const auto& seg : segments) {
    auto build = build_reference_series(observations, seg, o.config.filter());
    if (build.series.empty()) {
      log << "warning: no reference intervals survive filtering for " << seg.segment_id << '\n';
    } else {
      reference.emplace(seg.segment_id, std::move(build.series));
    }
    filter_stats.push_back(build.stats);

    auto mapping = tmc_map.find(seg.segment_id);
    if (mapping == tmc_map.end()) {
      log << "warning: no TMC mapping for " << seg.segment_id << '\n';
      continue;
    }
    try {
      auto composed = compose_probe_series(tmc_series, mapping->second, seg);
      if (!composed.empty()) probe.emplace(seg.segment_id, std::move(composed));
    } catch (const Error& e) {
      throw Error(e.kind(), e.message(), input(o, files::kTmcMap).string());
    }
  }

  fs::create_directories(o.out_dir);
  write_series(output(o, files::kReferenceSeries), reference, kSeriesColumns);
  write_series(output(o, files::kProbeSeries), probe, kSeriesColumns);

  auto out = csv::open_writer(output(o, files::kIngestStats), columns::kIngestStats);
  for (const auto& f : filter_stats) {
    SegmentMatchStats m = match_stats.count(f.segment_id) ? match_stats[f.segment_id]
                                                           : SegmentMatchStats{};
    if (m.kept != f.observations_in) {
      throw Error(ErrorKind::kSchema,
                  fmt::format("segment {}: match stats report {} observations, found {}",
                              f.segment_id, m.kept, f.observations_in),
                  stats_path.string());
    }
    out << f.segment_id << ',' << m.upstream_passages << ',' << m.matched << ','
        << m.dropped_floor << ',' << f.dropped_sigma << ',' << f.dropped_interval << ','
        << f.kept << ',' << f.intervals << ',' << f.intervals_excluded_cov << ','
        << f.intervals_excluded_count << '\n';
  }
}

void run_estimate(const RunOptions& o, std::ostream& log) {
  o.config.validate();
  auto in = load_prepared(o, log);

  struct Outcome {
    std::optional<LatencyEstimate> estimate;
    std::optional<Error> error;
  };
  auto outcomes = parallel_map(in.episodes.size(), o.jobs, [&](std::size_t i) {
    const Episode& e = in.episodes[i];
    auto prepared = prepare_for(o, in, e);
    if (auto* err = std::get_if<Error>(&prepared)) return Outcome{std::nullopt, *err};
    const auto& w = std::get<PreparedWindow>(prepared);
    try {
      return Outcome{estimate_latency(w.reference, w.probe, o.config.bounds(), e.window()),
                     std::nullopt};
    } catch (const Error& err) {
      return Outcome{std::nullopt, err};
    }
  });

  fs::create_directories(o.out_dir);
  auto out = csv::open_writer(output(o, files::kLatency), columns::kLatency);
  auto curves = csv::open_writer(output(o, files::kLatencyCurves),
                                 {"segment_id", "window_start", "window_end", "offset", "avd",
                                  "svd", "cor"});
  auto errors = csv::open_writer(output(o, "window_errors.csv"), kWindowErrorColumns);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const Episode& e = in.episodes[i];
    const auto& oc = outcomes[i];
    if (oc.error) {
      log << "warning: " << oc.error->what() << '\n';
      errors << e.segment_id << ',' << format_minute(e.start) << ',' << format_minute(e.end)
             << ',' << to_string(oc.error->kind()) << ',' << one_field(oc.error->message()) << '\n';
      continue;
    }
    const auto& est = *oc.estimate;
    out << e.segment_id << ',' << format_minute(e.start) << ',' << format_minute(e.end) << ','
        << est.best_offset_avd << ',' << est.best_offset_svd << ','
        << offset_text(est.best_offset_cor) << ',' << csv::fixed(est.average_latency) << '\n';
    for (const auto& c : est.curves) {
      curves << e.segment_id << ',' << format_minute(e.start) << ',' << format_minute(e.end)
             << ',' << c.offset << ',' << csv::fixed(c.avd, 6) << ',' << csv::fixed(c.svd, 6)
             << ',' << csv::fixed(c.cor, 6) << '\n';
    }
  }
}

void run_episodes(const RunOptions& o, std::ostream& log) {
  o.config.validate();
  auto in = load_prepared(o, log);

  struct Outcome {
    std::optional<EpisodeArtifacts> artifacts;
    std::optional<Error> error;
  };
  auto outcomes = parallel_map(in.episodes.size(), o.jobs, [&](std::size_t i) {
    const Episode& e = in.episodes[i];
    auto prepared = prepare_for(o, in, e);
    if (auto* err = std::get_if<Error>(&prepared)) return Outcome{std::nullopt, *err};
    auto& w = std::get<PreparedWindow>(prepared);
    try {
      auto report = analyze_episode(w.reference, w.probe, e, o.config.bounds(),
                                    o.config.min_phase_min);
      return Outcome{EpisodeArtifacts{std::move(report), std::move(w)}, std::nullopt};
    } catch (const Error& err) {
      return Outcome{std::nullopt, err};
    }
  });

  fs::create_directories(o.out_dir);
  auto report = csv::open_writer(output(o, files::kEpisodeReport), columns::kEpisodeReport);
  auto curves = csv::open_writer(output(o, files::kEpisodeCurves), columns::kObjectiveCurves);
  auto windows = csv::open_writer(output(o, files::kPreparedWindows), kWindowColumns);

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const Episode& e = in.episodes[i];
    const auto& oc = outcomes[i];
    report << e.segment_id << ',' << format_minute(e.start) << ',' << format_minute(e.end)
           << ',' << to_string(e.period) << ',';
    if (oc.error) {
      log << "warning: " << oc.error->what() << '\n';
      report << (e.transition ? format_minute(*e.transition) : "") << ','
             << to_string(oc.error->kind()) << ",,,,,,,,,,,,,," << one_field(oc.error->message())
             << '\n';
      continue;
    }
    const auto& r = oc.artifacts->report;
    report << format_minute(r.transition) << ",ok";
    for (const auto* est : {&r.full_window, &r.slowdown_phase, &r.recovery_phase}) {
      report << ',' << est->best_offset_avd << ',' << est->best_offset_svd << ','
             << offset_text(est->best_offset_cor) << ',' << csv::fixed(est->average_latency);
    }
    report << ',' << csv::fixed(r.full_window.best_correlation(), 6) << ",\n";

    write_curves(curves, e.segment_id, e.start, "full", r.full_window);
    write_curves(curves, e.segment_id, e.start, "slowdown", r.slowdown_phase);
    write_curves(curves, e.segment_id, e.start, "recovery", r.recovery_phase);

    const auto& w = oc.artifacts->window;
    Minute first = std::min(w.reference.start(), w.probe.start());
    Minute last = std::max(w.reference.last(), w.probe.last());
    for (Minute m = first; m <= last; m += minutes(1)) {
      auto rv = w.reference.at(m);
      auto pv = w.probe.at(m);
      windows << e.segment_id << ',' << format_minute(e.start) << ',' << format_minute(m) << ','
              << (rv ? csv::exact(*rv) : "") << ',' << (pv ? csv::exact(*pv) : "") << '\n';
    }
  }
}

void emit_plot_data(std::span<const EpisodeArtifacts> episodes, const fs::path& out_dir,
                    std::ostream& log) {
  if (episodes.empty()) {
    log << "warning: no analyzed episodes; no plot data written\n";
    return;
  }
  fs::path dir = out_dir / files::kPlotDir;
  fs::create_directories(dir);

  for (const auto& ep : episodes) {
    const auto& r = ep.report;
    auto name = fmt::format("aligned_{}_{}.csv", r.episode.segment_id,
                            format_minute_compact(r.episode.start));
    auto out = csv::open_writer(dir / name, columns::kAlignedSeries);
    auto shift = minutes(std::lround(r.full_window.average_latency));
    for (Minute m = r.episode.start; m <= r.episode.end; m += minutes(1)) {
      auto rv = ep.window.reference.at(m);
      auto pv = ep.window.probe.at(m);
      auto sv = ep.window.probe.at(m + shift);
      out << format_minute(m) << ',' << csv::fixed(rv) << ',' << csv::fixed(pv) << ','
          << csv::fixed(sv) << '\n';
    }
  }

  {
    auto out = csv::open_writer(dir / "objective_curves.csv", columns::kObjectiveCurves);
    for (const auto& ep : episodes) {
      const auto& r = ep.report;
      write_curves(out, r.episode.segment_id, r.episode.start, "full", r.full_window);
      write_curves(out, r.episode.segment_id, r.episode.start, "slowdown", r.slowdown_phase);
      write_curves(out, r.episode.segment_id, r.episode.start, "recovery", r.recovery_phase);
    }
  }

  auto out = csv::open_writer(dir / files::kDistribution, columns::kPlotDistribution);
  auto emit = [&out](std::string_view label, const std::vector<double>& values) {
    if (values.empty()) return;
    auto d = latency_distribution(values);
    for (const auto& [m, count] : d.histogram) {
      out << label << ',' << m << ',' << count << ',' << csv::fixed(d.cumulative.at(m), 6)
          << '\n';
    }
  };
  for (Period p : {Period::kAm, Period::kPm, Period::kOther}) {
    std::vector<double> values;
    for (const auto& ep : episodes) {
      if (ep.report.episode.period == p) values.push_back(ep.report.full_window.average_latency);
    }
    emit(to_string(p), values);
  }
  std::vector<double> all;
  for (const auto& ep : episodes) all.push_back(ep.report.full_window.average_latency);
  emit("overall", all);
}

namespace {

// Rebuilds analyzed episodes from the episodes stage outputs.
std::vector<EpisodeArtifacts> load_artifacts(const RunOptions& o) {
  fs::path report_path = output(o, files::kEpisodeReport);
  require_file(report_path);
  csv::Reader r(report_path, columns::kEpisodeReport, {}, true);

  using Key = std::pair<std::string, Minute>;
  std::vector<EpisodeArtifacts> out;
  std::map<Key, std::size_t> index;
  const ShiftBounds bounds = o.config.bounds();
  while (r.next()) {
    if (r.field("status") != "ok") continue;
    auto seg = std::string(r.field("segment_id"));
    if (!selected(o, seg)) continue;
    EpisodeArtifacts a;
    auto& rep = a.report;
    rep.episode.segment_id = seg;
    rep.episode.start = minute_field(r, "start");
    rep.episode.end = minute_field(r, "end");
    try {
      rep.episode.period = parse_period(r.field("period"));
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
    rep.transition = minute_field(r, "transition");
    auto fill = [&](LatencyEstimate& est, const std::string& prefix,
                    const std::string& avg_col, MinuteRange window) {
      est.window = window;
      est.bounds = bounds;
      est.best_offset_avd = static_cast<int>(r.integer(prefix + "offset_avd"));
      est.best_offset_svd = static_cast<int>(r.integer(prefix + "offset_svd"));
      if (!r.field(prefix + "offset_cor").empty()) {
        est.best_offset_cor = static_cast<int>(r.integer(prefix + "offset_cor"));
      }
      est.average_latency = r.number(avg_col);
    };
    fill(rep.full_window, "", "average_latency", rep.episode.window());
    fill(rep.slowdown_phase, "slowdown_", "slowdown_average",
         {rep.episode.start, rep.transition});
    fill(rep.recovery_phase, "recovery_", "recovery_average",
         {rep.transition, rep.episode.end});
    index[{seg, rep.episode.start}] = out.size();
    out.push_back(std::move(a));
  }

  fs::path curves_path = output(o, files::kEpisodeCurves);
  require_file(curves_path);
  csv::Reader c(curves_path, columns::kObjectiveCurves, {}, true);
  while (c.next()) {
    auto it = index.find({std::string(c.field("segment_id")), minute_field(c, "episode_start")});
    if (it == index.end()) continue;
    auto& rep = out[it->second].report;
    auto window = c.field("window");
    LatencyEstimate* est = window == "full"       ? &rep.full_window
                           : window == "slowdown" ? &rep.slowdown_phase
                           : window == "recovery" ? &rep.recovery_phase
                                                  : nullptr;
    if (!est) c.fail("unknown window '" + std::string(window) + "'");
    est->curves.push_back({static_cast<int>(c.integer("offset")), c.number("avd"),
                           c.number("svd"), optional_number(c, "cor")});
  }

  fs::path windows_path = output(o, files::kPreparedWindows);
  require_file(windows_path);
  csv::Reader w(windows_path, kWindowColumns, {}, true);
  std::map<Key, std::pair<std::map<Minute, std::optional<double>>,
                          std::map<Minute, std::optional<double>>>>
      points;
  while (w.next()) {
    Key key{std::string(w.field("segment_id")), minute_field(w, "episode_start")};
    if (!index.count(key)) continue;
    Minute m = minute_field(w, "minute");
    points[key].first[m] = optional_number(w, "ref_speed");
    points[key].second[m] = optional_number(w, "probe_speed");
  }
  auto to_series = [](const std::string& id, const std::map<Minute, std::optional<double>>& pts,
                      SeriesSource src) {
    std::vector<std::optional<double>> v;
    for (const auto& [m, x] : pts) v.push_back(x);
    return SpeedSeries(id, pts.empty() ? Minute{} : pts.begin()->first, std::move(v), src)
        .trimmed();
  };
  for (auto& [key, pts] : points) {
    auto& a = out[index[key]];
    a.window.reference = to_series(key.first, pts.first, SeriesSource::kReference);
    a.window.probe = to_series(key.first, pts.second, SeriesSource::kProbe);
  }
  return out;
}

}  // namespace

void run_report(const RunOptions& o, std::ostream& log) {
  o.config.validate();
  auto segments = read_segments(input(o, files::kSegments));
  std::map<std::string, double> lengths;
  for (const auto& s : segments) lengths[s.segment_id] = s.length_mi;

  auto artifacts = load_artifacts(o);
  emit_plot_data(artifacts, o.out_dir, log);

  std::vector<EpisodeLatencyReport> reports;
  for (const auto& a : artifacts) reports.push_back(a.report);
  auto summary = summarize(reports, lengths);

  fs::create_directories(o.out_dir);
  auto means = [](std::ostream& out, const ObjectiveMeans& m) {
    out << m.count << ',' << csv::fixed(m.avd) << ',' << csv::fixed(m.svd) << ','
        << csv::fixed(m.cor) << ',' << csv::fixed(m.average);
  };
  {
    auto out = csv::open_writer(output(o, files::kSummaryPeriod), columns::kSummaryPeriod);
    for (const auto& row : summary.periods) {
      out << row.period << ',';
      means(out, row.means);
      out << ',' << row.p95 << '\n';
    }
  }
  {
    auto out = csv::open_writer(output(o, files::kSummarySegment), columns::kSummarySegment);
    for (const auto& row : summary.segments) {
      out << row.segment_id << ',' << csv::fixed(row.length_mi, 2) << ',';
      means(out, row.means);
      out << '\n';
    }
  }
  {
    auto out = csv::open_writer(output(o, files::kSummaryPhase), columns::kSummaryPhase);
    for (const auto& row : summary.phases) {
      out << row.period << ',' << row.scenario << ',';
      means(out, row.means);
      out << '\n';
    }
  }
  {
    auto out = csv::open_writer(output(o, files::kDistribution), columns::kDistribution);
    for (const auto& [m, count] : summary.distribution.histogram) {
      out << m << ',' << count << ',' << csv::fixed(summary.distribution.cumulative.at(m), 6)
          << '\n';
    }
  }
}

void run_all(const RunOptions& o, std::ostream& log) {
  run_ingest(o, log);
  run_prepare(o, log);
  run_estimate(o, log);
  run_episodes(o, log);
  run_report(o, log);
}

void write_dataset(const synthetic::Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = csv::open_writer(dir / files::kStations,
                                {"station_id", "co_location_group", "position_mi"});
    for (const auto& s : ds.stations) {
      out << s.station_id << ',' << s.co_location_group << ',' << csv::exact(s.position_mi)
          << '\n';
    }
  }
  {
    auto out = csv::open_writer(dir / files::kSegments,
                                {"segment_id", "from_group", "to_group", "length_mi"});
    for (const auto& s : ds.segments) {
      out << s.segment_id << ',' << s.from_group << ',' << s.to_group << ','
          << csv::exact(s.length_mi) << '\n';
    }
  }
  {
    auto out = csv::open_writer(dir / files::kDetections,
                                {"station_id", "device_id", "detected_at"});
    for (const auto& d : ds.detections) {
      out << d.station_id << ',' << d.device_id << ',' << format_timestamp(d.detected_at)
          << '\n';
    }
  }
  {
    auto out = csv::open_writer(dir / files::kTmcSpeeds, {"tmc_code", "minute", "speed_mph"});
    for (const auto& [code, s] : ds.tmc_speeds) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (auto v = s.values()[i]) {
          out << code << ',' << format_minute(s.start() + minutes(i)) << ',' << csv::exact(*v)
              << '\n';
        }
      }
    }
  }
  {
    auto out = csv::open_writer(dir / files::kTmcMap,
                                {"segment_id", "tmc_code", "overlap_length_mi", "piece_order"});
    for (const auto& m : ds.tmc_map) {
      for (std::size_t i = 0; i < m.pieces.size(); ++i) {
        out << m.segment_id << ',' << m.pieces[i].tmc_code << ','
            << csv::exact(m.pieces[i].overlap_length_mi) << ',' << i + 1 << '\n';
      }
    }
  }
  write_episodes(dir / files::kEpisodes, ds.episodes);
}

}  // namespace probe_latency::pipeline
