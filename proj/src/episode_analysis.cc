#include "probe_latency/episode_analysis.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "probe_latency/error.h"

namespace probe_latency {

using std::chrono::minutes;

std::string_view to_string(Period p) {
  switch (p) {
    case Period::kAm: return "AM";
    case Period::kPm: return "PM";
    case Period::kOther: return "other";
  }
  return "other";
}

Period parse_period(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "am") return Period::kAm;
  if (lower == "pm") return Period::kPm;
  if (lower == "other") return Period::kOther;
  throw std::invalid_argument("unknown period '" + std::string(text) + "'");
}

Period classify_period(Minute start, minutes utc_offset) {
  Minute local = start + utc_offset;
  auto minute_of_day = (local - std::chrono::floor<std::chrono::days>(local)).count();
  if (minute_of_day >= 5 * 60 && minute_of_day < 12 * 60) return Period::kAm;
  if (minute_of_day >= 12 * 60 && minute_of_day <= 20 * 60) return Period::kPm;
  return Period::kOther;
}

void validate_episode(const Episode& episode) {
  if (!(episode.start < episode.end)) {
    throw std::invalid_argument("episode on " + episode.segment_id +
                                " must start before it ends");
  }
  if (episode.transition &&
      !(*episode.transition > episode.start && *episode.transition < episode.end)) {
    throw std::invalid_argument("episode on " + episode.segment_id +
                                ": transition must lie strictly inside the episode");
  }
}

Minute find_transition(const SpeedSeries& reference, const Episode& episode) {
  validate_episode(episode);
  MinuteRange interior{episode.start + minutes(1), episode.end - minutes(1)};
  if (interior.empty()) {
    throw Error(ErrorKind::kNoTransition,
                "episode on " + episode.segment_id + " has no interior minutes");
  }
  if (!reference.present_over(interior)) {
    throw Error(ErrorKind::kCoverage,
                "reference for " + episode.segment_id + " has gaps inside the episode");
  }
  Minute best = interior.first;
  double lo = *reference.at(best);
  double hi = lo;
  for (Minute m = interior.first; m <= interior.last; m += minutes(1)) {
    double v = *reference.at(m);
    if (v < lo) {
      lo = v;
      best = m;
    }
    hi = std::max(hi, v);
  }
  if (hi - lo <= 1e-9 * std::max(1.0, std::abs(hi))) {
    throw Error(ErrorKind::kNoTransition,
                "reference for " + episode.segment_id + " is flat over the episode");
  }
  return best;
}

EpisodeLatencyReport analyze_episode(const SpeedSeries& reference,
                                     const SpeedSeries& probe, const Episode& episode,
                                     ShiftBounds bounds, int min_phase_min) {
  validate_episode(episode);
  EpisodeLatencyReport report;
  report.episode = episode;
  report.transition =
      episode.transition ? *episode.transition : find_transition(reference, episode);

  auto slowdown_len = (report.transition - episode.start).count();
  auto recovery_len = (episode.end - report.transition).count();
  if (slowdown_len < min_phase_min || recovery_len < min_phase_min) {
    throw Error(ErrorKind::kPhaseTooShort,
                fmt::format("episode on {} at {}: phases last {} and {} min, "
                            "minimum is {}",
                            episode.segment_id, format_minute(episode.start),
                            slowdown_len, recovery_len, min_phase_min));
  }

  report.full_window = estimate_latency(reference, probe, bounds, episode.window());
  report.slowdown_phase =
      estimate_latency(reference, probe, bounds, {episode.start, report.transition});
  report.recovery_phase =
      estimate_latency(reference, probe, bounds, {report.transition, episode.end});
  return report;
}

namespace {

SpeedSeries prepare_one(const SpeedSeries& raw, MinuteRange cut, MinuteRange required,
                        GapPolicy gaps, const SmoothingKernel& kernel,
                        std::string_view what) {
  SpeedSeries s = raw.slice(cut).trimmed();
  if (s.empty() || s.start() > required.first || s.last() < required.last) {
    throw Error(ErrorKind::kCoverage,
                fmt::format("{} series for {} does not cover {} .. {}", what,
                            raw.segment_id(), format_minute(required.first),
                            format_minute(required.last)));
  }
  auto filled = interpolate_gaps(s, gaps);
  if (auto* excluded = std::get_if<WindowExcluded>(&filled)) {
    throw Error(ErrorKind::kExcludedWindow,
                fmt::format("{} series for {}: {} missing minutes from {}", what,
                            raw.segment_id(), excluded->gap_length,
                            format_minute(excluded->gap_start)));
  }
  return smooth_zero_phase(std::get<SpeedSeries>(filled), kernel);
}

}  // namespace

PreparedWindow prepare_episode_window(const SpeedSeries& reference,
                                      const SpeedSeries& probe, const Episode& episode,
                                      ShiftBounds bounds, GapPolicy gaps,
                                      const SmoothingKernel& kernel) {
  validate_episode(episode);
  bounds.validate();
  // Each pass reaches size - 1 minutes to one side.
  const minutes margin(static_cast<long>(kernel.size()) - 1);
  MinuteRange cut{episode.start + minutes(std::min(bounds.lb, 0)) - margin,
                  episode.end + minutes(std::max(bounds.ub, 0)) + margin};
  PreparedWindow out;
  out.reference = prepare_one(reference, cut, episode.window(), gaps, kernel, "reference");
  out.probe = prepare_one(probe, cut, probe_coverage(episode.window(), bounds), gaps,
                          kernel, "probe");
  return out;
}

// ---------------------------------------------------------------------------

int LatencyDistribution::p95() const {
  for (const auto& [m, frac] : cumulative) {
    if (frac >= 0.95 - 1e-12) return m;
  }
  return cumulative.empty() ? 0 : cumulative.rbegin()->first;
}

double LatencyDistribution::cumulative_at(int minutes_value) const {
  auto it = cumulative.upper_bound(minutes_value);
  if (it == cumulative.begin()) return 0.0;
  return std::prev(it)->second;
}

LatencyDistribution latency_distribution(std::span<const double> latencies) {
  LatencyDistribution d;
  for (double v : latencies) ++d.histogram[static_cast<int>(std::lround(v))];
  std::size_t running = 0;
  for (const auto& [m, count] : d.histogram) {
    running += count;
    d.cumulative[m] = static_cast<double>(running) / static_cast<double>(latencies.size());
  }
  if (!d.cumulative.empty()) d.cumulative.rbegin()->second = 1.0;
  return d;
}

namespace {

ObjectiveMeans mean_of(const std::vector<const LatencyEstimate*>& estimates) {
  ObjectiveMeans m;
  m.count = estimates.size();
  if (estimates.empty()) return m;
  double cor_sum = 0.0;
  std::size_t cor_n = 0;
  for (const auto* e : estimates) {
    m.avd += e->best_offset_avd;
    m.svd += e->best_offset_svd;
    m.average += e->average_latency;
    if (e->best_offset_cor) {
      cor_sum += *e->best_offset_cor;
      ++cor_n;
    }
  }
  auto n = static_cast<double>(estimates.size());
  m.avd /= n;
  m.svd /= n;
  m.average /= n;
  if (cor_n > 0) m.cor = cor_sum / static_cast<double>(cor_n);
  return m;
}

}  // namespace

Summary summarize(std::span<const EpisodeLatencyReport> reports,
                  const std::map<std::string, double>& segment_lengths) {
  if (reports.empty()) {
    throw Error(ErrorKind::kEmptyReport, "no analyzed episodes to summarize");
  }
  Summary s;
  constexpr Period kPeriods[] = {Period::kAm, Period::kPm, Period::kOther};

  auto period_row = [](std::string name,
                       const std::vector<const EpisodeLatencyReport*>& members) {
    std::vector<const LatencyEstimate*> full;
    std::vector<double> averages;
    for (const auto* r : members) {
      full.push_back(&r->full_window);
      averages.push_back(r->full_window.average_latency);
    }
    return PeriodSummaryRow{std::move(name), mean_of(full),
                            latency_distribution(averages).p95()};
  };
  auto phase_rows = [&s](std::string name,
                         const std::vector<const EpisodeLatencyReport*>& members) {
    std::vector<const LatencyEstimate*> slow, rec;
    for (const auto* r : members) {
      slow.push_back(&r->slowdown_phase);
      rec.push_back(&r->recovery_phase);
    }
    s.phases.push_back({name, "slowdown", mean_of(slow)});
    s.phases.push_back({name, "recovery", mean_of(rec)});
  };

  std::vector<const EpisodeLatencyReport*> all;
  for (const auto& r : reports) all.push_back(&r);
  for (Period p : kPeriods) {
    std::vector<const EpisodeLatencyReport*> members;
    for (const auto* r : all) {
      if (r->episode.period == p) members.push_back(r);
    }
    if (members.empty()) continue;
    s.periods.push_back(period_row(std::string(to_string(p)), members));
    phase_rows(std::string(to_string(p)), members);
  }
  s.periods.push_back(period_row("overall", all));
  phase_rows("overall", all);

  std::map<std::string, std::vector<const LatencyEstimate*>> by_segment;
  for (const auto& r : reports) by_segment[r.episode.segment_id].push_back(&r.full_window);
  for (const auto& [id, estimates] : by_segment) {
    auto it = segment_lengths.find(id);
    if (it == segment_lengths.end()) {
      throw Error(ErrorKind::kConfig, "no length known for segment " + id);
    }
    s.segments.push_back({id, it->second, mean_of(estimates)});
  }
  std::sort(s.segments.begin(), s.segments.end(),
            [](const SegmentSummaryRow& a, const SegmentSummaryRow& b) {
              return std::tie(a.length_mi, a.segment_id) < std::tie(b.length_mi, b.segment_id);
            });
  SegmentSummaryRow total{std::string(kAllSegmentsRow), 0.0, {}};
  double cor_sum = 0.0;
  std::size_t cor_n = 0;
  for (const auto& row : s.segments) {
    total.length_mi += row.length_mi;
    total.means.count += row.means.count;
    total.means.avd += row.means.avd;
    total.means.svd += row.means.svd;
    total.means.average += row.means.average;
    if (row.means.cor) {
      cor_sum += *row.means.cor;
      ++cor_n;
    }
  }
  auto n = static_cast<double>(s.segments.size());
  total.length_mi /= n;
  total.means.avd /= n;
  total.means.svd /= n;
  total.means.average /= n;
  if (cor_n > 0) total.means.cor = cor_sum / static_cast<double>(cor_n);
  s.segments.push_back(total);

  std::vector<double> averages;
  for (const auto& r : reports) averages.push_back(r.full_window.average_latency);
  s.distribution = latency_distribution(averages);
  return s;
}

// ---------------------------------------------------------------------------

double estimate_freeflow(const SpeedSeries& reference) {
  std::vector<double> present;
  for (const auto& v : reference.values()) {
    if (v) present.push_back(*v);
  }
  if (present.empty()) return 0.0;
  std::sort(present.begin(), present.end());
  auto rank = static_cast<std::size_t>(std::ceil(0.85 * static_cast<double>(present.size())));
  return present[std::clamp<std::size_t>(rank, 1, present.size()) - 1];
}

std::vector<Episode> detect_episodes(const SpeedSeries& reference,
                                     const DetectionParams& params) {
  if (!(params.drop_fraction > 0.0 && params.drop_fraction < 1.0)) {
    throw std::invalid_argument("drop_fraction must lie in (0, 1)");
  }
  std::vector<Episode> out;
  auto values = reference.values();
  const double trigger = params.drop_fraction * params.freeflow_mph;
  const double recovered = params.recover_fraction * params.freeflow_mph;
  auto below = [&](std::size_t i) { return values[i] && *values[i] < trigger; };
  auto free_flowing = [&](std::size_t i) { return values[i] && *values[i] >= recovered; };

  std::vector<std::pair<std::size_t, std::size_t>> windows;
  std::size_t i = 0;
  while (i < values.size()) {
    if (!below(i)) {
      ++i;
      continue;
    }
    std::size_t a = i;
    while (i < values.size() && !free_flowing(i)) ++i;
    std::size_t b = std::min(i, values.size() - 1);
    while (a > 0 && !free_flowing(a)) --a;
    windows.emplace_back(a, b);
  }

  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (auto w : windows) {
    if (!merged.empty() &&
        static_cast<long>(w.first) - static_cast<long>(merged.back().second) <
            params.merge_gap_min) {
      merged.back().second = std::max(merged.back().second, w.second);
    } else {
      merged.push_back(w);
    }
  }
  for (auto [a, b] : merged) {
    if (b <= a) continue;
    Episode e;
    e.segment_id = reference.segment_id();
    e.start = reference.start() + minutes(a);
    e.end = reference.start() + minutes(b);
    e.period = classify_period(e.start, params.utc_offset);
    out.push_back(e);
  }
  return out;
}

}  // namespace probe_latency
