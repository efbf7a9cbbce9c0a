// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.h"
#include "probe_latency/cli.h"
#include "probe_latency/csv.h"
#include "probe_latency/episode_analysis.h"
#include "probe_latency/gap_fill_smooth.h"
#include "probe_latency/latency_core.h"
#include "probe_latency/series_builder.h"
#include "probe_latency/synthetic.h"

namespace {

using namespace probe_latency;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

Minute origin() { return parse_minute("2015-12-04T06:30:00"); }

synthetic::ProfileSpec trapezoid(double noise, std::uint64_t seed) {
  synthetic::ProfileSpec p;
  p.origin = origin();
  p.freeflow_mph = 65.0;
  p.min_speed_mph = 25.0;
  p.noise_sigma_mph = noise;
  p.seed = seed;
  return p;
}

LatencyEstimate full_window_estimate(const synthetic::SyntheticPair& pair) {
  auto kernel = SmoothingKernel::decreasing_five_minute();
  auto w = prepare_episode_window(pair.reference, pair.probe, pair.truth, {}, {}, kernel);
  return estimate_latency(w.reference, w.probe, {}, pair.truth.window());
}

Outcome noiseless_shift_recovery() {
  auto t = Clock::now();
  int exact = 0;
  std::ostringstream misses;
  for (int k = 0; k <= 15; ++k) {
    auto est = full_window_estimate(synthetic::generate_pair(trapezoid(0.0, 1), k, k));
    if (est.best_offset_avd == k && est.best_offset_svd == k && est.best_offset_cor == k) {
      ++exact;
    } else {
      misses << " k=" << k;
    }
  }
  const double s = seconds_since(t);
  std::ostringstream d;
  d << exact << "/16 exact under AVD, SVD and COR in " << s << " s" << misses.str();
  return {exact == 16 && s < 1.0, d.str()};
}

Outcome noisy_shift_recovery() {
  auto t = Clock::now();
  bool ok = true;
  std::ostringstream d;
  for (int k : {2, 5, 8}) {
    int avd = 0, svd = 0, cor = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto seed = static_cast<std::uint64_t>(1000 * k + trial);
      auto est = full_window_estimate(synthetic::generate_pair(trapezoid(2.0, seed), k, k));
      avd += std::abs(est.best_offset_avd - k) <= 1;
      svd += std::abs(est.best_offset_svd - k) <= 1;
      cor += est.best_offset_cor && std::abs(*est.best_offset_cor - k) <= 1;
    }
    ok = ok && avd >= 95 && svd >= 95 && cor >= 95;
    d << "k=" << k << " within 1 min: avd " << avd << "%, svd " << svd << "%, cor " << cor
      << "%; ";
  }
  const double s = seconds_since(t);
  d << "in " << s << " s";
  return {ok && s < 30.0, d.str()};
}

Outcome asymmetric_injection() {
  std::vector<EpisodeLatencyReport> reports;
  bool phases_exact = true;
  std::ostringstream d;
  auto kernel = SmoothingKernel::decreasing_five_minute();
  for (int h : {0, 10}) {
    auto spec = trapezoid(0.0, 1);
    spec.origin = origin() + std::chrono::hours(h);
    auto pair = synthetic::generate_pair(spec, 3, 5);
    Episode ep = pair.truth;
    ep.transition.reset();
    auto w = prepare_episode_window(pair.reference, pair.probe, ep, {}, {}, kernel);
    auto r = analyze_episode(w.reference, w.probe, ep, {});
    for (const auto* e : {&r.slowdown_phase}) {
      phases_exact = phases_exact && e->best_offset_avd == 3 && e->best_offset_svd == 3 &&
                     e->best_offset_cor == 3;
    }
    phases_exact = phases_exact && r.recovery_phase.best_offset_avd == 5 &&
                   r.recovery_phase.best_offset_svd == 5 &&
                   r.recovery_phase.best_offset_cor == 5;
    d << to_string(ep.period) << " slowdown " << r.slowdown_phase.average_latency
      << " recovery " << r.recovery_phase.average_latency << "; ";
    reports.push_back(r);
  }
  auto summary = summarize(reports, {{"SYN", 1.0}});
  double slow = 0.0, rec = 0.0;
  for (const auto& row : summary.phases) {
    if (row.period != "overall") continue;
    (row.scenario == "slowdown" ? slow : rec) = row.means.average;
  }
  d << "summary overall slowdown " << slow << " < recovery " << rec;
  return {phases_exact && slow < rec, d.str()};
}

Outcome sigma_retention() {
  std::mt19937_64 rng(20151204);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(10000);
  for (auto& x : v) x = normal(rng);
  auto kept = filter_sigma({origin(), v}, 1.5).speeds.size();
  const double retention = static_cast<double>(kept) / static_cast<double>(v.size());
  const double oracle_retention = oracle::sigma_retention(v, 1.5);
  std::ostringstream d;
  d << "retention " << 100.0 * retention << "% (oracle " << 100.0 * oracle_retention << "%)";
  return {std::abs(retention - 0.866) <= 0.01 && retention == oracle_retention, d.str()};
}

Outcome zero_phase_check() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> increment(1.0, 4.0);
  std::uniform_int_distribution<int> half_width(5, 12), base(20, 60);
  auto kernel = SmoothingKernel::decreasing_five_minute();
  auto argmax = [](const std::vector<double>& x) {
    return std::max_element(x.begin(), x.end()) - x.begin();
  };
  int invariant = 0, shifted = 0;
  const int cases = 50;
  for (int c = 0; c < cases; ++c) {
    const int h = half_width(rng);
    std::vector<double> inc(static_cast<std::size_t>(h));
    for (auto& e : inc) e = increment(rng);
    std::sort(inc.begin(), inc.end(), std::greater<>());
    inc.erase(std::unique(inc.begin(), inc.end()), inc.end());
    const int width = static_cast<int>(inc.size());
    const int pad = 20;
    const int centre = pad + width;
    std::vector<double> x(static_cast<std::size_t>(2 * (pad + width) + 1),
                          static_cast<double>(base(rng)));
    // x[centre +/- j] = base + sum of increments beyond j.
    for (int j = width - 1; j >= 0; --j) {
      const double level = x[static_cast<std::size_t>(centre + j + 1)] + inc[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(centre + j)] = x[static_cast<std::size_t>(centre - j)] = level;
    }
    if (argmax(x) != centre) continue;
    invariant += argmax(smooth_zero_phase(x, kernel)) == centre;
    shifted += std::abs(argmax(smooth_forward(x, kernel)) - centre) >= 1;
  }
  std::ostringstream d;
  d << "zero-phase argmax invariant " << invariant << "/" << cases
    << ", forward-only shifted " << shifted << "/" << cases;
  return {invariant == cases && shifted >= 45, d.str()};
}

Outcome interpolation_exactness() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> intercept(45, 70), slope(-2.5, 2.5);
  double worst = 0.0;
  bool excluded_at_six = true, all_filled = true;
  for (int trial = 0; trial < 200; ++trial) {
    const double a = intercept(rng), b = slope(rng);
    for (int n = 1; n <= 6; ++n) {
      const int begin = 3;
      std::vector<std::optional<double>> v(static_cast<std::size_t>(begin + n + 4));
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = a + b * static_cast<double>(i);
      for (int i = begin; i < begin + n; ++i) v[static_cast<std::size_t>(i)].reset();
      auto r = interpolate_gaps(SpeedSeries("S", origin(), v, SeriesSource::kReference));
      if (n == 6) {
        excluded_at_six = excluded_at_six && std::holds_alternative<WindowExcluded>(r);
        continue;
      }
      if (!std::holds_alternative<SpeedSeries>(r)) {
        all_filled = false;
        continue;
      }
      auto filled = std::get<SpeedSeries>(r).dense_values();
      for (std::size_t i = 0; i < filled.size(); ++i) {
        worst = std::max(worst, std::abs(filled[i] - (a + b * static_cast<double>(i))));
      }
    }
  }
  std::ostringstream d;
  d << "max error " << worst << " for gaps 1..5; gap of 6 "
    << (excluded_at_six ? "excluded" : "NOT excluded");
  return {all_filled && worst <= 1e-9 && excluded_at_six, d.str()};
}

Outcome space_mean_oracle() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> length(0.2, 5.0), tt(20.0, 1800.0);
  std::uniform_int_distribution<int> count(1, 25), second(0, 59);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    SegmentDefinition seg{"S", "A", "B", length(rng)};
    std::vector<TravelTimeObservation> obs;
    std::vector<double> tts;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const double t = tt(rng);
      Timestamp arrive = Timestamp(origin()) + std::chrono::seconds(second(rng));
      obs.push_back({"S", "d", arrive, arrive, t, speed_from_travel_time(seg.length_mi, t)});
      tts.push_back(t);
    }
    auto s = aggregate_intervals(obs, seg);
    worst = std::max(worst, std::abs(*s.at(origin()) - oracle::space_mean_speed(seg.length_mi, tts)));
  }
  std::ostringstream d;
  d << "max |aggregate - n*L/sum(tt)| over 1000 intervals = " << worst;
  return {worst <= 1e-9, d.str()};
}

Outcome conflation_identity() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> length(0.3, 6.0), speed(3.0, 85.0), cut(0.0, 1.0);
  std::uniform_int_distribution<int> pieces(1, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    SegmentDefinition seg{"S", "A", "B", length(rng)};
    const double v = speed(rng);
    const int n = pieces(rng);
    std::vector<double> cuts = {0.0, 1.0};
    for (int i = 1; i < n; ++i) cuts.push_back(cut(rng));
    std::sort(cuts.begin(), cuts.end());
    TmcMapping map{"S", {}};
    std::map<std::string, SpeedSeries> tmc;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double overlap = (cuts[i + 1] - cuts[i]) * seg.length_mi;
      if (overlap <= 0.0) continue;
      const std::string code = "T" + std::to_string(i);
      map.pieces.push_back({code, overlap});
      std::vector<double> minutes(10, v);
      tmc.emplace(code, SpeedSeries::dense(code, origin(), minutes, SeriesSource::kProbe));
    }
    auto composed = compose_probe_series(tmc, map, seg);
    for (const auto& x : composed.values()) worst = std::max(worst, std::abs(*x - v));
  }
  std::ostringstream d;
  d << "max |composed - v| over 100 partitions = " << worst;
  return {worst <= 1e-9, d.str()};
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path golden_run_dir() {
  static const fs::path dir = fs::temp_directory_path() / "probe_latency_acceptance_run";
  return dir;
}

Outcome golden_run() {
  const fs::path out = golden_run_dir();
  fs::remove_all(out);
  std::ostringstream log;
  auto t = Clock::now();
  const int code = cli::run({"all", "--input", PROBE_LATENCY_FIXTURE_DIR, "--out", out.string()},
                            log, log);
  const double s = seconds_since(t);
  if (code != 0) return {false, "cli all exited " + std::to_string(code) + ": " + log.str()};
  const fs::path golden = PROBE_LATENCY_GOLDEN_DIR;
  auto expected = files_under(golden);
  std::size_t same = 0;
  std::ostringstream diff;
  for (const auto& rel : expected) {
    if (fs::exists(out / rel) && slurp(out / rel) == slurp(golden / rel)) {
      ++same;
    } else {
      diff << " " << rel.string();
    }
  }
  std::ostringstream d;
  d << same << "/" << expected.size() << " golden files byte-identical in " << s << " s";
  if (!diff.str().empty()) d << "; differ:" << diff.str();
  return {!expected.empty() && same == expected.size() && s < 10.0, d.str()};
}

// Column structures are spelled out here rather than taken from the
// library, so a renamed column fails the check.
Outcome report_shape() {
  const fs::path out = golden_run_dir();
  std::vector<std::string> problems;
  auto check = [&](const char* name, std::vector<std::string> cols,
                   const std::function<void(csv::Reader&)>& row) {
    try {
      csv::Reader r(out / name, cols, {}, true);
      int rows = 0;
      while (r.next()) {
        row(r);
        ++rows;
      }
      if (rows == 0) problems.push_back(std::string(name) + " has no rows");
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
  };
  const std::vector<std::string> means = {"n_observations", "f1_avd", "f2_svd", "f3_cor",
                                          "average"};
  auto with = [&](std::vector<std::string> head, std::vector<std::string> tail = {}) {
    head.insert(head.end(), means.begin(), means.end());
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  };

  std::set<std::string> periods;
  check("summary_period.csv", with({"period"}, {"p95_latency_min"}), [&](csv::Reader& r) {
    periods.insert(std::string(r.field("period")));
    r.integer("p95_latency_min");
    r.number("f1_avd");
  });
  if (!periods.count("AM") || !periods.count("PM") || !periods.count("overall")) {
    problems.push_back("summary_period.csv lacks AM/PM/overall rows");
  }

  std::vector<double> lengths;
  bool all_row = false;
  check("summary_segment.csv", with({"segment_id", "length_mi"}), [&](csv::Reader& r) {
    if (r.field("segment_id") == "all_segments") {
      all_row = true;
    } else {
      lengths.push_back(r.number("length_mi"));
    }
  });
  if (!all_row) problems.push_back("summary_segment.csv lacks the all-segments row");
  if (!std::is_sorted(lengths.begin(), lengths.end())) {
    problems.push_back("summary_segment.csv rows not ordered by length");
  }

  std::set<std::pair<std::string, std::string>> cells;
  check("summary_phase.csv", with({"period", "scenario"}), [&](csv::Reader& r) {
    cells.emplace(r.field("period"), r.field("scenario"));
  });
  for (const char* p : {"AM", "PM", "overall"}) {
    for (const char* s : {"slowdown", "recovery"}) {
      if (!cells.count({p, s})) problems.push_back(std::string("summary_phase.csv lacks ") + p + "/" + s);
    }
  }

  double last_cum = 0.0;
  bool monotone = true;
  check("distribution.csv", {"latency_min", "count", "cumulative_fraction"},
        [&](csv::Reader& r) {
          r.integer("latency_min");
          r.integer("count");
          const double c = r.number("cumulative_fraction");
          monotone = monotone && c >= last_cum;
          last_cum = c;
        });
  if (!monotone || std::abs(last_cum - 1.0) > 1e-12) {
    problems.push_back("distribution.csv cumulative fraction not monotone to 1");
  }

  std::ostringstream d;
  if (problems.empty()) {
    d << "period x objective, segment length x objective, period x phase, "
         "histogram + cumulative + p95 columns present";
  } else {
    for (const auto& p : problems) d << p << "; ";
  }
  return {problems.empty(), d.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {1, "noiseless shift recovery", noiseless_shift_recovery},
      {2, "noisy shift recovery", noisy_shift_recovery},
      {3, "asymmetric injection", asymmetric_injection},
      {4, "sigma-filter retention", sigma_retention},
      {5, "zero-phase smoothing", zero_phase_check},
      {6, "interpolation exactness", interpolation_exactness},
      {7, "space-mean speed oracle", space_mean_oracle},
      {8, "conflation identity", conflation_identity},
      {9, "end-to-end golden run", golden_run},
      {10, "report shape", report_shape},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name
              << "): " << o.detail << '\n';
  }
  std::cout << (10 - failed) << "/10 criteria passed\n";
  fs::remove_all(golden_run_dir());
  return failed == 0 ? 0 : 1;
}
