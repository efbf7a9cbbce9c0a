#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "probe_latency/config.h"
#include "probe_latency/synthetic.h"

namespace probe_latency::pipeline {

namespace files {
// Inputs
inline constexpr const char* kDetections = "detections.csv";
inline constexpr const char* kStations = "stations.csv";
inline constexpr const char* kSegments = "segments.csv";
inline constexpr const char* kTmcSpeeds = "tmc_speeds.csv";
inline constexpr const char* kTmcMap = "tmc_map.csv";
inline constexpr const char* kEpisodes = "episodes.csv";
// Stage outputs
inline constexpr const char* kObservations = "observations.csv";
inline constexpr const char* kMatchStats = "match_stats.csv";
inline constexpr const char* kRejected = "rejected_records.csv";
inline constexpr const char* kIngestStats = "ingest_stats.csv";
inline constexpr const char* kReferenceSeries = "reference_series.csv";
inline constexpr const char* kProbeSeries = "probe_series.csv";
inline constexpr const char* kDetectedEpisodes = "detected_episodes.csv";
inline constexpr const char* kLatency = "latency.csv";
inline constexpr const char* kLatencyCurves = "latency_curves.csv";
inline constexpr const char* kEpisodeReport = "episode_report.csv";
inline constexpr const char* kEpisodeCurves = "episode_curves.csv";
inline constexpr const char* kPreparedWindows = "prepared_windows.csv";
inline constexpr const char* kSummaryPeriod = "summary_period.csv";
inline constexpr const char* kSummarySegment = "summary_segment.csv";
inline constexpr const char* kSummaryPhase = "summary_phase.csv";
inline constexpr const char* kDistribution = "distribution.csv";
inline constexpr const char* kPlotDir = "plots";
inline constexpr const char* kErrorReport = "error_report.json";
}  // namespace files

struct RunOptions {
  PipelineConfig config;
  std::filesystem::path input_dir = ".";
  std::filesystem::path out_dir = "out";
  std::vector<std::string> segments;  // empty means all
  int jobs = 1;
};

/// Each stage reads the input directory and earlier stage outputs in
/// out_dir, and writes its own files into out_dir. Errors are thrown as
/// probe_latency::Error. Warnings go to `log`.
void run_ingest(const RunOptions& options, std::ostream& log);
void run_prepare(const RunOptions& options, std::ostream& log);
void run_estimate(const RunOptions& options, std::ostream& log);
void run_episodes(const RunOptions& options, std::ostream& log);
void run_report(const RunOptions& options, std::ostream& log);
void run_all(const RunOptions& options, std::ostream& log);

/// One analyzed episode with the prepared series it was estimated on.
struct EpisodeArtifacts {
  EpisodeLatencyReport report;
  PreparedWindow window;
};

/// Plot-ready long-format files under out_dir/plots: one aligned-series file
/// per episode, the objective-vs-offset curves and the latency
/// distributions. With no episodes, writes nothing and warns on `log`.
void emit_plot_data(std::span<const EpisodeArtifacts> episodes,
                    const std::filesystem::path& out_dir, std::ostream& log);

/// Writes a synthetic dataset into `dir` in the input formats.
void write_dataset(const synthetic::Dataset& dataset,
                   const std::filesystem::path& dir);

/// Column lists of the report files.
namespace columns {
extern const std::vector<std::string> kLatency;
extern const std::vector<std::string> kEpisodeReport;
extern const std::vector<std::string> kSummaryPeriod;
extern const std::vector<std::string> kSummarySegment;
extern const std::vector<std::string> kSummaryPhase;
extern const std::vector<std::string> kDistribution;
extern const std::vector<std::string> kAlignedSeries;
extern const std::vector<std::string> kObjectiveCurves;
extern const std::vector<std::string> kIngestStats;
extern const std::vector<std::string> kPlotDistribution;
}  // namespace columns

}  // namespace probe_latency::pipeline
