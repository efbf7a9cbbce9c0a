#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "probe_latency/episode_analysis.h"
#include "probe_latency/gap_fill_smooth.h"
#include "probe_latency/latency_core.h"
#include "probe_latency/series_builder.h"

namespace probe_latency {

/// Every tunable of the pipeline. JSON keys are dotted paths of nested
/// objects, e.g. {"filter": {"sigma_k": 1.5}} sets `filter.sigma_k`.
struct PipelineConfig {
  // ingest
  double min_speed_mph = 5.0;
  int passage_gap_min = 30;
  // filter
  double sigma_k = 1.5;
  double cov_max = 1.0;
  int min_count = 3;
  // interpolation
  int max_gap = 5;
  // smoothing
  std::vector<double> smoothing_weights = {0.33, 0.27, 0.20, 0.13, 0.07};
  // latency
  int lb_min = 0;
  int ub_min = 15;
  // episodes
  int min_phase_min = 10;
  std::optional<double> freeflow_mph;
  double drop_fraction = 0.7;
  double recover_fraction = 0.95;
  int merge_gap_min = 10;
  int utc_offset_min = 0;
  // synth
  std::uint64_t seed = 1;
  double synth_noise_sigma_mph = 0.0;
  int synth_inject_slowdown = 4;
  int synth_inject_recovery = 4;

  /// Throws Error(kConfig) naming the first key out of range.
  void validate() const;

  FilterParams filter() const { return {sigma_k, cov_max, min_count}; }
  GapPolicy gaps() const { return {max_gap}; }
  ShiftBounds bounds() const { return {lb_min, ub_min}; }
  SmoothingKernel kernel() const;
  DetectionParams detection(double freeflow) const;
};

/// Parses and validates. Unknown keys and type mismatches are rejected with
/// the dotted key in the message; `source` names the file for errors.
PipelineConfig config_from_json(const std::string& text,
                                const std::string& source = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace probe_latency
