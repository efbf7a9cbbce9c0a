#include "probe_latency/config.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "probe_latency/error.h"

namespace probe_latency {
namespace {

using json = nlohmann::json;
using Setter = std::function<void(PipelineConfig&, const json&)>;

[[noreturn]] void bad(const std::string& key, const std::string& what,
                      const std::string& source = {}) {
  throw Error(ErrorKind::kConfig, key + ": " + what, source);
}

template <typename T>
Setter number(T PipelineConfig::*field, std::string key) {
  return [field, key](PipelineConfig& c, const json& v) {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) bad(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned() || v.get<long long>() >= 0) {
          c.*field = v.get<T>();
          return;
        }
        bad(key, "expected a non-negative integer");
      } else {
        c.*field = v.get<T>();
      }
    } else {
      if (!v.is_number()) bad(key, "expected a number");
      c.*field = v.get<T>();
    }
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"ingest.min_speed_mph", number(&PipelineConfig::min_speed_mph, "ingest.min_speed_mph")},
      {"ingest.passage_gap_min", number(&PipelineConfig::passage_gap_min, "ingest.passage_gap_min")},
      {"filter.sigma_k", number(&PipelineConfig::sigma_k, "filter.sigma_k")},
      {"filter.cov_max", number(&PipelineConfig::cov_max, "filter.cov_max")},
      {"filter.min_count", number(&PipelineConfig::min_count, "filter.min_count")},
      {"interpolation.max_gap", number(&PipelineConfig::max_gap, "interpolation.max_gap")},
      {"smoothing.weights",
       [](PipelineConfig& c, const json& v) {
         if (!v.is_array()) bad("smoothing.weights", "expected a list of numbers");
         c.smoothing_weights.clear();
         for (const auto& w : v) {
           if (!w.is_number()) bad("smoothing.weights", "expected a list of numbers");
           c.smoothing_weights.push_back(w.get<double>());
         }
       }},
      {"latency.lb_min", number(&PipelineConfig::lb_min, "latency.lb_min")},
      {"latency.ub_min", number(&PipelineConfig::ub_min, "latency.ub_min")},
      {"episodes.min_phase_min", number(&PipelineConfig::min_phase_min, "episodes.min_phase_min")},
      {"episodes.freeflow_mph",
       [](PipelineConfig& c, const json& v) {
         if (v.is_null()) {
           c.freeflow_mph.reset();
         } else if (v.is_number()) {
           c.freeflow_mph = v.get<double>();
         } else {
           bad("episodes.freeflow_mph", "expected a number or null");
         }
       }},
      {"episodes.drop_fraction", number(&PipelineConfig::drop_fraction, "episodes.drop_fraction")},
      {"episodes.recover_fraction",
       number(&PipelineConfig::recover_fraction, "episodes.recover_fraction")},
      {"episodes.merge_gap_min", number(&PipelineConfig::merge_gap_min, "episodes.merge_gap_min")},
      {"episodes.utc_offset_min", number(&PipelineConfig::utc_offset_min, "episodes.utc_offset_min")},
      {"synth.seed", number(&PipelineConfig::seed, "synth.seed")},
      {"synth.noise_sigma_mph",
       number(&PipelineConfig::synth_noise_sigma_mph, "synth.noise_sigma_mph")},
      {"synth.inject_slowdown_min",
       number(&PipelineConfig::synth_inject_slowdown, "synth.inject_slowdown_min")},
      {"synth.inject_recovery_min",
       number(&PipelineConfig::synth_inject_recovery, "synth.inject_recovery_min")},
  };
  return table;
}

void apply(PipelineConfig& config, const json& node, const std::string& prefix,
           const std::string& source) {
  for (const auto& [name, value] : node.items()) {
    std::string key = prefix.empty() ? name : prefix + "." + name;
    auto it = setters().find(key);
    if (it != setters().end()) {
      try {
        it->second(config, value);
      } catch (const Error& e) {
        throw Error(ErrorKind::kConfig, e.message(), source);
      }
    } else if (value.is_object()) {
      bool known_prefix = false;
      for (const auto& [k, s] : setters()) {
        if (k.starts_with(key + ".")) known_prefix = true;
      }
      if (!known_prefix) bad(key, "unknown configuration key", source);
      apply(config, value, key, source);
    } else {
      bad(key, "unknown configuration key", source);
    }
  }
}

}  // namespace

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* key, const std::string& what) {
    if (!ok) bad(key, what);
  };
  require(std::isfinite(min_speed_mph) && min_speed_mph > 0, "ingest.min_speed_mph",
          "must be > 0");
  require(passage_gap_min > 0, "ingest.passage_gap_min", "must be > 0");
  require(std::isfinite(sigma_k) && sigma_k > 0, "filter.sigma_k", "must be > 0");
  require(std::isfinite(cov_max) && cov_max > 0, "filter.cov_max", "must be > 0");
  require(min_count >= 1, "filter.min_count", "must be >= 1");
  require(max_gap >= 0, "interpolation.max_gap", "must be >= 0");
  try {
    SmoothingKernel(smoothing_weights, 1e-9);
  } catch (const std::invalid_argument& e) {
    bad("smoothing.weights", e.what());
  }
  require(lb_min <= ub_min, "latency.lb_min", "must not exceed latency.ub_min");
  require(ub_min <= 180 && lb_min >= -180, "latency.ub_min",
          "bounds must lie within +/-180 minutes");
  require(min_phase_min >= 1, "episodes.min_phase_min", "must be >= 1");
  require(!freeflow_mph || (std::isfinite(*freeflow_mph) && *freeflow_mph > 0),
          "episodes.freeflow_mph", "must be > 0");
  require(drop_fraction > 0 && drop_fraction < 1, "episodes.drop_fraction",
          "must lie in (0, 1)");
  require(recover_fraction > drop_fraction && recover_fraction <= 1,
          "episodes.recover_fraction", "must lie in (drop_fraction, 1]");
  require(merge_gap_min >= 0, "episodes.merge_gap_min", "must be >= 0");
  require(utc_offset_min >= -16 * 60 && utc_offset_min <= 16 * 60,
          "episodes.utc_offset_min", "must lie within +/-960");
  require(std::isfinite(synth_noise_sigma_mph) && synth_noise_sigma_mph >= 0,
          "synth.noise_sigma_mph", "must be >= 0");
  require(synth_inject_slowdown >= 0, "synth.inject_slowdown_min", "must be >= 0");
  require(synth_inject_recovery >= 0, "synth.inject_recovery_min", "must be >= 0");
}

SmoothingKernel PipelineConfig::kernel() const {
  // Config accepts a looser sum tolerance; renormalize before use.
  std::vector<double> w = smoothing_weights;
  double sum = 0.0;
  for (double x : w) sum += x;
  for (double& x : w) x /= sum;
  return SmoothingKernel(std::move(w), 1e-9);
}

DetectionParams PipelineConfig::detection(double freeflow) const {
  DetectionParams p;
  p.freeflow_mph = freeflow;
  p.drop_fraction = drop_fraction;
  p.recover_fraction = recover_fraction;
  p.merge_gap_min = merge_gap_min;
  p.utc_offset = std::chrono::minutes(utc_offset_min);
  return p;
}

PipelineConfig config_from_json(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, std::string("invalid JSON: ") + e.what(), source);
  }
  if (!doc.is_object()) {
    throw Error(ErrorKind::kConfig, "top level must be an object", source);
  }
  PipelineConfig config;
  apply(config, doc, "", source);
  try {
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.message(), source);
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config file", path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str(), path.string());
}

}  // namespace probe_latency
