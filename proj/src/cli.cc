#include "probe_latency/cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "probe_latency/error.h"
#include "probe_latency/pipeline.h"

namespace probe_latency::cli {
namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string id;
  while (std::getline(in, id, ',')) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

void write_error_report(const fs::path& out_dir, const Error& e) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return;
  nlohmann::ordered_json doc;
  doc["kind"] = std::string(to_string(e.kind()));
  doc["message"] = e.message();
  doc["file"] = e.file();
  doc["line"] = e.line();
  std::ofstream out(out_dir / pipeline::files::kErrorReport, std::ios::trunc);
  out << doc.dump(2) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probe-feed latency against a re-identification reference", "probe_latency"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::string input_dir = ".";
  std::string segments;
  int jobs = 1;
  app.add_option("--config", config_path,
                 "JSON config file (falls back to $PROBE_LATENCY_CONFIG)");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--input", input_dir, "Directory holding the input CSV files")
      ->capture_default_str();
  app.add_option("--segments", segments, "Comma-separated segment ids to process");
  app.add_option("--jobs", jobs, "Worker threads for per-episode work")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  struct Stage {
    const char* name;
    const char* help;
    void (*fn)(const pipeline::RunOptions&, std::ostream&);
  };
  const Stage stages[] = {
      {"ingest", "Match detections into travel-time observations", pipeline::run_ingest},
      {"prepare", "Filter and aggregate reference series; conflate probe speeds",
       pipeline::run_prepare},
      {"estimate", "Full-window latency per episode", pipeline::run_estimate},
      {"episodes", "Slowdown/recovery latency per episode", pipeline::run_episodes},
      {"report", "Summary tables, distribution and plot data", pipeline::run_report},
      {"all", "Run every stage in order", pipeline::run_all},
  };
  std::vector<std::pair<CLI::App*, const Stage*>> commands;
  for (const auto& s : stages) commands.emplace_back(app.add_subcommand(s.name, s.help), &s);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset with known latency");
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::optional<int> inject_slowdown, inject_recovery;
  synth->add_option("--seed", seed, "Random seed (overrides synth.seed)");
  synth->add_option("--noise", noise, "Noise sigma in mph (overrides synth.noise_sigma_mph)");
  synth->add_option("--inject-slowdown", inject_slowdown, "Probe delay before the trough");
  synth->add_option("--inject-recovery", inject_recovery, "Probe delay after the trough");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << '\n';
    return kExitUsage;
  }

  pipeline::RunOptions options;
  options.out_dir = out_dir;
  options.input_dir = input_dir;
  options.segments = split_ids(segments);
  options.jobs = jobs;

  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("PROBE_LATENCY_CONFIG"); env && *env) {
        config_path = env;
      }
    }
    if (!config_path.empty()) options.config = load_config(config_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    write_error_report(options.out_dir, e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      auto& c = options.config;
      if (seed) c.seed = *seed;
      if (noise) c.synth_noise_sigma_mph = *noise;
      if (inject_slowdown) c.synth_inject_slowdown = *inject_slowdown;
      if (inject_recovery) c.synth_inject_recovery = *inject_recovery;
      c.validate();
      synthetic::ScenarioSpec spec;
      spec.profile.noise_sigma_mph = c.synth_noise_sigma_mph;
      spec.inject_slowdown = c.synth_inject_slowdown;
      spec.inject_recovery = c.synth_inject_recovery;
      spec.seed = c.seed;
      synthetic::Dataset ds;
      try {
        ds = synthetic::synthesize_dataset(spec);
      } catch (const std::invalid_argument& e) {
        throw Error(ErrorKind::kConfig, e.what());
      }
      pipeline::write_dataset(ds, options.out_dir);
      out << "wrote synthetic dataset to " << options.out_dir.string() << '\n';
      return kExitOk;
    }
    for (const auto& [cmd, stage] : commands) {
      if (cmd->parsed()) {
        stage->fn(options, err);
        return kExitOk;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    write_error_report(options.out_dir, e);
    return e.kind() == ErrorKind::kConfig ? kExitUsage : kExitPipeline;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return kExitPipeline;
  }
  return kExitUsage;
}

}  // namespace probe_latency::cli
