#pragma once

#include <string>
#include <vector>

#include "manta/util/json.hpp"
#include "manta/util/result.hpp"

namespace manta::mission {

/// Parsed scenario configuration. `kind` selects the experiment; seeds and
/// all noise parameters are explicit in the file.
struct ScenarioConfig {
  std::string kind;
  std::uint64_t seed = 1;
  std::string backend = "template";  // template | playback | remote
  int ticks = 0;                     // 0 = kind default
  Json params = Json::object();
  std::string source_path;

  static Result<ScenarioConfig> from_json(const Json& j, const std::string& source_path = "");
  static Result<ScenarioConfig> load_file(const std::string& path);
};

struct ReportBundle {
  bool ok = false;
  Json summary;
  std::vector<std::string> files;  // written artifacts
};

/// Builds the world/agents/bus for the configured experiment, runs it, writes
/// per-experiment CSV/JSONL artifacts plus summary.json under out_dir, and
/// reflects the scenario's embedded assertions in `ok`.
Result<ReportBundle> run_scenario(const ScenarioConfig& config, const std::string& out_dir);

/// Aggregates summary.json files under a directory into one table (the
/// `report` subcommand).
Result<Json> summarize_reports(const std::string& dir);

}  // namespace manta::mission
