#include "manta/mission/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "manta/mission/experiments.hpp"
#include "manta/mission/rules.hpp"

namespace manta::mission {

namespace fs = std::filesystem;

Result<ScenarioConfig> ScenarioConfig::from_json(const Json& j, const std::string& source_path) {
  if (!j.is_object()) return make_error("config_error", "scenario must be a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    return make_error("config_error", "missing field: kind");
  }
  ScenarioConfig c;
  c.kind = j.at("kind").get<std::string>();
  if (j.contains("seed")) {
    if (!j.at("seed").is_number()) return make_error("config_error", "field seed must be a number");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.backend = j.value("backend", "template");
  if (c.backend != "template" && c.backend != "playback" && c.backend != "remote") {
    return make_error("config_error", "field backend must be template|playback|remote");
  }
  c.ticks = j.value("ticks", 0);
  c.params = j.value("params", Json::object());
  c.source_path = source_path;
  return c;
}

Result<ScenarioConfig> ScenarioConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) return make_error("config_error", "cannot open scenario: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    return make_error("config_error",
                      path + ": parse error at byte " + std::to_string(e.byte));
  }
  return from_json(j, path);
}

namespace {

Result<void> write_file(const std::string& path, const std::string& content,
                        std::vector<std::string>& files) {
  std::ofstream f(path, std::ios::binary);
  if (!f) return make_error("io_error", "cannot write: " + path);
  f << content;
  files.push_back(path);
  return ok_result();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += "+";
    out += std::to_string(v[i]);
  }
  return out.empty() ? "none" : out;
}

}  // namespace

Result<ReportBundle> run_scenario(const ScenarioConfig& config, const std::string& out_dir) {
  ReportBundle bundle;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return make_error("io_error", "cannot create out dir: " + out_dir);

  auto finish = [&](bool ok, Json summary) -> Result<ReportBundle> {
    summary["kind"] = config.kind;
    summary["seed"] = config.seed;
    summary["backend"] = config.backend;
    summary["ok"] = ok;
    auto w = write_file(out_dir + "/summary.json", summary.dump(2) + "\n", bundle.files);
    if (!w.ok()) return w.error();
    bundle.ok = ok;
    bundle.summary = std::move(summary);
    return bundle;
  };

  if (config.kind == "diagnostics") {
    const auto r = run_diagnostics_experiment(config.seed);
    std::string csv = "config,trial,injected,diagnosed,match\n";
    for (const auto& row : r.rows) {
      std::string labels;
      for (std::size_t i = 0; i < row.diagnosed_labels.size(); ++i) {
        if (i) labels += "|";
        labels += row.diagnosed_labels[i];
      }
      csv += row.config + "," + std::to_string(row.trial) + "," + join_ints(row.injected) +
             "," + csv_escape(labels) + "," + (row.match ? "1" : "0") + "\n";
    }
    auto w = write_file(out_dir + "/diagnostics.csv", csv, bundle.files);
    if (!w.ok()) return w.error();
    w = write_file(out_dir + "/trace.jsonl", r.first_trial_trace.to_jsonl(), bundle.files);
    if (!w.ok()) return w.error();
    const bool ok = r.matches == r.trials && r.transition_ok;
    return finish(ok, Json{{"matches", r.matches},
                           {"trials", r.trials},
                           {"transition_ok", r.transition_ok},
                           {"first_faulty_report_sample", r.first_faulty_report_sample},
                           {"first_recovered_report_sample", r.first_recovered_report_sample},
                           {"inbox_digests", r.first_trial_inbox_digests}});
  }

  if (config.kind == "negotiation") {
    const auto r = run_negotiation_experiment(config.seed,
                                              config.params.value("seeds_per_scenario", 5));
    std::string csv =
        "scenario,name,trial,conflict,yield_events,replan,d_star,executed_clearance,"
        "collision_free\n";
    for (const auto& row : r.rows) {
      csv += std::to_string(row.scenario) + "," + row.scenario_name + "," +
             std::to_string(row.trial) + "," + (row.conflict_predicted ? "1" : "0") + "," +
             std::to_string(row.yield_events) + "," + row.replan_kind + "," +
             std::to_string(row.predicted_d_star) + "," +
             std::to_string(row.executed_min_clearance) + "," +
             (row.collision_free ? "1" : "0") + "\n";
    }
    auto w = write_file(out_dir + "/negotiation.csv", csv, bundle.files);
    if (!w.ok()) return w.error();
    const bool ok = r.collision_free_runs == r.total_runs && r.one_yield_per_conflict &&
                    r.tight_runs >= 1;
    return finish(ok, Json{{"collision_free_runs", r.collision_free_runs},
                           {"total_runs", r.total_runs},
                           {"tight_runs", r.tight_runs},
                           {"one_yield_per_conflict", r.one_yield_per_conflict}});
  }

  if (config.kind == "recovery") {
    const auto r = run_recovery_experiment(config.seed, config.params.value("seeds", 3));
    std::string csv = "deviation_m,direction,trial,recovery_s_without,recovery_s_with\n";
    for (const auto& row : r.rows) {
      csv += std::to_string(row.deviation_m) + "," + std::to_string(row.direction) + "," +
             std::to_string(row.trial) + "," + std::to_string(row.recovery_s_without) + "," +
             std::to_string(row.recovery_s_with) + "\n";
    }
    auto w = write_file(out_dir + "/recovery.csv", csv, bundle.files);
    if (!w.ok()) return w.error();
    const bool ok = r.memory_always_faster && r.monotone_in_deviation;
    return finish(ok, Json{{"trials", r.rows.size()},
                           {"memory_always_faster", r.memory_always_faster},
                           {"monotone_in_deviation", r.monotone_in_deviation}});
  }

  if (config.kind == "tuning") {
    const auto r = run_tuning_experiment();
    std::string csv = "trial,target_class,episode,words,relevance_pct,constitution_digest\n";
    int trial = 0;
    for (const auto& row : r.rows) {
      for (const auto& e : row.episodes) {
        csv += std::to_string(trial) + "," + csv_escape(row.target) + "," +
               std::to_string(e.episode) + "," + std::to_string(e.word_count) + "," +
               std::to_string(e.relevance_pct) + "," + e.constitution_digest + "\n";
      }
      ++trial;
    }
    auto w = write_file(out_dir + "/tuning.csv", csv, bundle.files);
    if (!w.ok()) return w.error();
    const bool ok = r.converged_trials == r.total_trials &&
                    r.standard_scene_ep1_relevance <= 20.0 &&
                    r.standard_scene_ep1_words >= 30;
    return finish(ok, Json{{"converged_trials", r.converged_trials},
                           {"total_trials", r.total_trials},
                           {"standard_scene_ep1_relevance", r.standard_scene_ep1_relevance},
                           {"standard_scene_ep1_words", r.standard_scene_ep1_words}});
  }

  if (config.kind == "selfrepair") {
    const double duration = config.ticks > 0 ? config.ticks * 0.1
                                             : config.params.value("duration_s", 200.0);
    const auto r = run_selfrepair_experiment(config.seed, config.params.value("seeds", 10),
                                             duration);
    std::string csv = "seed,dead_reckoning_error_m,kf_error_m,ratio\n";
    for (const auto& row : r.rows) {
      csv += std::to_string(row.seed) + "," + std::to_string(row.dead_reckoning_error_m) +
             "," + std::to_string(row.kf_error_m) + "," + std::to_string(row.ratio) + "\n";
    }
    auto w = write_file(out_dir + "/selfrepair.csv", csv, bundle.files);
    if (!w.ok()) return w.error();
    const int need = std::max(1, static_cast<int>(r.rows.size()) - 1);
    const bool ok = r.seeds_meeting_gate >= need && r.averaging_suite_green &&
                    r.dual_odom_suite_green && r.kf_deployed_every_seed;
    return finish(ok, Json{{"seeds_meeting_gate", r.seeds_meeting_gate},
                           {"seeds", r.rows.size()},
                           {"averaging_suite_green", r.averaging_suite_green},
                           {"dual_odom_suite_green", r.dual_odom_suite_green},
                           {"kf_deployed_every_seed", r.kf_deployed_every_seed}});
  }

  if (config.kind == "planner") {
    const auto r = run_planner_experiment(config.seed, config.params.value("seeds_per_map", 5));
    std::string csv = "map_id,trial,backend,success,final_error_m,error_delta_m\n";
    for (const auto& row : r.rows) {
      csv += std::to_string(row.map_id) + "," + std::to_string(row.trial) + "," + row.backend +
             "," + (row.success ? "1" : "0") + "," + std::to_string(row.final_error_m) + "," +
             std::to_string(row.error_delta_m) + "\n";
    }
    auto w = write_file(out_dir + "/planner.csv", csv, bundle.files);
    if (!w.ok()) return w.error();
    bool bands = r.zero_noise_cost_equals_baseline;
    for (double p : r.per_map_success_pct) bands = bands && p >= 40.0 && p <= 100.0;
    bool monotone = true;
    for (std::size_t i = 1; i < r.sweep_success_pct.size(); ++i) {
      monotone = monotone && r.sweep_success_pct[i] <= r.sweep_success_pct[i - 1] + 1e-9;
    }
    return finish(bands && monotone,
                  Json{{"per_map_success_pct", r.per_map_success_pct},
                       {"sweep_success_pct", r.sweep_success_pct},
                       {"zero_noise_cost_equals_baseline", r.zero_noise_cost_equals_baseline}});
  }

  if (config.kind == "interpretation") {
    const auto r = run_interpretation_experiment();
    std::string csv = "prompt,parsed,matches_expected,planning_success,collision,task_success\n";
    for (const auto& row : r.rows) {
      csv += csv_escape(row.prompt) + "," + (row.parsed ? "1" : "0") + "," +
             (row.matches_expected ? "1" : "0") + "," + (row.planning_success ? "1" : "0") +
             "," + (row.collision_recorded ? "1" : "0") + "," +
             (row.task_success ? "1" : "0") + "\n";
    }
    auto w = write_file(out_dir + "/interpretation.csv", csv, bundle.files);
    if (!w.ok()) return w.error();
    const bool ok = r.parsed_count == 10 && r.expected_matches == 10 &&
                    r.planning_always_succeeded;
    return finish(ok, Json{{"parsed", r.parsed_count},
                           {"expected_matches", r.expected_matches},
                           {"planning_always_succeeded", r.planning_always_succeeded}});
  }

  if (config.kind == "twin") {
    const double duration = config.ticks > 0 ? config.ticks * 0.1
                                             : config.params.value("duration_s", 60.0);
    const auto r = run_twin_experiment(config.seed, config.params.value("current_mps", 0.05),
                                       duration);
    return finish(r.converged,
                  Json{{"mean_divergence_with_injections", r.mean_divergence_with_injections},
                       {"mean_divergence_without", r.mean_divergence_without},
                       {"pose_injections", r.pose_injections},
                       {"current_injections", r.current_injections}});
  }

  if (config.kind == "mission") {
    if (!config.params.contains("map")) {
      return make_error("config_error", "missing field: params.map");
    }
    const std::string map_path = config.params.at("map").get<std::string>();
    auto map = planner::load_map_file(map_path);
    if (!map.ok()) {
      return make_error("config_error", "field params.map: " + map.error().message);
    }
    if (!config.params.contains("command")) {
      return make_error("config_error", "missing field: params.command");
    }
    MissionContext context;
    context.truth_map = map.value();
    const Json goals = config.params.value("goals", Json::object());
    for (const auto& [name, coords] : goals.items()) {
      context.goals.goals[name] = {coords[0].get<double>(), coords[1].get<double>(),
                                   coords.size() > 2 ? coords[2].get<double>() : 0.0};
    }
    if (config.params.contains("start")) {
      const auto& s = config.params.at("start");
      context.start = {s[0].get<double>(), s[1].get<double>(),
                       s.size() > 2 ? s[2].get<double>() : 0.0};
    }
    agent::SafetyLimits limits;
    limits.max_speed = config.params.value("max_speed", 1.0);
    limits.max_depth = config.params.value("max_depth", 10.0);
    limits.workspace = AABox{{-1000, -1000, 0}, {1000, 1000, limits.max_depth}};
    context.limits = limits;
    context.seed = config.seed;
    context.perception.jitter_sigma_cells = config.params.value("jitter_sigma_cells", 0.0);
    context.perception.miss_prob = config.params.value("miss_prob", 0.0);
    context.perception.dilation_prob = config.params.value("dilation_prob", 0.0);
    context.clearance_cells = config.params.value("clearance_cells", 0.0);

    if (config.backend == "playback") {
      if (!config.params.contains("transcript")) {
        return make_error("config_error", "missing field: params.transcript");
      }
      auto playback = agent::PlaybackBackend::load_jsonl(
          config.params.at("transcript").get<std::string>());
      if (!playback.ok()) {
        return make_error("config_error", "field params.transcript: " + playback.error().message);
      }
      context.planner_backend = playback.value();
    } else if (config.backend == "remote") {
      const char* url = std::getenv("MANTA_REMOTE_URL");
      if (!url || !*url) {
        return make_error("config_error",
                          "backend remote requires the MANTA_REMOTE_URL environment variable");
      }
      agent::RemoteConfig remote;
      remote.endpoint_url = url;
      if (const char* model = std::getenv("MANTA_REMOTE_MODEL"); model && *model) {
        remote.model = model;
      }
      context.planner_backend = std::make_shared<agent::RemoteBackend>(remote);
    }

    auto graph = interpret(config.params.at("command").get<std::string>(), context.goals);
    if (!graph.ok()) {
      return finish(false, Json{{"unparseable", true}, {"error", graph.error().message}});
    }
    const auto outcome = orchestrate(graph.value(), context);
    auto w = write_file(out_dir + "/mission.json", outcome.to_json().dump(2) + "\n",
                        bundle.files);
    if (!w.ok()) return w.error();
    return finish(outcome.success, Json{{"mission", outcome.to_json()}});
  }

  return make_error("config_error", "unknown scenario kind: " + config.kind);
}

Result<Json> summarize_reports(const std::string& dir) {
  Json out = Json::array();
  std::error_code ec;
  for (const auto& entry : fs::recursive_directory_iterator(dir, ec)) {
    if (entry.path().filename() != "summary.json") continue;
    std::ifstream f(entry.path());
    if (!f) continue;
    Json j = Json::parse(f, nullptr, false);
    if (j.is_discarded()) continue;
    j["path"] = entry.path().string();
    out.push_back(std::move(j));
  }
  if (ec) return make_error("io_error", "cannot read report dir: " + dir);
  return out;
}

}  // namespace manta::mission
