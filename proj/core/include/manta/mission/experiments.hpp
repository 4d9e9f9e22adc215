#pragma once

#include <string>
#include <vector>

#include "manta/bus/bus.hpp"
#include "manta/mission/interpret.hpp"
#include "manta/mission/orchestrate.hpp"
#include "manta/sim/world.hpp"
#include "manta/tuning/tuning.hpp"

namespace manta::mission {

// ---------------------------------------------------------------------------
// Diagnostics: fault-injection matrix plus the fault/clear transition run.

struct DiagnosticsTrialRow {
  std::string config;   // "all_ok", "t2", ...
  int trial = 0;
  std::vector<int> injected;
  std::vector<std::string> diagnosed_labels;  // 8 entries
  std::vector<std::string> report_lines;      // 3 lines
  bool match = false;
};

struct DiagnosticsResult {
  std::vector<DiagnosticsTrialRow> rows;
  int matches = 0;
  int trials = 0;
  // Transition run: faults {2,3} injected then cleared.
  int inject_sample = 0;
  int clear_sample = 0;
  int first_faulty_report_sample = -1;
  int first_recovered_report_sample = -1;
  bool transition_ok = false;
  bus::Trace first_trial_trace;  // recorded bus trace of config 0 / trial 0
  Json first_trial_inbox_digests;
};

DiagnosticsResult run_diagnostics_experiment(std::uint64_t base_seed);

// ---------------------------------------------------------------------------
// Negotiation: 8 scenario geometries x seeds, protocol over the bus, then an
// executed sim run measuring true clearance.

struct NegotiationRunRow {
  int scenario = 0;
  std::string scenario_name;
  int trial = 0;
  bool conflict_predicted = false;
  int yield_events = 0;
  int proceed_events = 0;
  std::string replan_kind;
  double predicted_d_star = 0.0;
  double executed_min_clearance = 0.0;
  bool collision_free = false;
};

struct NegotiationResult {
  std::vector<NegotiationRunRow> rows;
  int collision_free_runs = 0;
  int total_runs = 0;
  int tight_runs = 0;  // executed clearance in (0, 0.5)
  bool one_yield_per_conflict = true;
};

NegotiationResult run_negotiation_experiment(std::uint64_t base_seed, int seeds_per_scenario = 5);

// ---------------------------------------------------------------------------
// Disturbance recovery: deviations x directions x seeds, with and without the
// ring-window memory.

struct RecoveryTrialRow {
  double deviation_m = 0.0;
  int direction = +1;  // +1 / -1 lateral push
  int trial = 0;
  double recovery_s_without = 0.0;
  double recovery_s_with = 0.0;
};

struct RecoveryResult {
  std::vector<RecoveryTrialRow> rows;
  bool memory_always_faster = true;
  bool monotone_in_deviation = true;
};

RecoveryResult run_recovery_experiment(std::uint64_t base_seed, int seeds = 3);

// ---------------------------------------------------------------------------
// Teacher-student tuning matrix: target classes x scenes.

struct TuningTrialRow {
  std::string target;
  int scene = 0;
  std::vector<tuning::EpisodeRecord> episodes;
  bool monotone = false;
  bool converged = false;
};

struct TuningResult {
  std::vector<TuningTrialRow> rows;
  int converged_trials = 0;
  int total_trials = 0;
  double standard_scene_ep1_relevance = 0.0;
  std::size_t standard_scene_ep1_words = 0;
};

TuningResult run_tuning_experiment();

// ---------------------------------------------------------------------------
// Navigation self-repair: synthesized DVL+compass filter vs drifting odometry.

struct SelfRepairSeedRow {
  std::uint64_t seed = 0;
  double dead_reckoning_error_m = 0.0;
  double kf_error_m = 0.0;
  double ratio = 0.0;
};

struct SelfRepairResult {
  std::vector<SelfRepairSeedRow> rows;
  int seeds_meeting_gate = 0;  // kf error <= 50% of dead reckoning
  bool averaging_suite_green = false;
  bool dual_odom_suite_green = false;
  bool kf_deployed_every_seed = true;
};

SelfRepairResult run_selfrepair_experiment(std::uint64_t base_seed, int seeds = 10,
                                           double duration_s = 200.0);

// ---------------------------------------------------------------------------
// Perception-degradation planning tables.

struct PlannerTrialRow {
  int map_id = 0;
  int trial = 0;
  std::string backend;
  bool success = false;
  double final_error_m = 0.0;
  double error_delta_m = 0.0;
};

struct PlannerResult {
  std::vector<PlannerTrialRow> rows;          // default-noise matrix
  std::vector<double> per_map_success_pct;    // 5 entries
  // Aggregate success at miss probabilities 0 / 0.1 / 0.3 (fixed seeds).
  std::vector<double> sweep_success_pct;
  bool zero_noise_cost_equals_baseline = true;
};

PlannerResult run_planner_experiment(std::uint64_t base_seed, int seeds_per_map = 5);

const std::vector<std::string>& planner_experiment_maps();

// ---------------------------------------------------------------------------
// Interpretation trials: the ten documented prompts end-to-end.

struct InterpretationRow {
  std::string prompt;
  bool parsed = false;
  Json task_graph;
  bool matches_expected = false;
  bool planning_success = false;  // plan produced for every interpreted task
  bool collision_recorded = false;
  bool task_success = false;
};

struct InterpretationResult {
  std::vector<InterpretationRow> rows;
  int parsed_count = 0;
  int expected_matches = 0;
  bool planning_always_succeeded = true;
};

InterpretationResult run_interpretation_experiment();

/// The documented prompt set with expected task graphs.
struct InterpretationCase {
  std::string prompt;
  Json expected_graph;  // {"tasks":[{"verb","goal","avoid_obstacles"}]}
};
const std::vector<InterpretationCase>& interpretation_cases();

// ---------------------------------------------------------------------------
// Digital-twin fidelity injections.

struct TwinResult {
  double mean_divergence_with_injections = 0.0;
  double mean_divergence_without = 0.0;
  int pose_injections = 0;
  int current_injections = 0;
  bool converged = true;  // injections keep divergence below threshold
};

TwinResult run_twin_experiment(std::uint64_t seed, double current_mps = 0.05,
                               double duration_s = 60.0);

}  // namespace manta::mission
