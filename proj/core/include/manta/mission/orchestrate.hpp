#pragma once

#include "manta/agent/agent.hpp"
#include "manta/mission/interpret.hpp"
#include "manta/planner/planner.hpp"
#include "manta/sim/world.hpp"

namespace manta::mission {

struct MissionContext {
  planner::GridMap truth_map;
  GoalTable goals;
  Vec3 start;
  agent::SafetyLimits limits;
  planner::DetectorParams perception;  // used when avoid_obstacles is on
  std::uint64_t seed = 1;
  double clearance_cells = 0.0;
  double cruise_speed = 0.5;   // m/s
  double dt = 0.1;             // s
  double success_radius = 0.3;  // m
  agent::BackendPtr planner_backend;  // defaults to the template planner rule
};

struct TaskOutcome {
  Task task;
  bool plan_produced = false;
  bool success = false;
  bool collision = false;
  int retries = 0;
  double final_error_m = 0.0;
  std::string note;

  Json to_json() const;
};

struct MissionOutcome {
  std::vector<TaskOutcome> tasks;
  bool success = false;  // conjunction over tasks

  Json to_json() const;
};

/// Executes a task graph: each task dispatches a plan request to the planner
/// agent over the bus, follows the returned waypoints in the simulator,
/// verifies the postcondition against ground truth, and revises with
/// refreshed perception up to the retry budget. Literal adherence: tasks with
/// avoid_obstacles off plan straight through known obstacles, and the
/// resulting collision is recorded.
MissionOutcome orchestrate(const TaskGraph& graph, const MissionContext& context);

/// Follows a waypoint path in the simulator via twist commands; returns the
/// final position error to the last waypoint and whether the swept vehicle
/// entered an occupied truth cell.
struct FollowResult {
  double final_error_m = 0.0;
  bool collision = false;
  double elapsed_s = 0.0;
};
FollowResult follow_path(sim::World& world, const std::string& vehicle_id,
                         const planner::Path& path, const planner::GridMap& truth,
                         double cruise_speed, double dt);

}  // namespace manta::mission
