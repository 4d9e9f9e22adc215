#pragma once

#include <optional>

#include "manta/agent/backend.hpp"
#include "manta/agent/constitution.hpp"
#include "manta/agent/validate.hpp"
#include "manta/planner/astar.hpp"
#include "manta/planner/perception.hpp"

namespace manta::planner {

struct PlanEvaluation {
  bool success = false;
  double final_error_m = 0.0;
  double error_delta_m = 0.0;  // (agent final error + mean corridor deviation) - baseline's
};

struct PlanRequest {
  Cell start;
  Cell goal;
  double clearance_cells = 0.0;
  std::optional<TetherCheck> tether;
};

/// Perception-in-the-loop planning through a reasoner backend: the template
/// backend runs A* over the perceived map; a remote backend may propose any
/// waypoint list, which is safety-validated and snapped to free cells.
/// Failure (rather than an error) is the unit the success-rate metrics count.
struct AgentPlanResult {
  std::optional<Path> path;
  std::string failure_reason;  // set when path is empty
};

AgentPlanResult agent_plan(const GridMap& perceived, const PlanRequest& request,
                           const agent::Constitution& constitution,
                           agent::ReasonerBackend& reasoner, const agent::SafetyLimits& limits);

/// Collision sweep on the truth map plus goal-proximity check; error_delta is
/// (final error + mean lateral deviation from the baseline corridor) minus
/// the baseline's own final error. Defined here, comparable only within this
/// artifact.
PlanEvaluation evaluate(const std::optional<Path>& path, const GridMap& truth, const Vec3& goal,
                        const Path& baseline, double success_radius_m = 0.3);

/// True when any swept segment of the path crosses occupied truth cells.
bool path_collides(const Path& path, const GridMap& truth);

/// Serialize a grid for transport inside a reasoner query.
Json map_to_json(const GridMap& map);
Result<GridMap> map_from_json(const Json& j);

/// Template-backend rule for the "planner" role: parses {map,start,goal,...}
/// requests and answers with a waypoint list computed by astar().
agent::TemplateBackend::RuleFactory make_planner_rule();

/// Waypoint-list payload for a path (the wire format on plan topics).
Json path_to_payload(const Path& path);

}  // namespace manta::planner
