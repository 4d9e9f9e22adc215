#include "manta/mission/orchestrate.hpp"

#include <algorithm>
#include <cmath>

#include "manta/mission/rules.hpp"

namespace manta::mission {

Json TaskOutcome::to_json() const {
  return Json{{"verb", task.verb == TaskVerb::goto_goal ? "goto" : "inspect"},
              {"goal", task.goal_name},
              {"avoid_obstacles", task.avoid_obstacles},
              {"plan_produced", plan_produced},
              {"success", success},
              {"collision", collision},
              {"retries", retries},
              {"final_error_m", final_error_m},
              {"note", note}};
}

Json MissionOutcome::to_json() const {
  Json tasks_json = Json::array();
  for (const auto& t : tasks) tasks_json.push_back(t.to_json());
  return Json{{"success", success}, {"tasks", std::move(tasks_json)}};
}

FollowResult follow_path(sim::World& world, const std::string& vehicle_id,
                         const planner::Path& path, const planner::GridMap& truth,
                         double cruise_speed, double dt) {
  FollowResult result;
  sim::Vehicle* v = world.find(vehicle_id);
  if (!v || path.waypoints.empty()) return result;

  std::size_t target = 0;
  const double budget_s = 3.0 * path.length / std::max(0.05, cruise_speed) + 20.0;
  double elapsed = 0.0;
  while (elapsed < budget_s) {
    const Vec3 pos = v->state.position;
    while (target + 1 < path.waypoints.size() &&
           distance(pos, path.waypoints[target]) < 0.25) {
      ++target;
    }
    const Vec3& wp = path.waypoints[target];
    const Vec3 to_wp = wp - pos;
    const double dist = to_wp.norm();
    if (target + 1 == path.waypoints.size() && dist < 0.12) break;

    const double speed = std::min(cruise_speed, 1.5 * dist);
    const Vec3 world_vel = dist > 1e-9 ? to_wp * (speed / dist) : Vec3{};
    const Vec3 body_vel = world_to_body(v->state.yaw, world_vel);
    sim::Twist cmd;
    cmd.vx = body_vel.x;
    cmd.vy = body_vel.y;
    cmd.vz = body_vel.z;
    (void)sim::command(world, vehicle_id, cmd);
    sim::step(world, dt);
    elapsed += dt;

    const planner::Cell c = truth.world_to_cell(v->state.position);
    if (truth.in_bounds(c) && truth.occupied(c)) result.collision = true;
  }
  result.final_error_m = distance(v->state.position, path.waypoints.back());
  result.elapsed_s = elapsed;
  return result;
}

namespace {

/// One planning round trip through the bus-hosted planner agent.
Result<std::optional<planner::Path>> request_plan(bus::Bus& bus, agent::Host& host,
                                                  agent::Agent& planner_agent,
                                                  bus::Subscription& plan_sub,
                                                  const planner::GridMap& map,
                                                  const planner::Cell& start,
                                                  const planner::Cell& goal,
                                                  double clearance) {
  bus::Envelope request;
  request.topic = "plan/request";
  request.publisher_id = "commander";
  request.payload = Json{{"map", planner::map_to_json(map)},
                         {"start", Json::array({start.x, start.y})},
                         {"goal", Json::array({goal.x, goal.y})},
                         {"clearance", clearance}};
  auto pub = bus.publish(std::move(request));
  if (!pub.ok()) return pub.error();
  bus.tick(0.05);
  auto step = host.step_and_publish(planner_agent, planner_agent.drain_inbox());
  if (!step.ok()) return step.error();
  bus.tick(0.05);
  std::optional<planner::Path> path;
  for (const auto& env : plan_sub.drain()) {
    if (env.payload.value("infeasible", false)) continue;
    planner::Path p;
    for (const auto& wj : env.payload.at("waypoints")) {
      Vec3 w{wj.at("x").get<double>(), wj.at("y").get<double>(), wj.value("z", 0.0)};
      p.waypoints.push_back(w);
      p.cells.push_back(map.world_to_cell(w));
    }
    if (p.waypoints.empty()) continue;
    p.length = planner::path_cost_cells(p.cells) * map.resolution();
    path = std::move(p);
  }
  return path;
}

}  // namespace

MissionOutcome orchestrate(const TaskGraph& graph, const MissionContext& context) {
  MissionOutcome outcome;
  outcome.success = true;

  bus::Bus bus;
  auto wired = register_standard_topics(bus);
  if (!wired.ok()) {
    outcome.success = false;
    return outcome;
  }
  agent::Host host(bus);
  auto plan_sub = bus.subscribe("nav/plan", "commander");

  agent::AgentSpec spec;
  spec.agent_id = "motion_planner";
  spec.role = "planner";
  spec.constitution.core_directive = "You are a motion planner.";
  spec.constitution.output_schema_id = "waypoint_list";
  spec.constitution.domain_knowledge = context.goals.knowledge_facts();
  spec.subscriptions = {"plan/request"};
  spec.publications = {"nav/plan"};
  spec.reasoner = context.planner_backend
                      ? context.planner_backend
                      : std::make_shared<agent::TemplateBackend>("planner",
                                                                 planner::make_planner_rule());
  spec.limits = context.limits;
  auto planner_agent = host.instantiate(spec);
  if (!planner_agent.ok() || !plan_sub.ok()) {
    outcome.success = false;
    return outcome;
  }

  sim::World world;
  sim::Vehicle vehicle;
  vehicle.id = "auv";
  vehicle.state.position = context.start;
  world.vehicles["auv"] = vehicle;

  const planner::GridMap empty_map(context.truth_map.width(), context.truth_map.height(),
                                   context.truth_map.resolution(), context.truth_map.origin());

  for (const auto& task : graph.tasks) {
    TaskOutcome record;
    record.task = task;

    auto goal_coords = context.goals.resolve(task.goal_name);
    if (!goal_coords.ok()) {
      record.note = goal_coords.error().message;
      outcome.tasks.push_back(record);
      outcome.success = false;
      continue;
    }
    const planner::Cell goal_cell = context.truth_map.world_to_cell(goal_coords.value());

    bool task_done = false;
    for (int attempt = 0; attempt <= task.retry_budget && !task_done; ++attempt) {
      const planner::Cell start_cell =
          context.truth_map.world_to_cell(world.find("auv")->state.position);
      // Literal adherence: without the avoid flag the planner sees an empty
      // map and drives straight through anything in the way.
      const planner::GridMap plan_map =
          task.avoid_obstacles
              ? planner::perceive_map(context.truth_map, context.perception,
                                      Rng::mix(context.seed, static_cast<std::uint64_t>(attempt)))
              : empty_map;
      auto plan = request_plan(bus, host, *planner_agent.value(), *plan_sub.value(), plan_map,
                               start_cell, goal_cell,
                               task.avoid_obstacles ? context.clearance_cells : 0.0);
      if (!plan.ok()) {
        record.note = plan.error().message;
        break;
      }
      if (!plan.value().has_value()) {
        record.note = "plan infeasible";
        record.retries = attempt;
        continue;  // revise with refreshed perception
      }
      record.plan_produced = true;
      const auto follow = follow_path(world, "auv", *plan.value(), context.truth_map,
                                      context.cruise_speed, context.dt);
      record.collision = record.collision || follow.collision;
      record.final_error_m = distance(world.find("auv")->state.position, goal_coords.value());
      record.retries = attempt;
      // Reflection: the task postcondition is verified against ground truth.
      if (follow.collision) {
        record.note = "collision during execution";
        break;  // an executed collision is terminal; revision cannot undo it
      }
      if (record.final_error_m <= context.success_radius) {
        record.success = true;
        task_done = true;
      }
    }
    outcome.success = outcome.success && record.success;
    outcome.tasks.push_back(std::move(record));
  }
  return outcome;
}

}  // namespace manta::mission
