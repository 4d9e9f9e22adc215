#include "manta/planner/planner.hpp"

#include <algorithm>
#include <cmath>

namespace manta::planner {

Json map_to_json(const GridMap& map) {
  std::vector<std::string> rows;
  for (int y = 0; y < map.height(); ++y) {
    std::string row;
    for (int x = 0; x < map.width(); ++x) row.push_back(map.occupied({x, y}) ? '#' : '.');
    rows.push_back(std::move(row));
  }
  return Json{{"rows", rows},
              {"resolution", map.resolution()},
              {"origin", Json::array({map.origin().x, map.origin().y, map.origin().z})}};
}

Result<GridMap> map_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("rows")) return make_error("bad_map", "missing rows");
  std::string text;
  for (const auto& row : j.at("rows")) {
    text += row.get<std::string>();
    text += "\n";
  }
  Vec3 origin;
  if (j.contains("origin")) {
    origin = {j.at("origin")[0].get<double>(), j.at("origin")[1].get<double>(),
              j.at("origin")[2].get<double>()};
  }
  return load_ascii_map(text, j.value("resolution", 1.0), origin);
}

Json path_to_payload(const Path& path) {
  Json waypoints = Json::array();
  for (const auto& w : path.waypoints) {
    waypoints.push_back(Json{{"x", w.x}, {"y", w.y}, {"z", w.z}});
  }
  return Json{{"waypoints", std::move(waypoints)}, {"length", path.length}};
}

agent::TemplateBackend::RuleFactory make_planner_rule() {
  return []() {
    return [](const agent::ReasonerQuery& query) -> Result<agent::ReasonerReply> {
      // Inbox entries carry plan requests; answer the most recent one.
      const Json inbox = Json::parse(query.user_content, nullptr, false);
      if (!inbox.is_array() || inbox.empty()) return agent::ReasonerReply::noop();
      const Json* request = nullptr;
      for (const auto& env : inbox) {
        const auto& payload = env.at("payload");
        if (payload.is_object() && payload.contains("map")) request = &payload;
      }
      if (!request) return agent::ReasonerReply::noop();
      auto map = map_from_json(request->at("map"));
      if (!map.ok()) return map.error();
      const Cell start{request->at("start")[0].get<int>(), request->at("start")[1].get<int>()};
      const Cell goal{request->at("goal")[0].get<int>(), request->at("goal")[1].get<int>()};
      std::optional<TetherCheck> tether;
      if (request->contains("tether_length")) {
        TetherCheck t;
        t.length = request->at("tether_length").get<double>();
        t.depth = request->value("depth", 0.0);
        tether = t;
      }
      auto path = astar(map.value(), start, goal, request->value("clearance", 0.0), tether);
      if (!path.ok()) {
        // An infeasible request is a planning failure, not a backend fault.
        return agent::ReasonerReply::from_json(
            Json{{"waypoints", Json::array()}, {"length", 0.0}, {"infeasible", true}});
      }
      return agent::ReasonerReply::from_json(path_to_payload(path.value()));
    };
  };
}

namespace {

/// Snap a world point to the nearest free cell within a small search radius.
std::optional<Cell> snap_to_free(const GridMap& map, const Vec3& p, int radius = 1) {
  const Cell c = map.world_to_cell(p);
  if (map.free(c)) return c;
  std::optional<Cell> best;
  double best_d = 1e18;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const Cell n{c.x + dx, c.y + dy};
      if (!map.free(n)) continue;
      const double d = distance(map.cell_center(n), p);
      if (d < best_d) {
        best_d = d;
        best = n;
      }
    }
  }
  return best;
}

}  // namespace

AgentPlanResult agent_plan(const GridMap& perceived, const PlanRequest& request,
                           const agent::Constitution& constitution,
                           agent::ReasonerBackend& reasoner,
                           const agent::SafetyLimits& limits) {
  AgentPlanResult result;

  agent::ReasonerQuery query;
  query.system_text = constitution.render();
  Json req{{"map", map_to_json(perceived)},
           {"start", Json::array({request.start.x, request.start.y})},
           {"goal", Json::array({request.goal.x, request.goal.y})},
           {"clearance", request.clearance_cells}};
  if (request.tether) {
    req["tether_length"] = request.tether->length;
    req["depth"] = request.tether->depth;
  }
  Json inbox = Json::array();
  inbox.push_back(Json{{"topic", "plan/request"}, {"stamp", 0.0}, {"payload", std::move(req)}});
  query.user_content = inbox.dump();

  auto reply = reasoner.infer(query);
  if (!reply.ok()) {
    result.failure_reason = "backend fault: " + reply.error().message;
    return result;
  }
  if (reply.value().is_noop()) {
    result.failure_reason = "reasoner declined to plan";
    return result;
  }

  // Safety-validate the waypoint list before trusting it.
  bus::TopicSchema schema;
  schema.schema_id = "waypoint_list";
  schema.fields = {
      {"waypoints", bus::FieldKind::list, true, {}, {}, {}},
      {"waypoints[].x", bus::FieldKind::real, true, {}, {}, {}},
      {"waypoints[].y", bus::FieldKind::real, true, {}, {}, {}},
      {"waypoints[].z", bus::FieldKind::real, false, {}, {}, {}},
      {"length", bus::FieldKind::real, false, {}, {}, {}},
      {"infeasible", bus::FieldKind::boolean, false, {}, {}, {}},
  };
  Json parsed;
  if (auto v = agent::validate_text(reply.value().content, schema, limits, &parsed)) {
    result.failure_reason = std::string("safety parser: ") + agent::to_string(v->kind) + " " +
                            v->detail;
    return result;
  }
  if (parsed.value("infeasible", false) || parsed.at("waypoints").empty()) {
    result.failure_reason = "infeasible";
    return result;
  }

  // Snap to free cells of the perceived planning map; consecutive snapped
  // cells must stay 8-adjacent for the path to count as a grid path.
  Path path;
  for (const auto& wj : parsed.at("waypoints")) {
    const Vec3 p{wj.at("x").get<double>(), wj.at("y").get<double>(), wj.value("z", 0.0)};
    auto cell = snap_to_free(perceived, p);
    if (!cell) {
      result.failure_reason = "waypoint not snappable to free space";
      return result;
    }
    if (!path.cells.empty()) {
      const Cell& prev = path.cells.back();
      if (*cell == prev) continue;
      if (std::abs(cell->x - prev.x) > 1 || std::abs(cell->y - prev.y) > 1) {
        result.failure_reason = "waypoints not 8-connected";
        return result;
      }
    }
    path.cells.push_back(*cell);
    path.waypoints.push_back(perceived.cell_center(*cell));
  }
  if (path.cells.empty()) {
    result.failure_reason = "empty path";
    return result;
  }
  path.length = path_cost_cells(path.cells) * perceived.resolution();
  result.path = std::move(path);
  return result;
}

bool path_collides(const Path& path, const GridMap& truth) {
  if (path.waypoints.empty()) return false;
  for (std::size_t i = 0; i + 1 < path.waypoints.size(); ++i) {
    const Vec3& a = path.waypoints[i];
    const Vec3& b = path.waypoints[i + 1];
    const double len = distance(a, b);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.25 * truth.resolution()))));
    for (int k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) / steps;
      const Vec3 p = a + (b - a) * t;
      const Cell c = truth.world_to_cell(p);
      if (truth.in_bounds(c) && truth.occupied(c)) return true;
    }
  }
  const Cell last = truth.world_to_cell(path.waypoints.back());
  return truth.in_bounds(last) && truth.occupied(last);
}

namespace {

double mean_corridor_deviation(const Path& path, const Path& corridor) {
  if (path.waypoints.empty() || corridor.waypoints.empty()) return 0.0;
  if (corridor.waypoints.size() == 1) {
    double acc = 0.0;
    for (const auto& p : path.waypoints) acc += distance(p, corridor.waypoints[0]);
    return acc / static_cast<double>(path.waypoints.size());
  }
  double acc = 0.0;
  for (const auto& p : path.waypoints) {
    double best = 1e18;
    for (std::size_t i = 0; i + 1 < corridor.waypoints.size(); ++i) {
      best = std::min(best,
                      dist_point_segment(p, corridor.waypoints[i], corridor.waypoints[i + 1]));
    }
    acc += best;
  }
  return acc / static_cast<double>(path.waypoints.size());
}

}  // namespace

PlanEvaluation evaluate(const std::optional<Path>& path, const GridMap& truth, const Vec3& goal,
                        const Path& baseline, double success_radius_m) {
  PlanEvaluation eval;
  const double baseline_error =
      baseline.waypoints.empty() ? 0.0 : distance(baseline.waypoints.back(), goal);
  if (!path || path->waypoints.empty()) {
    eval.success = false;
    eval.final_error_m = distance(goal, Vec3{});  // no terminal position
    eval.error_delta_m = eval.final_error_m - baseline_error;
    return eval;
  }
  eval.final_error_m = distance(path->waypoints.back(), goal);
  const bool collides = path_collides(*path, truth);
  eval.success = !collides && eval.final_error_m <= success_radius_m;
  eval.error_delta_m =
      (eval.final_error_m + mean_corridor_deviation(*path, baseline)) - baseline_error;
  return eval;
}

}  // namespace manta::planner
