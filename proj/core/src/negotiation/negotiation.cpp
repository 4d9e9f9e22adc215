#include "manta/negotiation/negotiation.hpp"

#include <algorithm>
#include <cmath>

namespace manta::negotiation {

Json IntentMsg::to_json() const {
  Json traj = Json::array();
  for (const auto& w : trajectory) {
    traj.push_back(Json{{"t", w.t}, {"x", w.position.x}, {"y", w.position.y},
                        {"z", w.position.z}});
  }
  return Json{{"agent_id", agent_id},
              {"trajectory", std::move(traj)},
              {"radius", bounding_radius},
              {"priority", priority_key.empty() ? agent_id : priority_key}};
}

Result<IntentMsg> IntentMsg::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("agent_id") || !j.contains("trajectory")) {
    return make_error("bad_intent", "intent requires agent_id and trajectory");
  }
  IntentMsg m;
  m.agent_id = j.at("agent_id").get<std::string>();
  m.bounding_radius = j.value("radius", 0.4);
  if (m.bounding_radius <= 0.0) return make_error("bad_intent", "radius must be positive");
  m.priority_key = j.value("priority", m.agent_id);
  double last_t = -std::numeric_limits<double>::infinity();
  for (const auto& wj : j.at("trajectory")) {
    TimedWaypoint w;
    w.t = wj.at("t").get<double>();
    w.position = {wj.at("x").get<double>(), wj.at("y").get<double>(), wj.value("z", 0.0)};
    if (w.t <= last_t) return make_error("bad_intent", "timestamps must strictly increase");
    last_t = w.t;
    m.trajectory.push_back(w);
  }
  if (m.trajectory.empty()) return make_error("bad_intent", "empty trajectory");
  return m;
}

Vec3 sample_trajectory(const Trajectory& traj, double t) {
  if (traj.empty()) return {};
  if (t <= traj.front().t) return traj.front().position;
  if (t >= traj.back().t) return traj.back().position;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    if (t >= traj[i].t && t <= traj[i + 1].t) {
      const double span = traj[i + 1].t - traj[i].t;
      const double a = span > 0.0 ? (t - traj[i].t) / span : 0.0;
      return traj[i].position + (traj[i + 1].position - traj[i].position) * a;
    }
  }
  return traj.back().position;
}

double trajectory_end_time(const Trajectory& traj) {
  return traj.empty() ? 0.0 : traj.back().t;
}

Result<std::pair<double, double>> predict_min_distance(const Trajectory& a, const Trajectory& b,
                                                       double radius_a, double radius_b,
                                                       double horizon, double dt) {
  if (a.empty() || b.empty()) return make_error("bad_trajectory", "empty trajectory");
  if (dt <= 0.0) return make_error("bad_trajectory", "dt must be positive");
  double best_t = 0.0;
  double best_d = std::numeric_limits<double>::infinity();
  const double combined = radius_a + radius_b;
  for (double t = 0.0; t <= horizon + 1e-12; t += dt) {
    const double d = distance(sample_trajectory(a, t), sample_trajectory(b, t)) - combined;
    if (d < best_d) {
      best_d = d;
      best_t = t;
    }
  }
  return std::make_pair(best_t, best_d);
}

bool detect_conflict(const ConflictReport& report, double threshold) {
  return report.d_star < threshold;
}

ConflictReport make_report(const Trajectory& a, const Trajectory& b, double radius_a,
                           double radius_b, double horizon, double dt, double threshold) {
  ConflictReport r;
  auto md = predict_min_distance(a, b, radius_a, radius_b, horizon, dt);
  if (!md.ok()) return r;
  r.t_star = md.value().first;
  r.d_star = md.value().second;
  r.conflicting = detect_conflict(r, threshold);
  return r;
}

Result<Role> negotiate(const IntentMsg& self, const IntentMsg& other) {
  const std::string& mine = self.priority_key.empty() ? self.agent_id : self.priority_key;
  const std::string& theirs = other.priority_key.empty() ? other.agent_id : other.priority_key;
  if (mine == theirs) {
    return make_error("protocol_fault", "equal priority keys: " + mine);
  }
  return mine < theirs ? Role::yield : Role::proceed;
}

Trajectory delayed(const Trajectory& traj, double hold) {
  Trajectory out;
  if (traj.empty()) return out;
  out.push_back({0.0, traj.front().position});
  for (const auto& w : traj) {
    const double t = w.t + hold;
    if (t <= out.back().t) continue;
    out.push_back({t, w.position});
  }
  return out;
}

namespace {

double full_horizon(const Trajectory& a, const Trajectory& b) {
  return std::max(trajectory_end_time(a), trajectory_end_time(b));
}

Trajectory timed_through(const std::vector<Vec3>& waypoints, double speed, double hold) {
  Trajectory traj;
  if (waypoints.empty()) return traj;
  traj.push_back({0.0, waypoints.front()});
  double t = hold;
  if (hold > 0.0) traj.push_back({hold, waypoints.front()});
  Vec3 prev = waypoints.front();
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const double hop = distance(prev, waypoints[i]);
    if (hop <= 1e-9) continue;
    t += hop / speed;
    traj.push_back({t, waypoints[i]});
    prev = waypoints[i];
  }
  return traj;
}

bool segment_clear(const planner::GridMap& map, const Vec3& a, const Vec3& b) {
  const double step = 0.25 * map.resolution();
  const double len = distance(a, b);
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int i = 0; i <= n; ++i) {
    const Vec3 p = a + (b - a) * (static_cast<double>(i) / n);
    const planner::Cell c = map.world_to_cell(p);
    if (!map.in_bounds(c) || map.occupied(c)) return false;
  }
  return true;
}

}  // namespace

ReplanResult replan_yield(const Trajectory& own, const Trajectory& other, double radius_own,
                          double radius_other, const ReplanParams& params) {
  ReplanResult result;

  // Temporal first: cheap, keeps the geometric path.
  for (double hold = params.hold_increment; hold <= params.max_hold + 1e-9;
       hold += params.hold_increment) {
    Trajectory candidate = delayed(own, hold);
    const double horizon = full_horizon(candidate, other);
    auto md = predict_min_distance(candidate, other, radius_own, radius_other, horizon,
                                   params.sample_dt);
    if (md.ok() && md.value().second >= params.threshold) {
      result.trajectory = std::move(candidate);
      result.kind = ReplanKind::temporal;
      result.hold_s = hold;
      return result;
    }
  }

  // Spatial, first form: sidestep onto a laterally shifted lane (optionally
  // after a short hold). The predictor is the gate; the shift family only
  // generates candidates.
  if (!own.empty()) {
    const Vec3 start = own.front().position;
    const Vec3 goal = own.back().position;
    Vec3 dir = goal - start;
    dir.z = 0.0;
    const double len = dir.norm2d();
    if (len > 1e-6) {
      const Vec3 unit{dir.x / len, dir.y / len, 0.0};
      const Vec3 left{-unit.y, unit.x, 0.0};
      for (double shift : {0.8, -0.8, 1.2, -1.2, 1.6, -1.6, 2.4, -2.4}) {
        for (double hold : {0.0, 2.0, 4.0, 8.0}) {
          const Vec3 enter = start + unit * (0.15 * len) + left * shift;
          const Vec3 exit = start + unit * (0.85 * len) + left * shift;
          const std::vector<Vec3> waypoints{start, enter, exit, goal};
          if (params.map) {
            bool clear = true;
            for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
              if (!segment_clear(*params.map, waypoints[i], waypoints[i + 1])) clear = false;
            }
            if (!clear) continue;
          }
          Trajectory candidate = timed_through(waypoints, params.speed, hold);
          const double horizon = full_horizon(candidate, other);
          auto md = predict_min_distance(candidate, other, radius_own, radius_other, horizon,
                                         params.sample_dt);
          if (md.ok() && md.value().second >= params.threshold) {
            result.trajectory = std::move(candidate);
            result.kind = ReplanKind::spatial;
            result.hold_s = hold;
            return result;
          }
        }
      }
    }
  }

  // Spatial, second form: A* detour around the other's swept corridor.
  if (params.map && !own.empty()) {
    planner::GridMap blocked = *params.map;
    const double inflate_m = radius_own + radius_other + params.threshold;
    const int inflate_cells =
        static_cast<int>(std::ceil(inflate_m / blocked.resolution()));
    const double horizon = trajectory_end_time(other);
    for (double t = 0.0; t <= horizon + 1e-9; t += params.sample_dt) {
      const Vec3 p = sample_trajectory(other, t);
      const planner::Cell c = blocked.world_to_cell(p);
      for (int dy = -inflate_cells; dy <= inflate_cells; ++dy) {
        for (int dx = -inflate_cells; dx <= inflate_cells; ++dx) {
          const planner::Cell n{c.x + dx, c.y + dy};
          const double d = std::hypot(dx * blocked.resolution(), dy * blocked.resolution());
          if (d <= inflate_m && blocked.in_bounds(n)) blocked.set_occupied(n);
        }
      }
    }
    const planner::Cell start = blocked.world_to_cell(own.front().position);
    const planner::Cell goal = blocked.world_to_cell(own.back().position);
    auto detour = planner::astar(blocked, start, goal);
    if (detour.ok()) {
      Trajectory traj;
      double t = 0.0;
      Vec3 prev = own.front().position;
      traj.push_back({0.0, prev});
      for (const auto& w : detour.value().waypoints) {
        const double hop = distance(prev, w);
        if (hop <= 1e-9) continue;
        t += hop / params.speed;
        traj.push_back({t, w});
        prev = w;
      }
      const double horizon2 = full_horizon(traj, other);
      auto md = predict_min_distance(traj, other, radius_own, radius_other, horizon2,
                                     params.sample_dt);
      if (md.ok() && md.value().second >= params.threshold) {
        result.trajectory = std::move(traj);
        result.kind = ReplanKind::spatial;
        return result;
      }
    }
  }

  // No safe trajectory within budget: stop and report.
  result.kind = ReplanKind::abort_hold;
  if (!own.empty()) {
    result.trajectory = {{0.0, own.front().position},
                         {std::max(1.0, trajectory_end_time(other)), own.front().position}};
  }
  return result;
}

}  // namespace manta::negotiation
