#include "manta/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace manta::sim {

const char* to_string(ThrusterHealth h) {
  switch (h) {
    case ThrusterHealth::ok: return "ok";
    case ThrusterHealth::dead: return "dead";
    case ThrusterHealth::out_of_range: return "out_of_range";
  }
  return "?";
}

Json VehicleStatus::to_json() const {
  Json arr = Json::array();
  for (const auto& t : thrusters) {
    arr.push_back(Json{{"id", t.id}, {"pwm_cmd", t.pwm_cmd}, {"pwm_obs", t.pwm_obs}});
  }
  return Json{{"t", t}, {"armed", armed}, {"mode", mode}, {"thrusters", std::move(arr)}};
}

Result<VehicleStatus> VehicleStatus::from_json(const Json& j) {
  if (!j.is_object()) return make_error("bad_status", "status must be an object");
  VehicleStatus s;
  if (!j.contains("t") || !j.contains("thrusters")) {
    return make_error("bad_status", "status requires t and thrusters");
  }
  s.t = j.at("t").get<double>();
  s.armed = j.value("armed", true);
  s.mode = j.value("mode", "GUIDED");
  const auto& arr = j.at("thrusters");
  if (!arr.is_array() || arr.size() != kNumThrusters) {
    return make_error("bad_status", "status requires exactly 8 thruster entries");
  }
  for (std::size_t i = 0; i < kNumThrusters; ++i) {
    const auto& tj = arr[i];
    s.thrusters[i].id = tj.at("id").get<int>();
    if (s.thrusters[i].id != static_cast<int>(i)) {
      return make_error("bad_status", "thruster ids must be 0..7 in order");
    }
    s.thrusters[i].pwm_cmd = tj.at("pwm_cmd").get<double>();
    s.thrusters[i].pwm_obs = tj.at("pwm_obs").get<double>();
  }
  return s;
}

Json Detection::to_json() const {
  return Json{{"class", klass}, {"bearing", bearing}, {"range", range}, {"confidence", confidence}};
}

Vehicle* World::find(const std::string& id) {
  auto it = vehicles.find(id);
  return it == vehicles.end() ? nullptr : &it->second;
}

const Vehicle* World::find(const std::string& id) const {
  auto it = vehicles.find(id);
  return it == vehicles.end() ? nullptr : &it->second;
}

PwmArray pwm_for_wrench(const Wrench& tau, const AllocationModel& allocation) {
  return allocation.pwm_from_effort(allocation.allocate(tau));
}

Result<void> command(World& world, const std::string& vehicle_id, const Twist& desired) {
  Vehicle* v = world.find(vehicle_id);
  if (!v) return make_error("unknown_vehicle", "no vehicle: " + vehicle_id);
  v->commanded = desired;

  const std::array<double, 4> err{
      desired.vx - v->state.velocity.x,
      desired.vy - v->state.velocity.y,
      desired.vz - v->state.velocity.z,
      desired.yaw_rate - v->state.yaw_rate,
  };
  Wrench tau{};
  for (std::size_t i = 0; i < 4; ++i) {
    const double d_err = err[i] - v->prev_twist_error[i];
    const double out = v->params.kp[i] * err[i] + v->params.kd[i] * d_err;
    v->prev_twist_error[i] = err[i];
    if (i < 3) {
      tau[i] = out;  // Fx Fy Fz
    } else {
      tau[5] = out;  // Mz
    }
  }

  const PwmArray pwm = pwm_for_wrench(tau, v->allocation);
  for (std::size_t i = 0; i < kNumThrusters; ++i) {
    Thruster& t = v->thrusters[i];
    t.id = static_cast<int>(i);
    t.pwm_cmd = pwm[i];
    switch (t.health) {
      case ThrusterHealth::ok: t.pwm_obs = t.pwm_cmd; break;
      case ThrusterHealth::dead: t.pwm_obs = kPwmNeutral; break;
      case ThrusterHealth::out_of_range: t.pwm_obs = t.pwm_cmd + 300.0; break;
    }
  }
  return ok_result();
}

void step(World& world, double dt) {
  for (auto& [id, v] : world.vehicles) {
    (void)id;
    // Actual effort per thruster given health.
    EffortVector u{};
    for (std::size_t i = 0; i < kNumThrusters; ++i) {
      const Thruster& t = v.thrusters[i];
      switch (t.health) {
        case ThrusterHealth::ok:
          u[i] = v.allocation.effort_from_pwm(t.pwm_cmd);
          break;
        case ThrusterHealth::dead:
          u[i] = 0.0;
          break;
        case ThrusterHealth::out_of_range: {
          const double clamped = std::clamp(t.pwm_obs, kPwmMin, kPwmMax);
          u[i] = v.allocation.effort_from_pwm(clamped);
          break;
        }
      }
    }
    const Wrench tau = v.allocation.apply(u);
    const double thrust = v.params.thrust_per_effort;

    Vec3 force_body{tau[0] * thrust, tau[1] * thrust, tau[2] * thrust};
    if (world.disturbance && world.clock >= world.disturbance->t_start &&
        world.clock < world.disturbance->t_end) {
      force_body += world_to_body(v.state.yaw, world.disturbance->force);
    }

    v.state.velocity += force_body * (dt / v.params.mass);
    v.state.yaw_rate += tau[5] * thrust * dt / v.params.inertia_z;
    v.state.yaw = wrap_angle(v.state.yaw + v.state.yaw_rate * dt);

    Vec3 world_vel = body_to_world(v.state.yaw, v.state.velocity) + world.current;
    if (v.klass == VehicleClass::asv) {
      world_vel.z = 0.0;
      v.state.velocity.z = 0.0;
    }
    v.state.position += world_vel * dt;
    if (v.state.position.z < 0.0) {
      v.state.position.z = 0.0;
      if (v.state.velocity.z < 0.0) v.state.velocity.z = 0.0;
    }
    if (v.klass == VehicleClass::asv) v.state.position.z = 0.0;
  }
  world.clock += dt;
}

Result<void> inject_fault(World& world, const std::string& vehicle_id,
                          const std::vector<int>& thruster_ids, ThrusterHealth kind) {
  Vehicle* v = world.find(vehicle_id);
  if (!v) return make_error("unknown_vehicle", "no vehicle: " + vehicle_id);
  for (int id : thruster_ids) {
    if (id < 0 || id >= static_cast<int>(kNumThrusters)) {
      return make_error("bad_thruster", "thruster id out of range: " + std::to_string(id));
    }
  }
  for (int id : thruster_ids) v->thrusters[static_cast<std::size_t>(id)].health = kind;
  return ok_result();
}

Result<void> clear_fault(World& world, const std::string& vehicle_id,
                         const std::vector<int>& thruster_ids) {
  return inject_fault(world, vehicle_id, thruster_ids, ThrusterHealth::ok);
}

VehicleStatus status_of(const World& world, const Vehicle& v) {
  VehicleStatus s;
  s.t = world.clock;
  s.armed = v.armed;
  s.mode = v.mode;
  for (std::size_t i = 0; i < kNumThrusters; ++i) {
    s.thrusters[i] = ThrusterSample{static_cast<int>(i), v.thrusters[i].pwm_cmd,
                                    v.thrusters[i].pwm_obs};
  }
  return s;
}

Result<SensorFrame> sense(World& world, const std::string& vehicle_id, Rng& rng) {
  Vehicle* v = world.find(vehicle_id);
  if (!v) return make_error("unknown_vehicle", "no vehicle: " + vehicle_id);
  const SensorParams& sp = v->sensors;

  SensorFrame frame;
  frame.status = status_of(world, *v);

  // Odometry random walk accumulates d * sqrt(elapsed) * N(0,1) per axis.
  const double elapsed = v->last_sense_time < 0.0 ? 0.0 : world.clock - v->last_sense_time;
  v->last_sense_time = world.clock;
  if (sp.odom_drift_rate > 0.0 && elapsed > 0.0) {
    const double sigma = sp.odom_drift_rate * std::sqrt(elapsed);
    v->odom_drift += Vec3{rng.gaussian(0.0, sigma), rng.gaussian(0.0, sigma),
                          rng.gaussian(0.0, sigma)};
  }
  frame.odom_position = v->state.position + v->odom_drift;
  frame.odom_yaw = v->state.yaw;

  frame.dvl_velocity = v->state.velocity;
  if (sp.sigma_dvl > 0.0) {
    frame.dvl_velocity += Vec3{rng.gaussian(0.0, sp.sigma_dvl), rng.gaussian(0.0, sp.sigma_dvl),
                               rng.gaussian(0.0, sp.sigma_dvl)};
  }
  frame.compass_yaw = wrap_angle(v->state.yaw +
                                 (sp.sigma_compass > 0.0 ? rng.gaussian(0.0, sp.sigma_compass)
                                                         : 0.0));

  for (const auto& obs : world.obstacles) {
    const Vec3 rel = obs.center - v->state.position;
    const double range = rel.norm2d();
    const double bearing = wrap_angle(std::atan2(rel.y, rel.x) - v->state.yaw);
    if (range > sp.max_range || std::abs(bearing) > sp.fov_half_angle) continue;
    if (sp.false_negative_rate > 0.0 && rng.chance(sp.false_negative_rate)) continue;
    Detection d;
    d.klass = obs.klass;
    d.bearing = sp.sigma_bearing > 0.0 ? wrap_angle(bearing + rng.gaussian(0.0, sp.sigma_bearing))
                                       : bearing;
    d.range = std::max(0.0, sp.sigma_range > 0.0 ? range + rng.gaussian(0.0, sp.sigma_range)
                                                 : range);
    d.confidence = std::clamp(1.0 - 0.5 * range / sp.max_range, 0.0, 1.0);
    frame.detections.push_back(std::move(d));
  }
  if (sp.clutter_rate > 0.0 && rng.chance(sp.clutter_rate)) {
    Detection d;
    d.klass = "clutter";
    d.bearing = rng.uniform(-sp.fov_half_angle, sp.fov_half_angle);
    d.range = rng.uniform(1.0, sp.max_range);
    d.confidence = 0.3;
    frame.detections.push_back(std::move(d));
  }
  return frame;
}

bool tether_feasible(const Vec3& asv_position, const Vec3& auv_position, double length) {
  return distance(asv_position, auv_position) <= 0.95 * length;
}

double lateral_error_to_polyline(const std::vector<Vec3>& polyline, const Vec3& p) {
  if (polyline.empty()) return 0.0;
  if (polyline.size() == 1) return distance(polyline.front(), p);
  double best = std::numeric_limits<double>::infinity();
  double signed_best = 0.0;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Vec3& a = polyline[i];
    const Vec3& b = polyline[i + 1];
    const double d = dist_point_segment(p, a, b);
    if (d < best) {
      best = d;
      const Vec3 ab = b - a;
      const double cross = ab.x * (p.y - a.y) - ab.y * (p.x - a.x);
      signed_best = cross >= 0.0 ? d : -d;
    }
  }
  return signed_best;
}

}  // namespace manta::sim
