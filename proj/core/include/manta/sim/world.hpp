#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "manta/sim/allocation.hpp"
#include "manta/util/geom.hpp"
#include "manta/util/json.hpp"
#include "manta/util/result.hpp"
#include "manta/util/rng.hpp"

namespace manta::sim {

enum class VehicleClass { auv, asv };

enum class ThrusterHealth { ok, dead, out_of_range };

const char* to_string(ThrusterHealth h);

struct Thruster {
  int id = 0;
  double pwm_cmd = kPwmNeutral;
  double pwm_obs = kPwmNeutral;
  ThrusterHealth health = ThrusterHealth::ok;
};

using ThrusterBank = std::array<Thruster, kNumThrusters>;

/// 2.5D kinematic state: position, wrapped yaw, body-frame velocity, yaw rate.
struct VehicleState {
  Vec3 position;        // z is depth (>= 0); ASVs stay at z = 0
  double yaw = 0.0;     // rad, wrapped to (-pi, pi]
  Vec3 velocity;        // body frame, m/s
  double yaw_rate = 0.0;
};

struct VehicleParams {
  double mass = 10.0;           // kg
  double inertia_z = 2.0;       // kg m^2
  double thrust_per_effort = 10.0;  // N at |u| = 1
  // Discrete loop gain kp * thrust * dt / inertia must stay below 1 for the
  // default dt range (0.05-0.2 s).
  std::array<double, 4> kp{5.0, 5.0, 5.0, 1.0};  // surge/sway/heave/yaw-rate P gains
  std::array<double, 4> kd{0.0, 0.0, 0.0, 0.0};
};

struct SensorParams {
  double odom_drift_rate = 0.0;   // m per sqrt(s), random-walk
  double sigma_dvl = 0.0;         // m/s per axis
  double sigma_compass = 0.0;     // rad
  double sigma_bearing = 0.0;     // rad, detections
  double sigma_range = 0.0;       // m, detections
  double fov_half_angle = 3.14159265358979323846;  // rad; default all-around
  double max_range = 20.0;        // m
  double false_negative_rate = 0.0;
  double clutter_rate = 0.0;      // probability of one clutter detection per frame
};

/// Desired body twist tracked by the PD allocation loop; only the four
/// actuated 2.5D DOFs are used.
struct Twist {
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double yaw_rate = 0.0;
};

struct Vehicle {
  std::string id;
  VehicleClass klass = VehicleClass::auv;
  VehicleState state;
  ThrusterBank thrusters{};
  AllocationModel allocation = AllocationModel::default_vectored8();
  VehicleParams params;
  SensorParams sensors;
  Twist commanded;
  std::array<double, 4> prev_twist_error{0, 0, 0, 0};
  bool armed = true;
  std::string mode = "GUIDED";
  // Sensor-side state (odometry random walk).
  Vec3 odom_drift;
  double last_sense_time = -1.0;
};

struct Obstacle {
  Vec3 center;
  double radius = 0.5;
  std::string klass = "obstacle";
};

struct DisturbancePulse {
  double t_start = 0.0;
  double t_end = 0.0;
  Vec3 force;  // world frame, N
};

/// One JSON status sample consumed by diagnostics.
struct ThrusterSample {
  int id = 0;
  double pwm_cmd = kPwmNeutral;
  double pwm_obs = kPwmNeutral;
};

struct VehicleStatus {
  double t = 0.0;
  bool armed = true;
  std::string mode = "GUIDED";
  std::array<ThrusterSample, kNumThrusters> thrusters{};

  Json to_json() const;
  static Result<VehicleStatus> from_json(const Json& j);
};

struct Detection {
  std::string klass;
  double bearing = 0.0;  // rad, relative to vehicle yaw
  double range = 0.0;    // m
  double confidence = 1.0;

  Json to_json() const;
};

struct SensorFrame {
  VehicleStatus status;
  Vec3 odom_position;   // truth + integrated drift
  double odom_yaw = 0.0;
  Vec3 dvl_velocity;    // body frame, noisy
  double compass_yaw = 0.0;
  std::vector<Detection> detections;
};

struct World {
  std::map<std::string, Vehicle> vehicles;
  std::vector<Obstacle> obstacles;
  std::vector<Vec3> pipeline;  // polyline in the z-plane
  double tether_length = 10.0;
  std::optional<DisturbancePulse> disturbance;
  Vec3 current;  // ambient water current, world frame m/s
  double clock = 0.0;

  Vehicle* find(const std::string& id);
  const Vehicle* find(const std::string& id) const;
};

/// PD law on twist error -> wrench -> saturated pseudo-inverse allocation ->
/// PWM; observed PWM reflects per-thruster health.
Result<void> command(World& world, const std::string& vehicle_id, const Twist& desired);

/// Shared healthy-path formula: wrench -> saturated allocation -> commanded PWM.
PwmArray pwm_for_wrench(const Wrench& tau, const AllocationModel& allocation);

/// Semi-implicit Euler step; dead thrusters contribute zero effort,
/// out-of-range thrusters the (physically clamped) observed effort.
void step(World& world, double dt);

Result<void> inject_fault(World& world, const std::string& vehicle_id,
                          const std::vector<int>& thruster_ids, ThrusterHealth kind);
Result<void> clear_fault(World& world, const std::string& vehicle_id,
                         const std::vector<int>& thruster_ids);

Result<SensorFrame> sense(World& world, const std::string& vehicle_id, Rng& rng);

VehicleStatus status_of(const World& world, const Vehicle& v);

/// Necessary tether condition: straight-line distance <= 0.95 L.
bool tether_feasible(const Vec3& asv_position, const Vec3& auv_position, double length);

/// Signed lateral offset of a point from a polyline (sign from the segment's
/// left normal); used as the pipeline-following error.
double lateral_error_to_polyline(const std::vector<Vec3>& polyline, const Vec3& p);

}  // namespace manta::sim
