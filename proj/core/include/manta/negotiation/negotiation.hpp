#pragma once

#include <optional>
#include <string>
#include <vector>

#include "manta/planner/astar.hpp"
#include "manta/util/geom.hpp"
#include "manta/util/json.hpp"
#include "manta/util/result.hpp"

namespace manta::negotiation {

struct TimedWaypoint {
  double t = 0.0;  // s
  Vec3 position;
};

using Trajectory = std::vector<TimedWaypoint>;

/// Broadcast intent: who, where over time, how big.
struct IntentMsg {
  std::string agent_id;
  Trajectory trajectory;  // timestamps strictly increasing
  double bounding_radius = 0.4;  // m
  std::string priority_key;      // defaults to agent_id

  Json to_json() const;
  static Result<IntentMsg> from_json(const Json& j);
};

struct ConflictReport {
  double t_star = 0.0;  // time of closest approach
  double d_star = 0.0;  // min surface-to-surface distance; negative = overlap
  bool conflicting = false;
};

inline constexpr double kDefaultConflictThreshold = 0.2;  // m
inline constexpr double kDefaultSampleDt = 0.1;           // s

/// Linear-interpolation sample, held at the ends.
Vec3 sample_trajectory(const Trajectory& traj, double t);

/// Sampled closest point of approach between two bounding spheres:
/// d(t) = |pA - pB| - (rA + rB), minimized over t = 0, dt, ..., horizon.
Result<std::pair<double, double>> predict_min_distance(const Trajectory& a, const Trajectory& b,
                                                       double radius_a, double radius_b,
                                                       double horizon,
                                                       double dt = kDefaultSampleDt);

/// Strictly below threshold.
bool detect_conflict(const ConflictReport& report, double threshold = kDefaultConflictThreshold);

ConflictReport make_report(const Trajectory& a, const Trajectory& b, double radius_a,
                           double radius_b, double horizon, double dt = kDefaultSampleDt,
                           double threshold = kDefaultConflictThreshold);

enum class Role { yield, proceed };

/// Deterministic, symmetric role assignment: the lexicographically smaller
/// priority key yields. Equal keys are a protocol fault.
Result<Role> negotiate(const IntentMsg& self, const IntentMsg& other);

struct ReplanParams {
  double threshold = kDefaultConflictThreshold;
  double sample_dt = kDefaultSampleDt;
  double hold_increment = 0.5;  // s
  double max_hold = 30.0;       // s
  double speed = 0.5;           // m/s for spatially replanned trajectories
  const planner::GridMap* map = nullptr;  // required for the spatial fallback
};

enum class ReplanKind { temporal, spatial, abort_hold };

struct ReplanResult {
  Trajectory trajectory;
  ReplanKind kind = ReplanKind::temporal;
  double hold_s = 0.0;
};

/// Yield-side replanning: temporal holds first (0.5 s steps up to 30 s), then
/// an A* detour around the other's swept corridor inflated by
/// rA + rB + threshold; if neither clears the conflict, abort to a stationary
/// hold (reported as such).
ReplanResult replan_yield(const Trajectory& own, const Trajectory& other, double radius_own,
                          double radius_other, const ReplanParams& params);

/// Delay a trajectory by holding its first position for `hold` seconds.
Trajectory delayed(const Trajectory& traj, double hold);

double trajectory_end_time(const Trajectory& traj);

}  // namespace manta::negotiation
