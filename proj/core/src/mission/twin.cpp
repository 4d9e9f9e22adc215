#include "manta/mission/twin.hpp"

#include <cmath>

namespace manta::mission {

Json FidelityInjection::to_json() const {
  return Json{{"field", field == InjectionField::vehicle_pose ? "vehicle_pose"
                                                              : "current_estimate"},
              {"correction", Json::array({correction.x, correction.y, correction.z})},
              {"cause", cause}};
}

std::vector<FidelityInjection> TwinCurator::curate(const sim::SensorFrame& real_frame,
                                                   double stamp,
                                                   const sim::VehicleState& virtual_state) {
  std::vector<FidelityInjection> out;
  const Vec3 divergence = real_frame.odom_position - virtual_state.position;
  const double magnitude = divergence.norm();

  if (window_.push(stamp, divergence.x).ok()) {
    (void)window_y_.push(stamp, divergence.y);
  }

  if (magnitude > params_.pose_divergence_m) {
    FidelityInjection inj;
    inj.field = InjectionField::vehicle_pose;
    inj.correction = real_frame.odom_position;
    inj.cause = magnitude;
    out.push_back(inj);
    window_.clear();  // divergence history resets with the pose
    window_y_.clear();
    return out;
  }

  // Persistent lateral bias: per-axis least-squares slope of the divergence.
  if (window_.size() >= params_.slope_window) {
    const auto sx = memory::window_slope(window_);
    const auto sy = memory::window_slope(window_y_);
    if (sx && sy) {
      const double slope_mag = std::hypot(*sx, *sy);
      if (slope_mag > params_.current_slope_m_per_s) {
        FidelityInjection inj;
        inj.field = InjectionField::current_estimate;
        inj.correction = Vec3{*sx, *sy, 0.0};
        inj.cause = slope_mag;
        out.push_back(inj);
        window_.clear();
        window_y_.clear();
      }
    }
  }
  return out;
}

void TwinCurator::apply(const std::vector<FidelityInjection>& injections, sim::World& twin,
                        const std::string& vehicle_id) {
  sim::Vehicle* v = twin.find(vehicle_id);
  if (!v) return;
  for (const auto& inj : injections) {
    switch (inj.field) {
      case InjectionField::vehicle_pose:
        v->state.position = inj.correction;
        break;
      case InjectionField::current_estimate:
        // The twin models the unexplained drift as ambient current.
        twin.current += inj.correction;
        break;
    }
  }
}

}  // namespace manta::mission
