#pragma once

#include <optional>
#include <string>
#include <vector>

#include "manta/memory/memory.hpp"
#include "manta/sim/world.hpp"

namespace manta::mission {

enum class InjectionField { vehicle_pose, current_estimate };

/// A corrective update pushed from real-world observation into the parallel
/// simulator.
struct FidelityInjection {
  InjectionField field = InjectionField::vehicle_pose;
  Vec3 correction;      // pose: new position; current: estimated drift velocity
  double cause = 0.0;   // divergence metric that triggered it

  Json to_json() const;
};

/// Watches real sensor frames against the twin's virtual state and emits
/// fidelity injections: a pose reset when position divergence exceeds the
/// threshold, a current-estimate update when the divergence drifts with a
/// persistent slope.
class TwinCurator {
 public:
  struct Params {
    double pose_divergence_m = 0.5;
    double current_slope_m_per_s = 0.02;
    std::size_t slope_window = 10;
  };

  explicit TwinCurator() : TwinCurator(Params{}) {}
  explicit TwinCurator(Params params) : params_(params), window_(params.slope_window) {}

  std::vector<FidelityInjection> curate(const sim::SensorFrame& real_frame, double stamp,
                                        const sim::VehicleState& virtual_state);

  /// Applies injections to the twin world (pose reset / current estimate).
  static void apply(const std::vector<FidelityInjection>& injections, sim::World& twin,
                    const std::string& vehicle_id);

 private:
  Params params_;
  memory::RingWindow window_;  // per-axis slope estimated on the divergence components
  memory::RingWindow window_y_{10};
  std::optional<double> last_stamp_;
};

}  // namespace manta::mission
