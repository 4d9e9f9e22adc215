#pragma once

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "manta/sim/allocation.hpp"
#include "manta/sim/world.hpp"
#include "manta/util/result.hpp"

namespace manta::diagnostics {

inline constexpr std::size_t kWindowLength = 10;

using sim::kNumThrusters;

/// Classification thresholds. The decision logic compares commanded against
/// observed PWM over the window; these are the separation margins.
struct Thresholds {
  double dead_epsilon_us = 5.0;       // |obs - 1500| <= eps in all samples
  double activity_gate_us = 50.0;     // |cmd - 1500| >= gate ...
  std::size_t activity_min_samples = 8;   // ... in at least this many samples
  double deviation_us = 150.0;        // |obs - cmd| > dev ...
  std::size_t deviation_min_samples = 6;  // ... in at least this many samples
};

struct StatusWindow {
  std::array<sim::VehicleStatus, kWindowLength> samples{};

  static Result<StatusWindow> from_samples(const std::vector<sim::VehicleStatus>& samples);
};

using FaultLabel = std::array<sim::ThrusterHealth, kNumThrusters>;

struct Diagnosis {
  std::string issue;    // "ISSUE: ..."
  std::string status;   // "STATUS: k/8 thrusters nominal"
  std::string action;   // "ACTION: ..."
  FaultLabel labels{};

  std::vector<std::string> lines() const { return {issue, status, action}; }
};

/// Expected healthy PWM for a commanded wrench; identical formula to the
/// simulator's healthy command path.
sim::PwmArray expected_pwm(const sim::Wrench& commanded_wrench,
                           const sim::AllocationModel& allocation);

/// Per-thruster fault classification over a full window. dead takes
/// precedence when both rules match.
FaultLabel classify(const StatusWindow& window, const Thresholds& thresholds = {});

/// Rigid three-line report.
Diagnosis diagnose(const StatusWindow& window, const Thresholds& thresholds = {});

/// Validates the three-line grammar produced by diagnose().
bool parses_as_report(const std::vector<std::string>& lines);

/// Stateful sliding-window monitor: emits one Diagnosis per sample once ten
/// have accumulated. Out-of-order or duplicate timestamps are stream faults.
class Monitor {
 public:
  explicit Monitor(Thresholds thresholds = {}) : thresholds_(thresholds) {}

  Result<std::optional<Diagnosis>> push(const sim::VehicleStatus& sample);
  std::size_t accumulated() const { return window_.size(); }
  void reset() { window_.clear(); }

 private:
  Thresholds thresholds_;
  std::deque<sim::VehicleStatus> window_;
};

}  // namespace manta::diagnostics
