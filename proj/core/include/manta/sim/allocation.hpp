#pragma once

#include <array>
#include <cstddef>

#include "manta/util/json.hpp"
#include "manta/util/result.hpp"

namespace manta::sim {

inline constexpr std::size_t kNumThrusters = 8;
inline constexpr std::size_t kWrenchDof = 6;  // Fx Fy Fz Mx My Mz

inline constexpr double kPwmMin = 1100.0;
inline constexpr double kPwmNeutral = 1500.0;
inline constexpr double kPwmMax = 1900.0;

using Wrench = std::array<double, kWrenchDof>;
using EffortVector = std::array<double, kNumThrusters>;
using PwmArray = std::array<double, kNumThrusters>;

/// Linear map from per-thruster effort u in [-1,1]^8 to body wrench, plus its
/// right pseudo-inverse. Geometry: thrusters 0-3 horizontal, vectored at 45
/// degrees on the four corners (surge/sway/yaw); thrusters 4-7 vertical
/// (heave/roll/pitch). PWM gain is 400 us per unit effort around 1500.
class AllocationModel {
 public:
  /// Builds from an explicit 6x8 matrix (row-major). Fails if the matrix does
  /// not have full row rank.
  static Result<AllocationModel> from_matrix(const std::array<double, 48>& a_row_major,
                                             double pwm_gain = 400.0);
  static AllocationModel default_vectored8();

  static Result<AllocationModel> from_json(const Json& j);
  Json to_json() const;

  /// tau = A u.
  Wrench apply(const EffortVector& u) const;
  /// u = A+ tau (unsaturated).
  EffortVector pseudo_inverse_apply(const Wrench& tau) const;
  /// u = sat(A+ tau), each component clamped to [-1, 1].
  EffortVector allocate(const Wrench& tau) const;

  PwmArray pwm_from_effort(const EffortVector& u) const;
  double effort_from_pwm(double pwm) const;

  double pwm_gain() const { return pwm_gain_; }
  const std::array<double, 48>& matrix() const { return a_; }
  const std::array<double, 48>& pseudo_inverse() const { return a_pinv_; }  // 8x6 row-major

 private:
  AllocationModel() = default;
  std::array<double, 48> a_{};       // 6x8
  std::array<double, 48> a_pinv_{};  // 8x6
  double pwm_gain_ = 400.0;
};

}  // namespace manta::sim
