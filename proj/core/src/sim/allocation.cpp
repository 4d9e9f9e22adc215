#include "manta/sim/allocation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace manta::sim {

namespace {

using Mat68 = Eigen::Matrix<double, 6, 8>;
using Mat86 = Eigen::Matrix<double, 8, 6>;

Mat68 to_eigen(const std::array<double, 48>& a) {
  Mat68 m;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 8; ++c) m(r, c) = a[static_cast<std::size_t>(r * 8 + c)];
  return m;
}

}  // namespace

Result<AllocationModel> AllocationModel::from_matrix(const std::array<double, 48>& a_row_major,
                                                     double pwm_gain) {
  if (pwm_gain <= 0.0) return make_error("bad_allocation", "pwm gain must be positive");
  const Mat68 a = to_eigen(a_row_major);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (lu.rank() < 6) {
    return make_error("bad_allocation", "allocation matrix must have full row rank");
  }
  // Right pseudo-inverse A' (A A')^-1; exact for full-row-rank A.
  const Eigen::Matrix<double, 6, 6> gram = a * a.transpose();
  const Mat86 pinv = a.transpose() * gram.inverse();

  AllocationModel model;
  model.a_ = a_row_major;
  model.pwm_gain_ = pwm_gain;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 6; ++c) model.a_pinv_[static_cast<std::size_t>(r * 6 + c)] = pinv(r, c);
  return model;
}

AllocationModel AllocationModel::default_vectored8() {
  const double c = std::sqrt(0.5);   // cos/sin 45 deg
  const double lx = 0.2, ly = 0.2;   // corner offsets, metres
  const double yaw_arm = lx * c + ly * c;
  std::array<double, 48> a{};
  auto at = [&a](int r, int col) -> double& { return a[static_cast<std::size_t>(r * 8 + col)]; };
  // Horizontal thrusters 0..3 at (+-lx, +-ly), nozzles vectored 45 deg.
  // 0: front-left (+lx,+ly) dir(c,-c)   1: front-right (+lx,-ly) dir(c,c)
  // 2: rear-left  (-lx,+ly) dir(c,c)    3: rear-right  (-lx,-ly) dir(c,-c)
  at(0, 0) = c;  at(0, 1) = c;  at(0, 2) = c;  at(0, 3) = c;    // Fx
  at(1, 0) = -c; at(1, 1) = c;  at(1, 2) = c;  at(1, 3) = -c;   // Fy
  at(5, 0) = -yaw_arm; at(5, 1) = yaw_arm; at(5, 2) = -yaw_arm; at(5, 3) = yaw_arm;  // Mz
  // Vertical thrusters 4..7 at the corners, thrust +z (down/deeper).
  // 4: (+lx,+ly)  5: (+lx,-ly)  6: (-lx,+ly)  7: (-lx,-ly)
  at(2, 4) = 1;  at(2, 5) = 1;  at(2, 6) = 1;  at(2, 7) = 1;    // Fz
  at(3, 4) = ly; at(3, 5) = -ly; at(3, 6) = ly; at(3, 7) = -ly;  // Mx = y*Fz
  at(4, 4) = -lx; at(4, 5) = -lx; at(4, 6) = lx; at(4, 7) = lx;  // My = -x*Fz
  auto model = from_matrix(a);
  return std::move(model).take();  // the built-in geometry is full rank
}

Result<AllocationModel> AllocationModel::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("matrix")) {
    return make_error("bad_allocation", "allocation json requires matrix");
  }
  const auto& rows = j.at("matrix");
  if (!rows.is_array() || rows.size() != 6) {
    return make_error("bad_allocation", "matrix must have 6 rows");
  }
  std::array<double, 48> a{};
  for (std::size_t r = 0; r < 6; ++r) {
    if (!rows[r].is_array() || rows[r].size() != 8) {
      return make_error("bad_allocation", "matrix rows must have 8 columns");
    }
    for (std::size_t c = 0; c < 8; ++c) a[r * 8 + c] = rows[r][c].get<double>();
  }
  return from_matrix(a, j.value("pwm_gain", 400.0));
}

Json AllocationModel::to_json() const {
  Json rows = Json::array();
  for (std::size_t r = 0; r < 6; ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < 8; ++c) row.push_back(a_[r * 8 + c]);
    rows.push_back(std::move(row));
  }
  return Json{{"matrix", std::move(rows)}, {"pwm_gain", pwm_gain_}};
}

Wrench AllocationModel::apply(const EffortVector& u) const {
  Wrench tau{};
  for (std::size_t r = 0; r < 6; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < 8; ++c) acc += a_[r * 8 + c] * u[c];
    tau[r] = acc;
  }
  return tau;
}

EffortVector AllocationModel::pseudo_inverse_apply(const Wrench& tau) const {
  EffortVector u{};
  for (std::size_t r = 0; r < 8; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < 6; ++c) acc += a_pinv_[r * 6 + c] * tau[c];
    u[r] = acc;
  }
  return u;
}

EffortVector AllocationModel::allocate(const Wrench& tau) const {
  EffortVector u = pseudo_inverse_apply(tau);
  for (double& x : u) x = std::clamp(x, -1.0, 1.0);
  return u;
}

PwmArray AllocationModel::pwm_from_effort(const EffortVector& u) const {
  PwmArray pwm{};
  for (std::size_t i = 0; i < kNumThrusters; ++i) pwm[i] = kPwmNeutral + pwm_gain_ * u[i];
  return pwm;
}

double AllocationModel::effort_from_pwm(double pwm) const {
  return (pwm - kPwmNeutral) / pwm_gain_;
}

}  // namespace manta::sim
