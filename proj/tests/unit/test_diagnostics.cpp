#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "manta/diagnostics/diagnostics.hpp"
#include "manta/util/rng.hpp"
#include "oracles.hpp"

using namespace manta;
using namespace manta::diagnostics;
using sim::ThrusterHealth;

namespace {

// Build a window from per-sample (cmd, obs) generators.
template <typename CmdFn, typename ObsFn>
StatusWindow make_window(CmdFn cmd, ObsFn obs) {
  std::vector<sim::VehicleStatus> samples;
  for (int k = 0; k < 10; ++k) {
    sim::VehicleStatus s;
    s.t = k * 0.1;
    for (int i = 0; i < 8; ++i) {
      s.thrusters[static_cast<std::size_t>(i)] = {i, cmd(k, i), obs(k, i)};
    }
    samples.push_back(s);
  }
  auto w = StatusWindow::from_samples(samples);
  REQUIRE(w.ok());
  return w.value();
}

double active_cmd(int k, int i) {
  // All thrusters commanded well past the activity gate, varying per sample.
  return 1500.0 + (i % 2 ? -1 : 1) * (120.0 + 10.0 * (k % 3));
}

}  // namespace

TEST_CASE("expected_pwm zero wrench gives all neutral") {
  const auto alloc = sim::AllocationModel::default_vectored8();
  const auto pwm = expected_pwm({0, 0, 0, 0, 0, 0}, alloc);
  for (double p : pwm) CHECK(p == doctest::Approx(1500.0));
}

TEST_CASE("expected_pwm pure yaw is antisymmetric per the pseudo-inverse oracle") {
  const auto alloc = sim::AllocationModel::default_vectored8();
  const sim::Wrench tau{0, 0, 0, 0, 0, 0.2};
  const auto pwm = expected_pwm(tau, alloc);
  const auto pinv = oracles::pinv_6x8(alloc.matrix());
  const auto u = oracles::apply_8x6(pinv, {0, 0, 0, 0, 0, 0.2});
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(pwm[i] == doctest::Approx(1500.0 + 400.0 * u[i]).epsilon(1e-9));
  }
  // Horizontal bank splits symmetrically around neutral.
  CHECK(pwm[0] == doctest::Approx(3000.0 - pwm[1]));
  CHECK(pwm[2] == doctest::Approx(3000.0 - pwm[3]));
}

TEST_CASE("expected_pwm saturates at 1100/1900") {
  const auto alloc = sim::AllocationModel::default_vectored8();
  const auto pwm = expected_pwm({50.0, 0, 0, 0, 0, 0}, alloc);
  for (std::size_t i = 0; i < 4; ++i) CHECK(pwm[i] == doctest::Approx(1900.0));
  const auto pwm_rev = expected_pwm({-50.0, 0, 0, 0, 0, 0}, alloc);
  for (std::size_t i = 0; i < 4; ++i) CHECK(pwm_rev[i] == doctest::Approx(1100.0));
}

TEST_CASE("all thrusters tracking commands classify ok") {
  const auto w = make_window(active_cmd, active_cmd);
  const auto labels = classify(w);
  for (auto l : labels) CHECK(l == ThrusterHealth::ok);
}

TEST_CASE("flatlined thrusters 2,3 during maneuver classify dead") {
  const auto w = make_window(active_cmd, [](int k, int i) {
    if (i == 2 || i == 3) return 1500.0;
    return active_cmd(k, i);
  });
  const auto labels = classify(w);
  CHECK(labels[2] == ThrusterHealth::dead);
  CHECK(labels[3] == ThrusterHealth::dead);
  for (std::size_t i : {0u, 1u, 4u, 5u, 6u, 7u}) CHECK(labels[i] == ThrusterHealth::ok);
}

TEST_CASE("thruster at 1950 us in 7 samples classifies out_of_range") {
  // Both trigger conditions verified by hand count: pwm_obs outside
  // [1100,1900] in any sample, and |obs-cmd| > 150 in 7 >= 6 samples.
  const auto w = make_window(
      [](int, int) { return 1550.0; },
      [](int k, int i) {
        if (i == 5 && k < 7) return 1950.0;  // deviation 400 > 150, and > 1900
        return 1550.0;
      });
  const auto labels = classify(w);
  CHECK(labels[5] == ThrusterHealth::out_of_range);
  CHECK(labels[0] == ThrusterHealth::ok);
}

TEST_CASE("dead takes precedence when both rules match") {
  // Flat at neutral while commanded at 1800: deviation 300 > 150 in all
  // samples (out_of_range rule) and flatline (dead rule).
  const auto w = make_window([](int, int) { return 1800.0; },
                             [](int, int) { return 1500.0; });
  const auto labels = classify(w);
  for (auto l : labels) CHECK(l == ThrusterHealth::dead);
}

TEST_CASE("idle blindness: dead is undetectable without commanded motion") {
  const auto w = make_window([](int, int) { return 1500.0; },
                             [](int, int) { return 1500.0; });
  const auto labels = classify(w);
  for (auto l : labels) CHECK(l == ThrusterHealth::ok);
}

TEST_CASE("healthy diagnose emits the rigid three-line report") {
  const auto d = diagnose(make_window(active_cmd, active_cmd));
  CHECK(d.issue == "ISSUE: none");
  CHECK(d.status == "STATUS: 8/8 thrusters nominal");
  CHECK(d.action == "ACTION: continue mission");
  CHECK(parses_as_report(d.lines()));
}

TEST_CASE("case-4 window names thrusters 2,3 dead") {
  const auto d = diagnose(make_window(active_cmd, [](int k, int i) {
    if (i == 2 || i == 3) return 1500.0;
    return active_cmd(k, i);
  }));
  CHECK(d.issue == "ISSUE: thrusters 2,3 dead");
  CHECK(d.status == "STATUS: 6/8 thrusters nominal");
  CHECK(d.action == "ACTION: reduce DOF demands; replan with degraded allocation");
  CHECK(parses_as_report(d.lines()));
}

TEST_CASE("four-fault window reports 4/8 nominal") {
  const auto d = diagnose(make_window(active_cmd, [](int k, int i) {
    if (i == 2 || i == 3 || i == 6 || i == 7) return 1500.0;
    return active_cmd(k, i);
  }));
  CHECK(d.issue == "ISSUE: thrusters 2,3,6,7 dead");
  CHECK(d.status == "STATUS: 4/8 thrusters nominal");
  CHECK(parses_as_report(d.lines()));
}

TEST_CASE("mixed fault kinds render as ordered segments") {
  const auto d = diagnose(make_window(active_cmd, [](int k, int i) {
    if (i == 2) return 1500.0;
    if (i == 5) return active_cmd(k, i) + 500.0;
    return active_cmd(k, i);
  }));
  CHECK(d.issue == "ISSUE: thrusters 2 dead; thrusters 5 out_of_range");
  CHECK(d.action == "ACTION: reduce DOF demands; replan with degraded allocation");
  CHECK(parses_as_report(d.lines()));
}

TEST_CASE("report format survives fuzzed windows") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = make_window(
        [&](int, int) { return rng.uniform(800.0, 2200.0); },
        [&](int, int) { return rng.uniform(800.0, 2200.0); });
    const auto d = diagnose(w);
    CHECK(parses_as_report(d.lines()));
  }
}

TEST_CASE("window construction rejects bad sample sets") {
  std::vector<sim::VehicleStatus> nine(9);
  for (int i = 0; i < 9; ++i) nine[static_cast<std::size_t>(i)].t = i;
  CHECK(!StatusWindow::from_samples(nine).ok());

  std::vector<sim::VehicleStatus> dup(10);
  for (int i = 0; i < 10; ++i) dup[static_cast<std::size_t>(i)].t = i;
  dup[5].t = dup[4].t;  // duplicate timestamp
  CHECK(!StatusWindow::from_samples(dup).ok());
}

TEST_CASE("monitor emits nothing until ten samples accumulate") {
  Monitor m;
  for (int k = 0; k < 9; ++k) {
    sim::VehicleStatus s;
    s.t = k * 0.1;
    auto r = m.push(s);
    REQUIRE(r.ok());
    CHECK(!r.value().has_value());
  }
  sim::VehicleStatus s;
  s.t = 0.9;
  auto r = m.push(s);
  REQUIRE(r.ok());
  CHECK(r.value().has_value());
}

TEST_CASE("monitor flags duplicate timestamps as stream faults") {
  Monitor m;
  sim::VehicleStatus s;
  s.t = 1.0;
  REQUIRE(m.push(s).ok());
  auto r = m.push(s);
  CHECK(!r.ok());
  CHECK(r.error().code == "stream_fault");
}

TEST_CASE("monitor transition latency is at most the window length") {
  // Faults {2,3} injected at sample 20 and cleared at sample 50: faulty
  // diagnoses must begin by sample 30 and healthy ones resume by sample 60.
  Monitor m;
  int first_faulty = -1, first_healthy_after = -1;
  for (int k = 0; k < 80; ++k) {
    const bool faulted = k >= 20 && k < 50;
    sim::VehicleStatus s;
    s.t = k * 0.1;
    for (int i = 0; i < 8; ++i) {
      const double cmd = active_cmd(k, i);
      double obs = cmd;
      if (faulted && (i == 2 || i == 3)) obs = 1500.0;
      s.thrusters[static_cast<std::size_t>(i)] = {i, cmd, obs};
    }
    auto r = m.push(s);
    REQUIRE(r.ok());
    if (!r.value().has_value()) continue;
    const bool says_faulty = r.value()->labels[2] == ThrusterHealth::dead &&
                             r.value()->labels[3] == ThrusterHealth::dead;
    if (k >= 20 && says_faulty && first_faulty < 0) first_faulty = k;
    if (k >= 50 && !says_faulty && first_healthy_after < 0) first_healthy_after = k;
  }
  REQUIRE(first_faulty >= 0);
  REQUIRE(first_healthy_after >= 0);
  CHECK(first_faulty <= 30);
  CHECK(first_healthy_after <= 60);
}
