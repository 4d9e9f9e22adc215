#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "manta/negotiation/negotiation.hpp"
#include "manta/util/rng.hpp"
#include "oracles.hpp"

using namespace manta;
using namespace manta::negotiation;

namespace {

Trajectory line(Vec3 from, Vec3 to, double duration, int points = 11) {
  Trajectory t;
  for (int i = 0; i < points; ++i) {
    const double a = static_cast<double>(i) / (points - 1);
    t.push_back({a * duration, from + (to - from) * a});
  }
  return t;
}

}  // namespace

TEST_CASE("parallel lines keep constant separation") {
  const auto a = line({0, 0, 0}, {10, 0, 0}, 10.0);
  const auto b = line({0, 5, 0}, {10, 5, 0}, 10.0);
  auto md = predict_min_distance(a, b, 0.5, 0.5, 10.0);
  REQUIRE(md.ok());
  CHECK(md.value().second == doctest::Approx(4.0));
}

TEST_CASE("head-on crossing at t=3 bottoms out at -(rA+rB)") {
  const auto a = line({0, 0, 0}, {6, 0, 0}, 6.0, 7);   // 1 m/s
  const auto b = line({6, 0, 0}, {0, 0, 0}, 6.0, 7);   // 1 m/s, opposite
  auto md = predict_min_distance(a, b, 0.4, 0.3, 6.0, 0.1);
  REQUIRE(md.ok());
  CHECK(md.value().first == doctest::Approx(3.0));
  CHECK(md.value().second == doctest::Approx(-0.7));
}

TEST_CASE("random trajectory pairs match the fine-grid oracle within a sample bound") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    Trajectory a, b;
    std::vector<oracles::TimedPoint> oa, ob;
    double ta = 0.0, tb = 0.0;
    Vec3 pa{rng.uniform(-5, 5), rng.uniform(-5, 5), 0};
    Vec3 pb{rng.uniform(-5, 5), rng.uniform(-5, 5), 0};
    double max_speed = 0.0;
    for (int i = 0; i < 20; ++i) {
      a.push_back({ta, pa});
      b.push_back({tb, pb});
      oa.push_back({ta, pa.x, pa.y, pa.z});
      ob.push_back({tb, pb.x, pb.y, pb.z});
      const Vec3 da{rng.uniform(-1, 1), rng.uniform(-1, 1), 0};
      const Vec3 db{rng.uniform(-1, 1), rng.uniform(-1, 1), 0};
      const double step_a = 1.0 + rng.uniform01();
      const double step_b = 1.0 + rng.uniform01();
      max_speed = std::max({max_speed, da.norm() / step_a, db.norm() / step_b});
      pa += da;
      pb += db;
      ta += step_a;
      tb += step_b;
    }
    const double horizon = std::max(ta, tb);
    const double dt = 0.1;
    auto md = predict_min_distance(a, b, 0.4, 0.4, horizon, dt);
    REQUIRE(md.ok());
    auto fine = oracles::fine_grid_min_distance(oa, ob, 0.4, 0.4, horizon, dt / 100.0);
    // One coarse sample can miss the true minimum by at most the relative
    // motion over dt.
    const double bound = 2.0 * max_speed * dt;
    CHECK(md.value().second >= fine.second - 1e-9);
    CHECK(md.value().second - fine.second <= bound + 1e-9);
  }
}

TEST_CASE("conflict detection threshold is strict") {
  ConflictReport r;
  r.d_star = 0.19;
  CHECK(detect_conflict(r, 0.2));
  r.d_star = 0.2;
  CHECK(!detect_conflict(r, 0.2));
  r.d_star = 5.0;
  CHECK(!detect_conflict(r, 0.2));
}

TEST_CASE("negotiation role assignment is lexicographic and symmetric") {
  IntentMsg a;
  a.agent_id = "A";
  a.trajectory = line({0, 0, 0}, {1, 0, 0}, 1.0, 2);
  IntentMsg b;
  b.agent_id = "B";
  b.trajectory = line({1, 0, 0}, {0, 0, 0}, 1.0, 2);

  auto ra = negotiate(a, b);
  auto rb = negotiate(b, a);
  REQUIRE(ra.ok());
  REQUIRE(rb.ok());
  CHECK(ra.value() == Role::yield);
  CHECK(rb.value() == Role::proceed);

  // Swapped ids flip the roles.
  a.agent_id = "Z";
  a.priority_key = "Z";
  auto rz = negotiate(a, b);
  REQUIRE(rz.ok());
  CHECK(rz.value() == Role::proceed);
}

TEST_CASE("duplicate priority keys are a protocol fault") {
  IntentMsg a;
  a.agent_id = "same";
  a.trajectory = line({0, 0, 0}, {1, 0, 0}, 1.0, 2);
  IntentMsg b = a;
  auto r = negotiate(a, b);
  REQUIRE(!r.ok());
  CHECK(r.error().code == "protocol_fault");
}

TEST_CASE("intent json round trip and validation") {
  IntentMsg m;
  m.agent_id = "A";
  m.bounding_radius = 0.4;
  m.trajectory = line({0, 0, 0}, {3, 1, 0}, 6.0, 4);
  auto parsed = IntentMsg::from_json(m.to_json());
  REQUIRE(parsed.ok());
  CHECK(parsed.value().agent_id == "A");
  CHECK(parsed.value().trajectory.size() == 4);

  Json bad = m.to_json();
  bad["trajectory"][1]["t"] = -5.0;  // breaks monotonicity
  CHECK(!IntentMsg::from_json(bad).ok());
}

TEST_CASE("temporal hold resolves a crossing conflict") {
  // Two paths crossing at the origin at the same time; a short hold by the
  // yielding agent separates them.
  const auto own = line({-5, 0, 0}, {5, 0, 0}, 10.0);
  const auto other = line({0, -5, 0}, {0, 5, 0}, 10.0);
  const auto conflict = make_report(own, other, 0.4, 0.4, 10.0);
  REQUIRE(conflict.conflicting);

  ReplanParams params;
  auto result = replan_yield(own, other, 0.4, 0.4, params);
  CHECK(result.kind == ReplanKind::temporal);
  CHECK(result.hold_s > 0.0);
  // Oracle re-run: the predictor on the outputs clears the threshold.
  const double horizon = std::max(trajectory_end_time(result.trajectory),
                                  trajectory_end_time(other));
  auto md = predict_min_distance(result.trajectory, other, 0.4, 0.4, horizon);
  REQUIRE(md.ok());
  CHECK(md.value().second >= params.threshold - 1e-9);
  // Liveness: the yielding agent still reaches its goal.
  CHECK(distance(result.trajectory.back().position, own.back().position) < 1e-9);
}

TEST_CASE("spatial detour is chosen when holding can never separate") {
  // The other vehicle parks on the yielder's goal approach corridor, so no
  // temporal hold within budget works; the map admits a detour.
  planner::GridMap map(20, 20, 1.0, Vec3{-10.0, -10.0, 0.0});
  Trajectory own = line({-5, 0, 0}, {5, 0, 0}, 20.0);
  Trajectory other;
  other.push_back({0.0, {0, 0, 0}});
  other.push_back({120.0, {0, 0.01, 0}});  // effectively stationary on the corridor

  ReplanParams params;
  params.map = &map;
  params.speed = 0.5;
  auto result = replan_yield(own, other, 0.4, 0.4, params);
  CHECK(result.kind == ReplanKind::spatial);
  const double horizon = std::max(trajectory_end_time(result.trajectory), 120.0);
  auto md = predict_min_distance(result.trajectory, other, 0.4, 0.4, horizon);
  REQUIRE(md.ok());
  CHECK(md.value().second >= params.threshold - 1e-9);
  CHECK(distance(result.trajectory.back().position, own.back().position) < 1.0);
}

TEST_CASE("fully blocked map aborts to hold") {
  // Stationary blocker plus a map made of walls: nothing works, so the
  // yielder parks and reports it.
  planner::GridMap map(5, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x)
      if (!(x == 0 && y == 0)) map.set_occupied({x, y});
  Trajectory own = line({0.5, 0.5, 0}, {4.5, 0.5, 0}, 8.0);
  Trajectory other;
  other.push_back({0.0, {4.5, 0.5, 0}});
  other.push_back({120.0, {0.51, 0.5, 0}});  // sweeps the whole corridor

  ReplanParams params;
  params.map = &map;
  auto result = replan_yield(own, other, 0.4, 0.4, params);
  CHECK(result.kind == ReplanKind::abort_hold);
  REQUIRE(!result.trajectory.empty());
  CHECK(distance(result.trajectory.front().position, own.front().position) < 1e-9);
  CHECK(distance(result.trajectory.back().position, own.front().position) < 1e-9);
}
