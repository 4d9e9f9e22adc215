#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "manta/codesynth/deploy.hpp"
#include "manta/util/rng.hpp"
#include "oracles.hpp"

using namespace manta;
using namespace manta::codesynth;

namespace {

NodeRequirement averaging_req(int window = 10) {
  NodeRequirement req;
  req.kind = "stateful averaging filter";
  req.inputs = {{"sensors/raw", "scalar"}};
  req.output = {"sensors/filtered", "scalar"};
  req.params["window"] = window;
  return req;
}

NodeRequirement dual_odom_req() {
  NodeRequirement req;
  req.kind = "kalman filter fuse two odometry topics";
  req.inputs = {{"odom/a", "odom"}, {"odom/b", "odom"}};
  req.output = {"nav/fused", "nav"};
  return req;
}

NodeRequirement dvl_compass_req() {
  NodeRequirement req;
  req.kind = "kalman filter dvl compass navigation repair";
  req.inputs = {{"sensors/compass", "compass"}, {"sensors/dvl", "dvl"}};
  req.output = {"nav/estimate", "nav"};
  req.params["dt"] = 0.1;
  req.params["sigma_dvl"] = 0.02;
  req.params["sigma_psi"] = 0.01;
  return req;
}

bus::TopicSchema any_schema(const std::string& id) {
  bus::TopicSchema s;
  s.schema_id = id;
  s.allow_extra_fields = true;
  return s;
}

}  // namespace

TEST_CASE("averaging requirement synthesizes the 4-operator graph") {
  auto def = synthesize(averaging_req());
  REQUIRE(def.ok());
  CHECK(def.value().nodes.size() == 4);
  CHECK(def.value().validate().ok());
  // Template determinism: byte-identical serialization.
  auto again = synthesize(averaging_req());
  REQUIRE(again.ok());
  CHECK(def.value().to_json().dump() == again.value().to_json().dump());
}

TEST_CASE("dvl compass requirement synthesizes the 5-state filter wiring") {
  auto def = synthesize(dvl_compass_req());
  REQUIRE(def.ok());
  const NodeOp* kf = def.value().find("fuse");
  REQUIRE(kf != nullptr);
  CHECK(kf->params.at("state_dim").get<int>() == 5);
  CHECK(kf->params.at("inputs").size() == 2);
}

TEST_CASE("unmatched requirement yields unknown_kind") {
  NodeRequirement req;
  req.kind = "teleport vehicle";
  req.inputs = {{"a", "s"}};
  req.output = {"b", "s"};
  auto def = synthesize(req);
  REQUIRE(!def.ok());
  CHECK(def.error().code == "unknown_kind");
}

TEST_CASE("nodedef json round trip preserves the graph") {
  auto def = synthesize(dual_odom_req());
  REQUIRE(def.ok());
  auto parsed = NodeDef::from_json(def.value().to_json());
  REQUIRE(parsed.ok());
  CHECK(parsed.value().to_json().dump() == def.value().to_json().dump());
}

TEST_CASE("nodedef validation catches cycles, unknown ops, missing permissions") {
  NodeDef cyclic;
  cyclic.nodes = {{"a", OpKind::mean, Json::object()}, {"b", OpKind::mean, Json::object()}};
  cyclic.edges = {{"a", "b"}, {"b", "a"}};
  CHECK(!cyclic.validate().ok());

  NodeDef bad_perm;
  bad_perm.nodes = {{"in", OpKind::sub, Json{{"topic", "secret/topic"}}}};
  CHECK(!bad_perm.validate().ok());
  CHECK(bad_perm.validate().error().code == "permission");

  CHECK(!op_kind_from_string("exec_shell").ok());
}

TEST_CASE("windowed mean matches arithmetic oracle on constant and step inputs") {
  auto def = synthesize(averaging_req(10));
  REQUIRE(def.ok());
  // Constant 7.0: output converges to 7.0 exactly.
  auto run = sandbox_run(def.value(), scalar_ticks("sensors/raw", "value",
                                                   std::vector<double>(15, 7.0)));
  REQUIRE(std::holds_alternative<std::vector<bus::Envelope>>(run));
  const auto& outs = std::get<std::vector<bus::Envelope>>(run);
  REQUIRE(outs.size() == 15);
  CHECK(outs.back().payload.at("value").get<double>() == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(outs.back().topic == "sensors/filtered");

  // Step case: after k ones the windowed mean is k/n (k=3 -> 0.3).
  std::vector<double> values(10, 0.0);
  values.insert(values.end(), {1.0, 1.0, 1.0});
  auto step = sandbox_run(def.value(), scalar_ticks("sensors/raw", "value", values));
  REQUIRE(std::holds_alternative<std::vector<bus::Envelope>>(step));
  const auto& souts = std::get<std::vector<bus::Envelope>>(step);
  CHECK(souts.back().payload.at("value").get<double>() == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("sandbox rejects publishing to undeclared topics") {
  auto def = synthesize(averaging_req());
  REQUIRE(def.ok());
  NodeDef tampered = def.value();
  for (auto& n : tampered.nodes) {
    if (n.op == OpKind::pub) n.params["topic"] = "stolen/topic";
  }
  // Static validation catches it...
  CHECK(!tampered.validate().ok());
  // ...and the runtime check catches a def executed without validation.
  auto node_def = tampered;
  node_def.pub_permissions = def.value().pub_permissions;  // keep perms stale
  auto run = sandbox_run(node_def, scalar_ticks("sensors/raw", "value", {1.0}));
  REQUIRE(std::holds_alternative<SandboxError>(run));
  CHECK(std::get<SandboxError>(run).kind == SandboxViolation::topic);
}

TEST_CASE("sandbox enforces the state-byte cap") {
  auto def = synthesize(averaging_req());
  REQUIRE(def.ok());
  NodeDef huge = def.value();
  for (auto& n : huge.nodes) {
    if (n.op == OpKind::window) n.params["n"] = std::int64_t{1000000000};
  }
  auto run = sandbox_run(huge, scalar_ticks("sensors/raw", "value", {1.0}));
  REQUIRE(std::holds_alternative<SandboxError>(run));
  CHECK(std::get<SandboxError>(run).kind == SandboxViolation::state_bytes);
}

TEST_CASE("sandbox enforces the per-tick op budget") {
  auto def = synthesize(averaging_req());
  REQUIRE(def.ok());
  ResourceCaps caps;
  caps.ops_per_tick = 2;  // sub+window+mean+pub needs 4
  caps.state_bytes = 65536;
  auto run = sandbox_run(def.value(), scalar_ticks("sensors/raw", "value", {1.0}), &caps);
  REQUIRE(std::holds_alternative<SandboxError>(run));
  CHECK(std::get<SandboxError>(run).kind == SandboxViolation::op_budget);
}

TEST_CASE("sandbox containment holds under fuzzed graphs") {
  // Random small graphs over a fixed op alphabet: whatever they do, outputs
  // only ever appear on declared pub topics and malformed graphs fail closed.
  Rng rng(555);
  for (int trial = 0; trial < 200; ++trial) {
    NodeDef def;
    def.sub_permissions = {"in/a"};
    def.pub_permissions = {"out/a"};
    const int n_ops = rng.uniform_int(2, 6);
    for (int i = 0; i < n_ops; ++i) {
      NodeOp op;
      op.id = "n" + std::to_string(i);
      switch (rng.uniform_int(0, 4)) {
        case 0: op.op = OpKind::sub; op.params = Json{{"topic", rng.chance(0.8) ? "in/a" : "in/forbidden"}, {"fields", Json::array({"value"})}}; break;
        case 1: op.op = OpKind::window; op.params = Json{{"n", rng.uniform_int(1, 16)}}; break;
        case 2: op.op = OpKind::mean; break;
        case 3: op.op = OpKind::gain; op.params = Json{{"k", rng.uniform(-2, 2)}}; break;
        default: op.op = OpKind::pub; op.params = Json{{"topic", rng.chance(0.8) ? "out/a" : "out/forbidden"}, {"fields", Json::array({"value"})}}; break;
      }
      def.nodes.push_back(std::move(op));
    }
    for (int i = 1; i < n_ops; ++i) {
      def.edges.emplace_back("n" + std::to_string(rng.uniform_int(0, i - 1)),
                             "n" + std::to_string(i));
    }
    auto run = sandbox_run(def, scalar_ticks("in/a", "value", {1.0, 2.0, 3.0}));
    if (std::holds_alternative<std::vector<bus::Envelope>>(run)) {
      for (const auto& env : std::get<std::vector<bus::Envelope>>(run)) {
        CHECK(env.topic == "out/a");
      }
    }
  }
}

TEST_CASE("dvl compass filter matches the reference Kalman oracle") {
  auto def = synthesize(dvl_compass_req());
  REQUIRE(def.ok());
  const double dt = 0.1, yaw = 0.3, vx = 0.2, vy = 0.1;
  const double c = std::cos(yaw), s = std::sin(yaw);
  const int ticks = 50;

  std::vector<std::vector<bus::Envelope>> frames;
  for (int k = 0; k < ticks; ++k) {
    bus::Envelope compass, dvl;
    compass.topic = "sensors/compass";
    compass.payload = Json{{"psi", yaw}};
    dvl.topic = "sensors/dvl";
    dvl.payload = Json{{"vx", c * vx + s * vy}, {"vy", -s * vx + c * vy}};
    frames.push_back({compass, dvl});
  }
  auto run = sandbox_run(def.value(), frames);
  REQUIRE(std::holds_alternative<std::vector<bus::Envelope>>(run));
  const auto& outs = std::get<std::vector<bus::Envelope>>(run);
  REQUIRE(outs.size() == static_cast<std::size_t>(ticks));

  // Reference filter with the same wiring, run independently.
  oracles::RefKalman<5> ref;
  ref.x = {0, 0, 0, 0, 0};
  for (int i = 0; i < 5; ++i) ref.p[static_cast<std::size_t>(i * 5 + i)] =
      (i < 2) ? 1e-6 : 1.0;
  std::array<double, 25> f{};
  for (int i = 0; i < 5; ++i) f[static_cast<std::size_t>(i * 5 + i)] = 1.0;
  f[3] = dt;   // x += vx dt
  f[9] = dt;   // y += vy dt
  std::array<double, 25> q{};
  q[12] = 1e-8;
  q[18] = 1e-6;
  q[24] = 1e-6;
  for (int k = 0; k < ticks; ++k) {
    ref.predict(f, q);
    ref.update_scalar({0, 0, 1, 0, 0}, 0.01 * 0.01, yaw, true);
    const double zx = c * vx + s * vy, zy = -s * vx + c * vy;
    const double est_yaw = ref.x[2];
    const double rc = std::cos(est_yaw), rs = std::sin(est_yaw);
    ref.update_scalar({0, 0, 0, 1, 0}, 0.02 * 0.02, rc * zx - rs * zy, false);
    ref.update_scalar({0, 0, 0, 0, 1}, 0.02 * 0.02, rs * zx + rc * zy, false);
  }
  const auto& last = outs.back().payload;
  CHECK(last.at("x").get<double>() == doctest::Approx(ref.x[0]).epsilon(1e-9));
  CHECK(last.at("y").get<double>() == doctest::Approx(ref.x[1]).epsilon(1e-9));
  CHECK(last.at("psi").get<double>() == doctest::Approx(ref.x[2]).epsilon(1e-9));
  // And the truth error bound from the generated suite's case A.
  const double ex = last.at("x").get<double>() - vx * dt * ticks;
  const double ey = last.at("y").get<double>() - vy * dt * ticks;
  CHECK(std::sqrt(ex * ex + ey * ey) < 0.05);
}

TEST_CASE("generated suites pass for all three templates") {
  for (const auto& req : {averaging_req(), dual_odom_req(), dvl_compass_req()}) {
    auto def = synthesize(req);
    REQUIRE(def.ok());
    auto suite = gen_tests(req, def.value());
    REQUIRE(suite.ok());
    REQUIRE(suite.value().cases.size() >= 2);
    const auto results = run_suite(def.value(), suite.value());
    for (const auto& r : results) {
      INFO(req.kind, " / ", r.name, ": ", r.detail);
      CHECK(r.passed);
    }
  }
}

TEST_CASE("deploy runs the suite on a shadow bus and goes live within a tick") {
  bus::Bus live;
  REQUIRE(live.schemas().add(any_schema("scalar")).ok());
  REQUIRE(live.register_topic("sensors/raw", "scalar").ok());
  REQUIRE(live.register_topic("sensors/filtered", "scalar").ok());
  Runtime runtime(live);

  auto report = synthesize_and_deploy(averaging_req(4), runtime);
  REQUIRE(report.ok());
  CHECK(report.value().deployed);
  CHECK(report.value().tests_passed == report.value().tests_total);
  CHECK(report.value().gen_time_s < 5.0);

  auto watcher = live.subscribe("sensors/filtered", "watcher");
  REQUIRE(watcher.ok());
  bus::Envelope raw;
  raw.topic = "sensors/raw";
  raw.publisher_id = "sensor";
  raw.payload = Json{{"value", 2.0}};
  REQUIRE(live.publish(raw).ok());
  live.tick(0.1);            // delivers raw to the node
  REQUIRE(runtime.tick().ok());  // node processes and publishes
  live.tick(0.1);            // delivers filtered output
  auto got = watcher.value()->drain();
  REQUIRE(got.size() == 1);
  CHECK(got[0].payload.at("value").get<double>() == doctest::Approx(2.0));

  // Undeploy: subsequent inputs go unanswered.
  REQUIRE(runtime.undeploy(report.value().node_id).ok());
  raw.seq.reset();
  REQUIRE(live.publish(raw).ok());
  live.tick(0.1);
  REQUIRE(runtime.tick().ok());
  live.tick(0.1);
  CHECK(watcher.value()->drain().empty());
}

TEST_CASE("deploy rejects a failing suite with the reason recorded") {
  bus::Bus live;
  REQUIRE(live.schemas().add(any_schema("scalar")).ok());
  REQUIRE(live.register_topic("sensors/raw", "scalar").ok());
  REQUIRE(live.register_topic("sensors/filtered", "scalar").ok());
  Runtime runtime(live);

  auto req = averaging_req(10);
  auto def = synthesize(req);
  REQUIRE(def.ok());
  // Sabotage: an offset stage after the mean breaks the constant-input case.
  NodeDef broken = def.value();
  broken.nodes.push_back({"drift", OpKind::offset, Json{{"b", 0.5}}});
  broken.edges = {{"in", "win"}, {"win", "avg"}, {"avg", "drift"}, {"drift", "out"}};
  auto suite = gen_tests(req, broken);
  REQUIRE(suite.ok());
  auto report = runtime.deploy(broken, suite.value(), "broken");
  REQUIRE(report.ok());
  CHECK(!report.value().deployed);
  CHECK(report.value().tests_passed < report.value().tests_total);
  CHECK(!report.value().rejection_reason.empty());
  CHECK(runtime.deployed_ids().empty());
}

TEST_CASE("synthesis request/report round trip over the bus") {
  bus::Bus live;
  bus::TopicSchema open_schema = any_schema("nav_sample");
  REQUIRE(live.schemas().add(open_schema).ok());
  for (const char* t : {"synthesis/request", "synthesis/report", "sensors/raw",
                        "sensors/filtered"}) {
    REQUIRE(live.register_topic(t, "nav_sample").ok());
  }
  Runtime runtime(live);
  REQUIRE(runtime.enable_request_service().ok());
  auto reports = live.subscribe("synthesis/report", "commander");
  REQUIRE(reports.ok());

  bus::Envelope request;
  request.topic = "synthesis/request";
  request.publisher_id = "commander";
  request.payload = averaging_req(6).to_json();
  REQUIRE(live.publish(std::move(request)).ok());
  live.tick(0.1);
  REQUIRE(runtime.tick().ok());
  live.tick(0.1);

  auto got = reports.value()->drain();
  REQUIRE(got.size() == 1);
  CHECK(got[0].payload.at("deployed").get<bool>());
  CHECK(runtime.deployed_ids().size() == 1);

  // An unknown requirement is rejected with the reason on the report topic.
  bus::Envelope bad;
  bad.topic = "synthesis/request";
  bad.publisher_id = "commander";
  NodeRequirement unknown;
  unknown.kind = "teleport vehicle";
  unknown.inputs = {{"sensors/raw", "nav_sample"}};
  unknown.output = {"sensors/filtered", "nav_sample"};
  bad.payload = unknown.to_json();
  REQUIRE(live.publish(std::move(bad)).ok());
  live.tick(0.1);
  REQUIRE(runtime.tick().ok());
  live.tick(0.1);
  got = reports.value()->drain();
  REQUIRE(got.size() == 1);
  CHECK(!got[0].payload.at("deployed").get<bool>());
  CHECK(got[0].payload.at("rejection_reason").get<std::string>().find("teleport") !=
        std::string::npos);
}

TEST_CASE("no-deploy-without-green holds under fuzzed defective defs") {
  bus::Bus live;
  REQUIRE(live.schemas().add(any_schema("scalar")).ok());
  REQUIRE(live.register_topic("sensors/raw", "scalar").ok());
  REQUIRE(live.register_topic("sensors/filtered", "scalar").ok());
  Runtime runtime(live);
  Rng rng(77);

  const auto req = averaging_req(8);
  auto good = synthesize(req);
  REQUIRE(good.ok());
  auto suite = gen_tests(req, good.value());
  REQUIRE(suite.ok());

  for (int trial = 0; trial < 50; ++trial) {
    NodeDef mutated = good.value();
    switch (rng.uniform_int(0, 2)) {
      case 0:
        for (auto& n : mutated.nodes) {
          if (n.op == OpKind::window) n.params["n"] = rng.uniform_int(1, 6);  // wrong window
        }
        break;
      case 1:
        mutated.nodes.push_back({"g", OpKind::gain, Json{{"k", rng.uniform(1.1, 3.0)}}});
        mutated.edges = {{"in", "win"}, {"win", "avg"}, {"avg", "g"}, {"g", "out"}};
        break;
      default:
        mutated.edges.clear();
        mutated.edges = {{"in", "out"}};  // bypass the filter entirely
        break;
    }
    auto report = runtime.deploy(mutated, suite.value(), "fuzz");
    REQUIRE(report.ok());
    if (report.value().deployed) {
      // Deployed implies every generated case passed.
      CHECK(report.value().tests_passed == report.value().tests_total);
      REQUIRE(runtime.undeploy(report.value().node_id).ok());
    } else {
      CHECK(report.value().tests_passed < report.value().tests_total);
    }
  }
}
