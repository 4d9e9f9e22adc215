#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

#include "manta/agent/agent.hpp"
#include "manta/util/rng.hpp"

using namespace manta;
using namespace manta::agent;

namespace {

bus::TopicSchema twist_schema() {
  bus::TopicSchema s;
  s.schema_id = "twist_cmd";
  s.fields = {
      {"vx", bus::FieldKind::real, true, {}, {}, {}},
      {"vy", bus::FieldKind::real, true, {}, {}, {}},
      {"vz", bus::FieldKind::real, false, {}, {}, {}},
  };
  return s;
}

bus::TopicSchema goal_schema() {
  bus::TopicSchema s;
  s.schema_id = "goal";
  s.fields = {{"x", bus::FieldKind::real, true, {}, {}, {}},
              {"y", bus::FieldKind::real, true, {}, {}, {}}};
  return s;
}

bus::Bus make_bus() {
  bus::Bus b;
  REQUIRE(b.schemas().add(twist_schema()).ok());
  REQUIRE(b.schemas().add(goal_schema()).ok());
  REQUIRE(b.register_topic("cmd/twist", "twist_cmd").ok());
  REQUIRE(b.register_topic("mission/goal", "goal").ok());
  return b;
}

Constitution echo_constitution() {
  Constitution c;
  c.core_directive = "You are an echo node.";
  c.output_schema_id = "twist_cmd";
  return c;
}

AgentSpec echo_spec(const std::string& id, BackendPtr backend) {
  AgentSpec spec;
  spec.agent_id = id;
  spec.role = "echo";
  spec.constitution = echo_constitution();
  spec.subscriptions = {"mission/goal"};
  spec.publications = {"cmd/twist"};
  spec.reasoner = std::move(backend);
  spec.limits.max_speed = 1.0;
  spec.limits.max_depth = 2.5;
  spec.limits.workspace = AABox{{-10, -10, 0}, {10, 10, 2.5}};
  return spec;
}

BackendPtr fixed_backend(const std::string& role, Json reply) {
  return std::make_shared<TemplateBackend>(role, [reply]() {
    return [reply](const ReasonerQuery&) -> Result<ReasonerReply> {
      return ReasonerReply::from_json(reply);
    };
  });
}

BackendPtr noop_backend() {
  return std::make_shared<TemplateBackend>("noop", []() {
    return [](const ReasonerQuery&) -> Result<ReasonerReply> { return ReasonerReply::noop(); };
  });
}

}  // namespace

TEST_CASE("constitution rendering is deterministic and ordered") {
  Constitution c;
  c.core_directive = "You are a motion planner.";
  c.domain_knowledge = {"tether length 10 m", "vehicle radius 0.4 m"};
  c.reasoning_guidelines = {"Prefer short paths."};
  c.output_schema_id = "waypoint_list";
  const std::string r1 = c.render();
  CHECK(r1 == c.render());
  CHECK(r1.find("# DIRECTIVE") < r1.find("# DOMAIN KNOWLEDGE"));
  CHECK(r1.find("# DOMAIN KNOWLEDGE") < r1.find("# REASONING GUIDELINES"));
  CHECK(r1.find("# REASONING GUIDELINES") < r1.find("# OUTPUT FORMAT"));
}

TEST_CASE("retune-style clause append changes rendering by exactly that clause") {
  Constitution c;
  c.core_directive = "You are a scene reporter.";
  c.output_schema_id = "scene_text";
  const Constitution c2 = c.with_clause("report only presence and location");
  const std::string before = c.render();
  const std::string after = c2.render();
  CHECK(after.find("- report only presence and location\n") != std::string::npos);
  // Identical prefix up to the constraints block; appending twice is a no-op.
  CHECK(c2.with_clause("report only presence and location") == c2);
  CHECK(before.substr(0, before.find("# OUTPUT FORMAT")) ==
        after.substr(0, before.find("# OUTPUT FORMAT")));
}

TEST_CASE("constitution text file round trip") {
  Constitution c;
  c.core_directive = "You are a diagnostics expert.";
  c.domain_knowledge = {"allocation matrix is 6x8"};
  c.reasoning_guidelines = {"Compare expected against observed PWM."};
  c.output_schema_id = "diagnosis_report";
  c.constraint_clauses = {"respond in one sentence"};
  auto parsed = Constitution::parse_text(c.to_text());
  REQUIRE(parsed.ok());
  CHECK(parsed.value() == c);
  CHECK(!Constitution::parse_text("gibberish without colon\n").ok());
  CHECK(!Constitution::parse_text("knowledge:\n- orphan fact\n").ok());  // no directive
}

TEST_CASE("validate flags over-limit speed as limit violation") {
  SafetyLimits limits;
  limits.max_speed = 1.0;
  auto schema = twist_schema();
  auto v = validate_payload(Json{{"vx", 2.0}, {"vy", 0.0}}, schema, limits);
  REQUIRE(v.has_value());
  CHECK(v->kind == ViolationKind::limit);
  CHECK(v->detail == "speed");
}

TEST_CASE("validate reports syntax violation with byte position") {
  SafetyLimits limits;
  auto schema = twist_schema();
  auto v = validate_text("{\"vx\": 0.1, }", schema, limits);
  REQUIRE(v.has_value());
  CHECK(v->kind == ViolationKind::syntax);
  CHECK(v->detail.find("byte") != std::string::npos);
}

TEST_CASE("workspace boundary is closed: on-boundary point passes") {
  SafetyLimits limits;
  limits.workspace = AABox{{-10, -10, 0}, {10, 10, 2.5}};
  bus::TopicSchema s = goal_schema();
  CHECK(!validate_payload(Json{{"x", 10.0}, {"y", -10.0}}, s, limits).has_value());
  auto v = validate_payload(Json{{"x", 10.001}, {"y", 0.0}}, s, limits);
  REQUIRE(v.has_value());
  CHECK(v->kind == ViolationKind::limit);
  CHECK(v->detail == "workspace");
}

TEST_CASE("depth limit boundary inclusive") {
  SafetyLimits limits;
  limits.max_depth = 2.5;
  bus::TopicSchema s;
  s.schema_id = "depth_cmd";
  s.fields = {{"depth", bus::FieldKind::real, true, {}, {}, {}}};
  CHECK(!validate_payload(Json{{"depth", 2.5}}, s, limits).has_value());
  CHECK(validate_payload(Json{{"depth", 2.51}}, s, limits).has_value());
  CHECK(validate_payload(Json{{"depth", -0.1}}, s, limits).has_value());
}

TEST_CASE("instantiate minimal spec yields idle agent with empty inbox") {
  bus::Bus b = make_bus();
  Host host(b);
  auto a = host.instantiate(echo_spec("echo1", noop_backend()));
  REQUIRE(a.ok());
  CHECK(a.value()->pending_inbox() == 0);
  CHECK(a.value()->episode() == 1);
}

TEST_CASE("instantiate rejects unregistered publication topic") {
  bus::Bus b = make_bus();
  Host host(b);
  AgentSpec spec = echo_spec("echo1", noop_backend());
  spec.publications = {"not/registered"};
  auto a = host.instantiate(spec);
  REQUIRE(!a.ok());
  CHECK(a.error().code == "unknown_topic");
}

TEST_CASE("duplicate agent id rejected") {
  bus::Bus b = make_bus();
  Host host(b);
  REQUIRE(host.instantiate(echo_spec("dup", noop_backend())).ok());
  auto second = host.instantiate(echo_spec("dup", noop_backend()));
  REQUIRE(!second.ok());
  CHECK(second.error().code == "duplicate_agent");
}

TEST_CASE("step with noop reply yields empty outbox and no events") {
  bus::Bus b = make_bus();
  Host host(b);
  auto a = host.instantiate(echo_spec("echo1", noop_backend()));
  REQUIRE(a.ok());
  auto out = host.step(*a.value(), {});
  CHECK(out.outbox.empty());
  CHECK(out.safety_events.empty());
}

TEST_CASE("valid reply passes the safety parser onto the primary topic") {
  bus::Bus b = make_bus();
  Host host(b);
  auto a = host.instantiate(
      echo_spec("echo1", fixed_backend("echo", Json{{"vx", 0.5}, {"vy", 0.0}})));
  REQUIRE(a.ok());
  auto out = host.step(*a.value(), {});
  REQUIRE(out.outbox.size() == 1);
  CHECK(out.outbox[0].topic == "cmd/twist");
  CHECK(out.safety_events.empty());
}

TEST_CASE("over-limit reply is blocked with a limit event and empty outbox") {
  bus::Bus b = make_bus();
  Host host(b);
  auto a = host.instantiate(
      echo_spec("echo1", fixed_backend("echo", Json{{"vx", 2.0}, {"vy", 0.0}})));
  REQUIRE(a.ok());
  auto out = host.step(*a.value(), {});
  CHECK(out.outbox.empty());
  REQUIRE(out.safety_events.size() == 1);
  CHECK(out.safety_events[0].at("kind") == "limit");
}

TEST_CASE("backend fault yields fault event, empty outbox, no crash") {
  bus::Bus b = make_bus();
  Host host(b);
  auto backend = std::make_shared<PlaybackBackend>(std::vector<ReasonerReply>{});
  auto a = host.instantiate(echo_spec("echo1", backend));
  REQUIRE(a.ok());
  auto out = host.step(*a.value(), {});
  CHECK(out.outbox.empty());
  REQUIRE(out.safety_events.size() == 1);
  CHECK(out.safety_events[0].at("kind") == "backend_fault");
  CHECK(out.safety_events[0].at("category") == "fault");
}

TEST_CASE("step_and_publish routes safety events onto the safety topic") {
  bus::Bus b = make_bus();
  Host host(b);
  auto watcher = b.subscribe(kSafetyTopic, "watcher");
  REQUIRE(watcher.ok());
  auto a = host.instantiate(
      echo_spec("echo1", fixed_backend("echo", Json{{"vx", 9.0}, {"vy", 0.0}})));
  REQUIRE(a.ok());
  REQUIRE(host.step_and_publish(*a.value(), {}).ok());
  b.tick(0.1);
  auto events = watcher.value()->drain();
  REQUIRE(events.size() == 1);
  CHECK(events[0].payload.at("kind") == "limit");
}

TEST_CASE("retune preserves inbox, increments episode, resets reasoner context") {
  bus::Bus b = make_bus();
  Host host(b);
  // Playback backend: position survives retune (reset_context does not rewind),
  // while template rules rebuild their closures.
  std::vector<ReasonerReply> transcript{ReasonerReply::noop(), ReasonerReply::noop()};
  auto playback = std::make_shared<PlaybackBackend>(transcript);
  auto a = host.instantiate(echo_spec("student", playback));
  REQUIRE(a.ok());

  bus::Envelope goal;
  goal.topic = "mission/goal";
  goal.publisher_id = "mission";
  goal.payload = Json{{"x", 1.0}, {"y", 2.0}};
  REQUIRE(b.publish(goal).ok());
  b.tick(0.1);
  CHECK(a.value()->pending_inbox() == 1);

  Constitution c2 = a.value()->spec().constitution.with_clause("respond in one sentence");
  auto retuned = host.retune("student", c2);
  REQUIRE(retuned.ok());
  CHECK(retuned.value()->episode() == 2);
  CHECK(retuned.value()->pending_inbox() == 1);  // in-flight inbox preserved
  CHECK(retuned.value()->spec().constitution.has_clause("respond in one sentence"));

  // Identical constitution retune renders identically.
  auto again = host.retune("student", c2);
  REQUIRE(again.ok());
  CHECK(again.value()->spec().constitution.render() == c2.render());
}

TEST_CASE("template backend is deterministic across runs") {
  auto run = [] {
    bus::Bus b = make_bus();
    Host host(b);
    auto a = host.instantiate(
        echo_spec("echo1", fixed_backend("echo", Json{{"vx", 0.25}, {"vy", -0.25}})));
    REQUIRE(a.ok());
    std::string log;
    for (int i = 0; i < 5; ++i) {
      auto out = host.step(*a.value(), {});
      for (auto& e : out.outbox) log += e.payload.dump();
    }
    return log;
  };
  CHECK(run() == run());
}

TEST_CASE("playback exhaustion after one entry") {
  PlaybackBackend pb({ReasonerReply{"{\"vx\":0,\"vy\":0}", Json{{"vx", 0}, {"vy", 0}}}});
  ReasonerQuery q;
  q.system_text = "s";
  CHECK(pb.infer(q).ok());
  auto second = pb.infer(q);
  REQUIRE(!second.ok());
  CHECK(second.error().code == "backend_fault");
}

TEST_CASE("undeclared output topic is blocked") {
  bus::Bus b = make_bus();
  Host host(b);
  Json sneaky{{"__outputs", Json::array({Json{{"topic", "mission/goal"},
                                              {"payload", Json{{"x", 0.0}, {"y", 0.0}}}}})}};
  auto a = host.instantiate(echo_spec("echo1", fixed_backend("echo", sneaky)));
  REQUIRE(a.ok());
  auto out = host.step(*a.value(), {});
  CHECK(out.outbox.empty());
  REQUIRE(out.safety_events.size() == 1);
  CHECK(out.safety_events[0].at("kind") == "schema");
}

TEST_CASE("safety totality under fuzzed replies") {
  // Property: arbitrary reply bytes never publish an invalid envelope and
  // never crash; every block carries a taxonomy label.
  bus::Bus b = make_bus();
  Host host(b);
  Rng rng(2024);
  std::vector<ReasonerReply> fuzz;
  for (int i = 0; i < 500; ++i) {
    std::string s;
    const int len = rng.uniform_int(0, 64);
    for (int k = 0; k < len; ++k) {
      s.push_back(static_cast<char>(rng.uniform_int(1, 255)));
    }
    fuzz.push_back(ReasonerReply{s, std::nullopt});
  }
  auto backend = std::make_shared<PlaybackBackend>(fuzz);
  auto a = host.instantiate(echo_spec("fuzzed", backend));
  REQUIRE(a.ok());
  for (int i = 0; i < 500; ++i) {
    auto out = host.step(*a.value(), {});
    for (const auto& env : out.outbox) {
      // anything published must validate against the topic schema and limits
      CHECK(!validate_payload(env.payload, twist_schema(), a.value()->spec().limits)
                 .has_value());
    }
    for (const auto& ev : out.safety_events) {
      const std::string kind = ev.at("kind").get<std::string>();
      CHECK((kind == "syntax" || kind == "schema" || kind == "limit" ||
             kind == "backend_fault"));
    }
  }
}

TEST_CASE("remote backend round trip against a stub server") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    const Json body = Json::parse(req.body);
    CHECK(body.at("messages")[0].at("role") == "system");
    const Json reply{
        {"choices",
         Json::array({Json{{"message", Json{{"role", "assistant"},
                                            {"content", "{\"vx\":0.1,\"vy\":0.0}"}}}}})}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  RemoteBackend remote(cfg);
  ReasonerQuery q;
  q.system_text = "You are an echo.";
  q.user_content = "[]";
  auto reply = remote.infer(q);
  REQUIRE(reply.ok());
  CHECK(reply.value().content == "{\"vx\":0.1,\"vy\":0.0}");
  REQUIRE(reply.value().structured.has_value());
  CHECK(hits.load() == 1);

  server.stop();
  server_thread.join();
}

TEST_CASE("remote backend faults after bounded retries when unreachable") {
  RemoteConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:9/unreachable";  // discard port
  cfg.timeout_seconds = 1;
  cfg.max_retries = 1;
  RemoteBackend remote(cfg);
  ReasonerQuery q;
  q.system_text = "s";
  auto r = remote.infer(q);
  REQUIRE(!r.ok());
  CHECK(r.error().code == "backend_fault");
}

TEST_CASE("extract_path walks objects and arrays") {
  const Json body{{"choices", Json::array({Json{{"message", Json{{"content", "hi"}}}}})}};
  auto r = RemoteBackend::extract_path(body, "choices.0.message.content");
  REQUIRE(r.ok());
  CHECK(r.value() == "hi");
  CHECK(!RemoteBackend::extract_path(body, "choices.1.message").ok());
  CHECK(!RemoteBackend::extract_path(body, "nope").ok());
}
