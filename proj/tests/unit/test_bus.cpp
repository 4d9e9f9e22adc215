#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "manta/bus/bus.hpp"
#include "manta/util/rng.hpp"

using namespace manta;
using namespace manta::bus;

namespace {

TopicSchema waypoint_schema() {
  TopicSchema s;
  s.schema_id = "waypoint";
  s.fields = {
      {"x", FieldKind::real, true, -100.0, 100.0, {}},
      {"y", FieldKind::real, true, -100.0, 100.0, {}},
  };
  return s;
}

Bus make_bus() {
  Bus bus;
  REQUIRE(bus.schemas().add(waypoint_schema()).ok());
  REQUIRE(bus.register_topic("nav/waypoint", "waypoint").ok());
  return bus;
}

Envelope wp(const std::string& pub, double x, double y) {
  Envelope e;
  e.topic = "nav/waypoint";
  e.publisher_id = pub;
  e.payload = Json{{"x", x}, {"y", y}};
  return e;
}

}  // namespace

TEST_CASE("publish valid payload delivers to one subscriber on next tick") {
  Bus bus = make_bus();
  auto sub = bus.subscribe("nav/waypoint", "sub_a");
  REQUIRE(sub.ok());
  REQUIRE(bus.publish(wp("pub_a", 1.0, 2.0)).ok());
  CHECK(sub.value()->empty());  // lockstep: nothing until tick
  CHECK(bus.tick(0.1) == 1);
  auto got = sub.value()->drain();
  REQUIRE(got.size() == 1);
  CHECK(got[0].payload.at("x").get<double>() == 1.0);
  CHECK(got[0].seq.value() == 0);
}

TEST_CASE("publish with missing required field is rejected naming the field") {
  Bus bus = make_bus();
  Envelope e;
  e.topic = "nav/waypoint";
  e.publisher_id = "pub_a";
  e.payload = Json{{"x", 1.0}};
  auto r = bus.publish(e);
  REQUIRE(!r.ok());
  CHECK(r.error().code == "schema_mismatch");
  CHECK(r.error().message.find("y") != std::string::npos);
}

TEST_CASE("publish on unknown topic rejected") {
  Bus bus = make_bus();
  Envelope e = wp("pub_a", 0, 0);
  e.topic = "nope";
  auto r = bus.publish(e);
  REQUIRE(!r.ok());
  CHECK(r.error().code == "unknown_topic");
}

TEST_CASE("100 publishes arrive in seq order 0..99") {
  Bus bus = make_bus();
  auto sub = bus.subscribe("nav/waypoint", "sub_a");
  REQUIRE(sub.ok());
  for (int i = 0; i < 100; ++i) {
    REQUIRE(bus.publish(wp("pub_a", i, 0)).ok());
  }
  CHECK(bus.tick(0.1) == 100);
  auto got = sub.value()->drain();
  REQUIRE(got.size() == 100);
  // Oracle: received seq list must equal 0..99 exactly.
  for (int i = 0; i < 100; ++i) {
    CHECK(got[static_cast<std::size_t>(i)].seq.value() == static_cast<std::uint64_t>(i));
  }
}

TEST_CASE("fan-out: two subscribers receive identical payload") {
  Bus bus = make_bus();
  auto s1 = bus.subscribe("nav/waypoint", "sub_a");
  auto s2 = bus.subscribe("nav/waypoint", "sub_b");
  REQUIRE(s1.ok());
  REQUIRE(s2.ok());
  REQUIRE(bus.publish(wp("pub_a", 3.0, 4.0)).ok());
  bus.tick(0.1);
  auto a = s1.value()->drain();
  auto b = s2.value()->drain();
  REQUIRE(a.size() == 1);
  REQUIRE(b.size() == 1);
  CHECK(a[0].payload == b[0].payload);
}

TEST_CASE("interleaved publishers preserve per-publisher order") {
  Bus bus = make_bus();
  auto sub = bus.subscribe("nav/waypoint", "sub_a");
  REQUIRE(sub.ok());
  // Interleave publishes from A and B across several ticks.
  Rng rng(7);
  std::vector<std::uint64_t> seq_a, seq_b;
  for (int t = 0; t < 10; ++t) {
    for (int k = 0; k < 6; ++k) {
      const bool use_a = rng.chance(0.5);
      REQUIRE(bus.publish(wp(use_a ? "A" : "B", k, t)).ok());
    }
    bus.tick(0.1);
  }
  // Permutation check: the received stream restricted to each publisher must
  // be its seq sequence in increasing order.
  auto got = sub.value()->drain();
  std::uint64_t last_a = 0, last_b = 0;
  bool first_a = true, first_b = true;
  for (const auto& e : got) {
    if (e.publisher_id == "A") {
      if (!first_a) CHECK(e.seq.value() > last_a);
      last_a = e.seq.value();
      first_a = false;
    } else {
      if (!first_b) CHECK(e.seq.value() > last_b);
      last_b = e.seq.value();
      first_b = false;
    }
  }
}

TEST_CASE("tick with empty queue delivers nothing and advances clock") {
  Bus bus = make_bus();
  CHECK(bus.tick(0.25) == 0);
  CHECK(bus.clock() == doctest::Approx(0.25));
  CHECK(bus.tick_index() == 1);
}

TEST_CASE("lockstep conservation: queued before tick == delivered") {
  Bus bus = make_bus();
  auto sub = bus.subscribe("nav/waypoint", "sub_a");
  REQUIRE(sub.ok());
  for (int i = 0; i < 3; ++i) REQUIRE(bus.publish(wp("p", i, 0)).ok());
  CHECK(bus.queued() == 3);
  CHECK(bus.tick(0.1) == 3);
  CHECK(bus.queued() == 0);
  CHECK(sub.value()->pending() == 3);
}

TEST_CASE("same publish sequence twice yields byte-identical traces") {
  auto run = []() {
    Bus bus = make_bus();
    (void)bus.subscribe("nav/waypoint", "sub_a");
    REQUIRE(bus.start_recording(42).ok());
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
      const int n = rng.uniform_int(0, 3);
      for (int k = 0; k < n; ++k) {
        REQUIRE(bus.publish(wp(k % 2 ? "A" : "B", rng.uniform(-5, 5), rng.uniform(-5, 5))).ok());
      }
      bus.tick(0.1);
    }
    return bus.trace().to_jsonl();
  };
  CHECK(run() == run());
}

TEST_CASE("record and replay reproduce inbox digests") {
  auto wire = []() {
    Bus bus = make_bus();
    (void)bus.subscribe("nav/waypoint", "sub_a");
    (void)bus.subscribe("nav/waypoint", "sub_b");
    return bus;
  };
  Bus bus = wire();
  REQUIRE(bus.start_recording(1).ok());
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const int n = rng.uniform_int(0, 2);
    for (int k = 0; k < n; ++k) {
      REQUIRE(bus.publish(wp("A", rng.uniform(0, 1), 0)).ok());
    }
    bus.tick(0.05);
  }
  Trace trace = bus.trace();
  Json original = bus.inbox_digests();

  Bus fresh = wire();
  auto r = replay_trace(trace, fresh);
  REQUIRE(r.ok());
  CHECK(fresh.inbox_digests() == original);
}

TEST_CASE("record zero ticks yields empty trace") {
  Bus bus = make_bus();
  REQUIRE(bus.start_recording(5).ok());
  Trace t = bus.trace();
  CHECK(t.entries.empty());
  CHECK(t.seed == 5);
  CHECK(!t.config_digest.empty());
}

TEST_CASE("replay with altered schema registry fails with digest mismatch") {
  Bus bus = make_bus();
  (void)bus.subscribe("nav/waypoint", "sub_a");
  REQUIRE(bus.start_recording(1).ok());
  REQUIRE(bus.publish(wp("A", 1, 1)).ok());
  bus.tick(0.1);
  Trace trace = bus.trace();

  Bus altered;
  TopicSchema s = waypoint_schema();
  s.fields.push_back({"z", FieldKind::real, false, {}, {}, {}});
  REQUIRE(altered.schemas().add(s).ok());
  REQUIRE(altered.register_topic("nav/waypoint", "waypoint").ok());
  (void)altered.subscribe("nav/waypoint", "sub_a");
  auto r = replay_trace(trace, altered);
  REQUIRE(!r.ok());
  CHECK(r.error().code == "config_digest_mismatch");
}

TEST_CASE("trace save/load round trip") {
  Bus bus = make_bus();
  (void)bus.subscribe("nav/waypoint", "sub_a");
  REQUIRE(bus.start_recording(9).ok());
  REQUIRE(bus.publish(wp("A", 1.5, -2.25)).ok());
  bus.tick(0.1);
  Trace t = bus.trace();

  const auto path = std::filesystem::temp_directory_path() / "manta_test_trace.jsonl";
  REQUIRE(t.save_jsonl(path.string()).ok());
  auto loaded = Trace::load_jsonl(path.string());
  REQUIRE(loaded.ok());
  CHECK(loaded.value().config_digest == t.config_digest);
  CHECK(loaded.value().entries.size() == 1);
  CHECK(loaded.value().to_jsonl() == t.to_jsonl());
  std::filesystem::remove(path);
}

TEST_CASE("free-running mode delivers immediately") {
  Bus bus(Mode::free_running);
  REQUIRE(bus.schemas().add(waypoint_schema()).ok());
  REQUIRE(bus.register_topic("nav/waypoint", "waypoint").ok());
  auto sub = bus.subscribe("nav/waypoint", "sub_a");
  REQUIRE(sub.ok());
  REQUIRE(bus.publish(wp("A", 0, 0)).ok());
  CHECK(sub.value()->pending() == 1);
}

TEST_CASE("stamp regression within a publisher stream is rejected") {
  Bus bus = make_bus();
  Envelope a = wp("A", 0, 0);
  a.stamp = 5.0;
  REQUIRE(bus.publish(a).ok());
  Envelope b = wp("A", 1, 1);
  b.stamp = 4.0;
  auto r = bus.publish(b);
  REQUIRE(!r.ok());
  CHECK(r.error().code == "bad_stamp");
}

TEST_CASE("unexpected extra field rejected by strict schema") {
  Bus bus = make_bus();
  Envelope e = wp("A", 0, 0);
  e.payload["evil"] = 666;
  auto r = bus.publish(e);
  REQUIRE(!r.ok());
  CHECK(r.error().message.find("evil") != std::string::npos);
}
