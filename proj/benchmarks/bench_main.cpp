#include <benchmark/benchmark.h>

#include "manta/bus/bus.hpp"
#include "manta/memory/memory.hpp"
#include "manta/negotiation/negotiation.hpp"
#include "manta/planner/astar.hpp"
#include "manta/util/rng.hpp"

using namespace manta;

namespace {

bus::Bus make_bus() {
  bus::Bus b;
  bus::TopicSchema s;
  s.schema_id = "waypoint";
  s.fields = {{"x", bus::FieldKind::real, true, {}, {}, {}},
              {"y", bus::FieldKind::real, true, {}, {}, {}}};
  (void)b.schemas().add(s);
  (void)b.register_topic("nav/waypoint", "waypoint");
  (void)b.subscribe("nav/waypoint", "sub");
  return b;
}

void BM_bus_publish_tick(benchmark::State& state) {
  bus::Bus b = make_bus();
  auto* sub = b.subscribe("nav/waypoint", "bench").value();
  std::int64_t n = 0;
  for (auto _ : state) {
    for (int i = 0; i < state.range(0); ++i) {
      bus::Envelope e;
      e.topic = "nav/waypoint";
      e.publisher_id = "p";
      e.payload = Json{{"x", 1.0}, {"y", 2.0}};
      benchmark::DoNotOptimize(b.publish(std::move(e)).ok());
    }
    n += static_cast<std::int64_t>(b.tick(0.01));
    sub->drain();
  }
  state.SetItemsProcessed(n);
}
BENCHMARK(BM_bus_publish_tick)->Arg(64)->Arg(512);

void BM_embed(benchmark::State& state) {
  const std::string text =
      "red ball detected at bearing zero point three two radians range two point one meters";
  for (auto _ : state) {
    benchmark::DoNotOptimize(memory::embed(text));
  }
}
BENCHMARK(BM_embed);

void BM_knn(benchmark::State& state) {
  memory::VectorStore store;
  Rng rng(7);
  for (int i = 0; i < state.range(0); ++i) {
    memory::MemoryRecord r;
    r.id = "r" + std::to_string(i);
    double norm2 = 0.0;
    for (auto& x : r.vector) {
      x = rng.gaussian();
      norm2 += x * x;
    }
    for (auto& x : r.vector) x /= std::sqrt(norm2);
    r.stamp = i;
    (void)store.upsert(std::move(r));
  }
  const auto q = store.records().front().vector;
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.knn(q, 5));
  }
}
BENCHMARK(BM_knn)->Arg(100)->Arg(1000);

void BM_astar(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  planner::GridMap map(n, n);
  Rng rng(11);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (rng.chance(0.2)) map.set_occupied({x, y});
  map.set_occupied({0, 0}, false);
  map.set_occupied({n - 1, n - 1}, false);
  for (auto _ : state) {
    benchmark::DoNotOptimize(planner::astar(map, {0, 0}, {n - 1, n - 1}));
  }
}
BENCHMARK(BM_astar)->Arg(20)->Arg(50);

void BM_predict_min_distance(benchmark::State& state) {
  negotiation::Trajectory a, b;
  for (int i = 0; i <= 20; ++i) {
    a.push_back({i * 1.0, {static_cast<double>(i), 0.0, 0.0}});
    b.push_back({i * 1.0, {20.0 - i, 0.5, 0.0}});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(negotiation::predict_min_distance(a, b, 0.4, 0.4, 20.0, 0.1));
  }
}
BENCHMARK(BM_predict_min_distance);

}  // namespace

BENCHMARK_MAIN();
