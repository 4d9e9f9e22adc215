#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "manta/memory/memory.hpp"
#include "manta/util/rng.hpp"

using namespace manta;
using namespace manta::memory;

namespace {

EmbeddingVector unit_axis(std::size_t i) {
  EmbeddingVector v{};
  v[i] = 1.0;
  return v;
}

MemoryRecord rec(const std::string& id, const EmbeddingVector& v, double stamp) {
  MemoryRecord r;
  r.id = id;
  r.vector = v;
  r.stamp = stamp;
  r.payload = Json{{"text", "record " + id}};
  return r;
}

// Independent brute-force ranking oracle: full sort with its own cosine.
std::vector<std::string> brute_force_knn(const std::vector<MemoryRecord>& all,
                                         const EmbeddingVector& q, std::size_t k) {
  struct Row {
    double sim;
    double stamp;
    std::string id;
  };
  std::vector<Row> rows;
  for (const auto& r : all) {
    double dot = 0.0;
    for (std::size_t i = 0; i < kEmbedDim; ++i) dot += q[i] * r.vector[i];
    rows.push_back({dot, r.stamp, r.id});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (a.stamp != b.stamp) return a.stamp > b.stamp;
    return a.id < b.id;
  });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < std::min(k, rows.size()); ++i) ids.push_back(rows[i].id);
  return ids;
}

EmbeddingVector random_unit(Rng& rng) {
  EmbeddingVector v{};
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

}  // namespace

TEST_CASE("embed is deterministic") {
  auto a = embed("pipe");
  auto b = embed("pipe");
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(a.value() == b.value());
}

TEST_CASE("token-disjoint strings embed orthogonally") {
  auto a = embed("pipe");
  auto b = embed("valve");
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  // These two tokens land in different buckets (verified by the check itself).
  CHECK(cosine(a.value(), b.value()) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("token repetition preserves direction") {
  auto a = embed("pipe pipe");
  auto b = embed("pipe");
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(cosine(a.value(), b.value()) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("embed rejects empty input") {
  CHECK(!embed(std::string{}).ok());
  CHECK(!embed("...").ok());  // punctuation only, no tokens
}

TEST_CASE("upsert grows store and same id overwrites") {
  VectorStore store;
  auto r1 = store.upsert(rec("a", unit_axis(0), 1.0));
  REQUIRE(r1.ok());
  CHECK(r1.value() == 1);
  MemoryRecord replacement = rec("a", unit_axis(1), 2.0);
  replacement.payload = Json{{"text", "replaced"}};
  auto r2 = store.upsert(replacement);
  REQUIRE(r2.ok());
  CHECK(r2.value() == 1);
  CHECK(store.records()[0].payload.at("text") == "replaced");
}

TEST_CASE("upsert rejects non-unit vector") {
  VectorStore store;
  MemoryRecord r = rec("a", unit_axis(0), 1.0);
  r.vector[0] = 0.5;
  CHECK(!store.upsert(r).ok());
}

TEST_CASE("1000 upserts give size 1000") {
  VectorStore store;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(store.upsert(rec("r" + std::to_string(i), random_unit(rng), i)).ok());
  }
  CHECK(store.size() == 1000);
}

TEST_CASE("knn identity and k larger than store") {
  VectorStore store;
  REQUIRE(store.upsert(rec("only", unit_axis(3), 1.0)).ok());
  auto hits = store.knn(unit_axis(3), 1);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].id == "only");
  CHECK(cosine(hits[0].vector, unit_axis(3)) == doctest::Approx(1.0));
  CHECK(store.knn(unit_axis(3), 10).size() == 1);
  VectorStore empty;
  CHECK(empty.knn(unit_axis(0), 4).empty());
}

TEST_CASE("knn matches brute-force oracle on random stores") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    VectorStore store;
    std::vector<MemoryRecord> all;
    for (int i = 0; i < 50; ++i) {
      auto r = rec("r" + std::to_string(i), random_unit(rng), rng.uniform(0, 100));
      all.push_back(r);
      REQUIRE(store.upsert(r).ok());
    }
    const EmbeddingVector q = random_unit(rng);
    auto got = store.knn(q, 5);
    auto expected = brute_force_knn(all, q, 5);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].id == expected[i]);
  }
}

TEST_CASE("knn ties break by newest stamp") {
  VectorStore store;
  REQUIRE(store.upsert(rec("old", unit_axis(0), 1.0)).ok());
  REQUIRE(store.upsert(rec("new", unit_axis(0), 9.0)).ok());
  auto hits = store.knn(unit_axis(0), 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].id == "new");
  CHECK(hits[1].id == "old");
}

TEST_CASE("assemble_context rank order and truncation") {
  VectorStore store;
  MemoryRecord a = rec("a", unit_axis(0), 3.0);
  a.payload = Json{{"text", "one two three"}};
  MemoryRecord b = rec("b", unit_axis(0), 2.0);
  b.payload = Json{{"text", "four five six"}};
  MemoryRecord c = rec("c", unit_axis(0), 1.0);
  c.payload = Json{{"text", "seven eight nine"}};
  REQUIRE(store.upsert(a).ok());
  REQUIRE(store.upsert(b).ok());
  REQUIRE(store.upsert(c).ok());

  VectorStore empty;
  CHECK(empty.assemble_context(unit_axis(0), 3, 100).empty());

  auto full = store.assemble_context(unit_axis(0), 3, 100);
  REQUIRE(full.size() == 3);
  CHECK(full[0].id == "a");
  CHECK(full[1].id == "b");
  CHECK(full[2].id == "c");

  auto trimmed = store.assemble_context(unit_axis(0), 3, 6);
  REQUIRE(trimmed.size() == 2);
  CHECK(trimmed[0].id == "a");
  CHECK(trimmed[1].id == "b");
}

TEST_CASE("store persistence round trip") {
  VectorStore store;
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    REQUIRE(store.upsert(rec("r" + std::to_string(i), random_unit(rng), i)).ok());
  }
  const auto path = std::filesystem::temp_directory_path() / "manta_test_store.jsonl";
  REQUIRE(store.save_jsonl(path.string()).ok());
  auto loaded = VectorStore::load_jsonl(path.string());
  REQUIRE(loaded.ok());
  REQUIRE(loaded.value().size() == store.size());
  auto q = random_unit(rng);
  auto a = store.knn(q, 5);
  auto b = loaded.value().knn(q, 5);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
  std::filesystem::remove(path);
}

TEST_CASE("ring window eviction is oldest-first and capacity bounded") {
  RingWindow w(3);
  for (int i = 0; i < 10; ++i) REQUIRE(w.push(i, i * 2.0).ok());
  CHECK(w.size() == 3);
  CHECK(w.entries().front().first == doctest::Approx(7.0));
  CHECK(w.entries().back().first == doctest::Approx(9.0));
}

TEST_CASE("ring window rejects non-increasing stamps") {
  RingWindow w(5);
  REQUIRE(w.push(1.0, 0.0).ok());
  CHECK(!w.push(1.0, 0.0).ok());
  CHECK(!w.push(0.5, 0.0).ok());
}

TEST_CASE("window_slope two-point line") {
  RingWindow w(10);
  REQUIRE(w.push(0.0, 0.0).ok());
  REQUIRE(w.push(1.0, 1.0).ok());
  auto s = window_slope(w);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(1.0));
}

TEST_CASE("window_slope constant error is zero") {
  RingWindow w(10);
  for (int i = 0; i < 5; ++i) REQUIRE(w.push(i, 2.5).ok());
  CHECK(*window_slope(w) == doctest::Approx(0.0));
}

TEST_CASE("window_slope insufficient entries") {
  RingWindow w(10);
  CHECK(!window_slope(w).has_value());
  REQUIRE(w.push(0.0, 1.0).ok());
  CHECK(!window_slope(w).has_value());
}

TEST_CASE("window_slope recovers known slope from noisy ramp") {
  // Oracle: closed-form least squares on the same samples.
  Rng rng(123);
  RingWindow w(10);
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 10; ++i) {
    const double t = i * 0.5;
    const double y = 0.5 * t + rng.uniform(-0.05, 0.05);
    samples.emplace_back(t, y);
    REQUIRE(w.push(t, y).ok());
  }
  double mt = 0, my = 0;
  for (auto& [t, y] : samples) {
    mt += t;
    my += y;
  }
  mt /= samples.size();
  my /= samples.size();
  double num = 0, den = 0;
  for (auto& [t, y] : samples) {
    num += (t - mt) * (y - my);
    den += (t - mt) * (t - mt);
  }
  const double oracle = num / den;
  auto s = window_slope(w);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(std::abs(*s - 0.5) < 0.05);
}
