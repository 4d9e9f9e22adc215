#include "manta/memory/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "manta/util/digest.hpp"
#include "manta/util/text.hpp"

namespace manta::memory {

const char* to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::experience: return "experience";
    case RecordKind::observation: return "observation";
    case RecordKind::knowledge: return "knowledge";
    case RecordKind::sim_outcome: return "sim_outcome";
  }
  return "?";
}

Result<RecordKind> record_kind_from_string(const std::string& s) {
  if (s == "experience") return RecordKind::experience;
  if (s == "observation") return RecordKind::observation;
  if (s == "knowledge") return RecordKind::knowledge;
  if (s == "sim_outcome") return RecordKind::sim_outcome;
  return make_error("bad_kind", "unknown record kind: " + s);
}

namespace {

void accumulate(EmbeddingVector& acc, const std::string& text) {
  for (const auto& token : tokenize_words(text)) {
    acc[fnv1a64(token) % kEmbedDim] += 1.0;
  }
}

Result<EmbeddingVector> normalize(EmbeddingVector v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 <= 0.0) return make_error("empty_input", "no tokens to embed");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace

Result<EmbeddingVector> embed(const std::string& text) {
  if (text.empty()) return make_error("empty_input", "cannot embed empty text");
  EmbeddingVector acc{};
  accumulate(acc, text);
  return normalize(acc);
}

Result<EmbeddingVector> embed(const std::vector<std::string>& features) {
  if (features.empty()) return make_error("empty_input", "cannot embed empty feature list");
  EmbeddingVector acc{};
  for (const auto& f : features) accumulate(acc, f);
  return normalize(acc);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < kEmbedDim; ++i) dot += a[i] * b[i];
  return dot;
}

Result<std::size_t> VectorStore::upsert(MemoryRecord record) {
  if (record.id.empty()) return make_error("bad_record", "empty record id");
  double norm2 = 0.0;
  for (double x : record.vector) norm2 += x * x;
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9) {
    return make_error("bad_record", "vector is not unit norm: " + record.id);
  }
  for (auto& r : records_) {
    if (r.id == record.id) {
      r = std::move(record);
      return records_.size();
    }
  }
  records_.push_back(std::move(record));
  return records_.size();
}

std::vector<MemoryRecord> VectorStore::knn(const EmbeddingVector& query, std::size_t k) const {
  std::vector<std::pair<double, const MemoryRecord*>> scored;
  scored.reserve(records_.size());
  for (const auto& r : records_) scored.emplace_back(cosine(query, r.vector), &r);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    if (a.second->stamp != b.second->stamp) return a.second->stamp > b.second->stamp;
    return a.second->id < b.second->id;
  });
  std::vector<MemoryRecord> out;
  const std::size_t n = std::min(k, scored.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(*scored[i].second);
  return out;
}

std::vector<ContextItem> VectorStore::assemble_context(const EmbeddingVector& query,
                                                       std::size_t k,
                                                       std::size_t token_budget) const {
  std::vector<ContextItem> out;
  std::size_t used = 0;
  for (const auto& rec : knn(query, k)) {
    std::string text;
    if (rec.payload.is_object() && rec.payload.contains("text") &&
        rec.payload.at("text").is_string()) {
      text = rec.payload.at("text").get<std::string>();
    } else {
      text = rec.payload.dump();
    }
    const std::size_t tokens = word_count(text);
    if (used + tokens > token_budget) break;  // whole-item granularity
    used += tokens;
    out.push_back(ContextItem{rec.id, std::move(text)});
  }
  return out;
}

Result<void> VectorStore::save_jsonl(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) return make_error("io_error", "cannot open for write: " + path);
  for (const auto& r : records_) {
    Json vec = Json::array();
    for (double x : r.vector) vec.push_back(x);
    Json line{{"id", r.id},
              {"kind", to_string(r.kind)},
              {"stamp", r.stamp},
              {"vector", std::move(vec)},
              {"payload", r.payload}};
    f << line.dump() << "\n";
  }
  return ok_result();
}

Result<VectorStore> VectorStore::load_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return make_error("io_error", "cannot open for read: " + path);
  VectorStore store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      return make_error("bad_store_file", "unparseable line " + std::to_string(lineno));
    }
    MemoryRecord r;
    r.id = j.at("id").get<std::string>();
    auto kind = record_kind_from_string(j.at("kind").get<std::string>());
    if (!kind.ok()) return kind.error();
    r.kind = kind.value();
    r.stamp = j.at("stamp").get<double>();
    const auto& vec = j.at("vector");
    if (!vec.is_array() || vec.size() != kEmbedDim) {
      return make_error("bad_store_file", "vector dimension mismatch at line " +
                                              std::to_string(lineno));
    }
    for (std::size_t i = 0; i < kEmbedDim; ++i) r.vector[i] = vec[i].get<double>();
    r.payload = j.value("payload", Json::object());
    auto up = store.upsert(std::move(r));
    if (!up.ok()) return up.error();
  }
  return store;
}

Result<void> RingWindow::push(double stamp, double lateral_error) {
  if (!entries_.empty() && stamp <= entries_.back().first) {
    return make_error("bad_stamp", "ring window stamps must strictly increase");
  }
  entries_.emplace_back(stamp, lateral_error);
  while (entries_.size() > capacity_) entries_.pop_front();
  return ok_result();
}

std::optional<double> window_slope(const RingWindow& window) {
  const auto& e = window.entries();
  if (e.size() < 2) return std::nullopt;
  double mean_t = 0.0, mean_y = 0.0;
  for (const auto& [t, y] : e) {
    mean_t += t;
    mean_y += y;
  }
  const double n = static_cast<double>(e.size());
  mean_t /= n;
  mean_y /= n;
  double num = 0.0, den = 0.0;
  for (const auto& [t, y] : e) {
    num += (t - mean_t) * (y - mean_y);
    den += (t - mean_t) * (t - mean_t);
  }
  if (den <= 0.0) return std::nullopt;
  return num / den;
}

}  // namespace manta::memory
