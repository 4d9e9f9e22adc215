#pragma once

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "manta/util/json.hpp"
#include "manta/util/result.hpp"

namespace manta::memory {

inline constexpr std::size_t kEmbedDim = 256;

using EmbeddingVector = std::array<double, kEmbedDim>;

enum class RecordKind { experience, observation, knowledge, sim_outcome };

const char* to_string(RecordKind kind);
Result<RecordKind> record_kind_from_string(const std::string& s);

struct MemoryRecord {
  std::string id;
  EmbeddingVector vector{};  // unit L2 norm
  Json payload;
  RecordKind kind = RecordKind::experience;
  double stamp = 0.0;
};

/// Deterministic feature-hash embedder: whitespace/punctuation tokenization,
/// lowercase, FNV bucket in [0, 256), count accumulation, L2 normalization.
Result<EmbeddingVector> embed(const std::string& text);
/// Feature-list form: each item is tokenized and accumulated into the same vector.
Result<EmbeddingVector> embed(const std::vector<std::string>& features);

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct ContextItem {
  std::string id;
  std::string text;
};

/// The VDB: exhaustive-scan cosine k-NN over unit-norm embeddings.
class VectorStore {
 public:
  /// Same id overwrites. Rejects non-unit vectors.
  Result<std::size_t> upsert(MemoryRecord record);

  std::size_t size() const { return records_.size(); }

  /// Sorted by cosine similarity desc; ties broken by newest stamp, then id.
  std::vector<MemoryRecord> knn(const EmbeddingVector& query, std::size_t k) const;

  /// Top-k payload texts in rank order, truncated at token budget with
  /// whole-item granularity. A record's text is its payload "text" field when
  /// present, else the compact payload dump.
  std::vector<ContextItem> assemble_context(const EmbeddingVector& query, std::size_t k,
                                            std::size_t token_budget) const;

  Result<void> save_jsonl(const std::string& path) const;
  static Result<VectorStore> load_jsonl(const std::string& path);

  const std::vector<MemoryRecord>& records() const { return records_; }

 private:
  std::vector<MemoryRecord> records_;  // insertion order; ids unique
};

/// Fixed-capacity (stamp, lateral error) history with oldest-first eviction;
/// the short-term visual-temporal memory behind disturbance estimation.
class RingWindow {
 public:
  explicit RingWindow(std::size_t capacity = 10) : capacity_(capacity) {}

  /// Stamps must be strictly increasing.
  Result<void> push(double stamp, double lateral_error);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<std::pair<double, double>>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<std::pair<double, double>> entries_;
};

/// Least-squares slope of lateral error vs stamp (m/s); nullopt when fewer
/// than two entries are available.
std::optional<double> window_slope(const RingWindow& window);

}  // namespace manta::memory
