#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "manta/bus/envelope.hpp"
#include "manta/bus/schema.hpp"
#include "manta/util/digest.hpp"
#include "manta/util/result.hpp"

namespace manta::bus {

/// One subscriber's view of one topic. Envelopes land here at tick boundaries
/// in per-(topic, publisher) FIFO order.
class Subscription {
 public:
  const std::string& subscriber_id() const { return subscriber_id_; }
  const std::string& topic() const { return topic_; }

  bool empty() const { return inbox_.empty(); }
  std::size_t pending() const { return inbox_.size(); }

  std::vector<Envelope> drain();

  /// Rolling digest over every envelope ever delivered here, in order.
  std::string history_digest() const { return digest_.hex(); }
  std::size_t delivered_total() const { return delivered_total_; }

 private:
  friend class Bus;
  Subscription(std::string topic, std::string subscriber_id)
      : topic_(std::move(topic)), subscriber_id_(std::move(subscriber_id)) {}

  void deliver(const Envelope& env);

  std::string topic_;
  std::string subscriber_id_;
  std::deque<Envelope> inbox_;
  Digest digest_;
  std::size_t delivered_total_ = 0;
};

struct TraceEntry {
  std::uint64_t tick = 0;
  Envelope env;
};

/// Recorded delivery history plus the wiring needed to replay it on a fresh
/// bus. Saved as JSON Lines: a header line, then one envelope per line.
struct Trace {
  std::uint64_t seed = 0;
  std::string config_digest;
  Json wiring;
  std::vector<TraceEntry> entries;

  std::string to_jsonl() const;
  Result<void> save_jsonl(const std::string& path) const;
  static Result<Trace> load_jsonl(const std::string& path);
  static Result<Trace> parse_jsonl(const std::string& text);
};

enum class Mode { lockstep, free_running };

/// Deterministic in-process typed publish/subscribe backbone. In lockstep
/// mode (the default, and the only mode acceptance scenarios use) publishes
/// queue up and tick() delivers them in (topic, publisher, seq) order.
class Bus {
 public:
  explicit Bus(Mode mode = Mode::lockstep) : mode_(mode) {}

  SchemaRegistry& schemas() { return registry_; }
  const SchemaRegistry& schemas() const { return registry_; }

  Result<void> register_topic(const std::string& topic, const std::string& schema_id);
  bool has_topic(const std::string& topic) const { return topics_.count(topic) > 0; }
  const std::string* topic_schema(const std::string& topic) const;

  Result<Subscription*> subscribe(const std::string& topic, const std::string& subscriber_id);

  /// Validates, assigns seq/stamp when absent, and queues for the next tick
  /// (or delivers immediately in free-running mode).
  Result<void> publish(Envelope env);

  /// Delivers everything queued before the call, advances the clock, returns
  /// the number of envelopes delivered. Lockstep only; dt must be positive.
  std::size_t tick(double dt);

  double clock() const { return clock_; }
  std::uint64_t tick_index() const { return tick_index_; }
  std::size_t queued() const { return pending_.size(); }
  Mode mode() const { return mode_; }

  Result<void> start_recording(std::uint64_t seed);
  bool recording() const { return recording_; }
  Trace trace() const;

  Json wiring() const;
  std::string config_digest() const;

  /// Per-subscription history digests, keyed "subscriber_id|topic".
  Json inbox_digests() const;
  std::vector<const Subscription*> all_subscriptions() const;

 private:
  struct TopicState {
    std::string schema_id;
    std::vector<std::unique_ptr<Subscription>> subs;
    std::map<std::string, std::uint64_t> next_seq;     // per publisher
    std::map<std::string, double> last_stamp;          // per publisher
  };

  void deliver(const Envelope& env);

  Mode mode_;
  SchemaRegistry registry_;
  std::map<std::string, TopicState> topics_;
  std::vector<Envelope> pending_;
  double clock_ = 0.0;
  std::uint64_t tick_index_ = 0;
  bool recording_ = false;
  std::uint64_t seed_ = 0;
  std::vector<TraceEntry> entries_;
};

/// Re-runs a recorded trace on a freshly wired bus (same schema registry,
/// topics, and subscriptions). Fails on config digest mismatch.
Result<void> replay_trace(const Trace& trace, Bus& fresh_bus);

/// Reconstructs a bus (schemas, topics, subscriptions) from a trace header's
/// wiring snapshot; traces are self-contained for replay.
Result<Bus> bus_from_wiring(const Json& wiring);

}  // namespace manta::bus
