#include "manta/bus/bus.hpp"

#include <algorithm>
#include <cassert>
#include <fstream>
#include <sstream>

namespace manta::bus {

std::vector<Envelope> Subscription::drain() {
  std::vector<Envelope> out(inbox_.begin(), inbox_.end());
  inbox_.clear();
  return out;
}

void Subscription::deliver(const Envelope& env) {
  inbox_.push_back(env);
  digest_.update(envelope_canonical(env));
  ++delivered_total_;
}

std::string Trace::to_jsonl() const {
  std::string out = "{\"seed\":" + std::to_string(seed) + ",\"config_digest\":\"" +
                    config_digest + "\",\"wiring\":" + wiring.dump() + "}\n";
  for (const auto& e : entries) {
    out += trace_line(e.tick, e.env);
    out += "\n";
  }
  return out;
}

Result<void> Trace::save_jsonl(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) return make_error("io_error", "cannot open for write: " + path);
  f << to_jsonl();
  return ok_result();
}

Result<Trace> Trace::parse_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Trace t;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!have_header) {
      Json h = Json::parse(line, nullptr, false);
      if (h.is_discarded() || !h.contains("seed") || !h.contains("config_digest")) {
        return make_error("bad_trace", "missing or malformed header line");
      }
      t.seed = h.at("seed").get<std::uint64_t>();
      t.config_digest = h.at("config_digest").get<std::string>();
      t.wiring = h.value("wiring", Json::object());
      have_header = true;
      continue;
    }
    auto parsed = parse_trace_line(line);
    if (!parsed.ok()) return parsed.error();
    auto [tick, env] = std::move(parsed).take();
    t.entries.push_back(TraceEntry{tick, std::move(env)});
  }
  if (!have_header) return make_error("bad_trace", "empty trace file");
  return t;
}

Result<Trace> Trace::load_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return make_error("io_error", "cannot open for read: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_jsonl(ss.str());
}

Result<void> Bus::register_topic(const std::string& topic, const std::string& schema_id) {
  if (topic.empty()) return make_error("bad_topic", "empty topic name");
  if (topics_.count(topic)) return make_error("duplicate_topic", "topic exists: " + topic);
  if (!registry_.contains(schema_id)) {
    return make_error("unknown_schema", "schema not registered: " + schema_id);
  }
  topics_[topic].schema_id = schema_id;
  return ok_result();
}

const std::string* Bus::topic_schema(const std::string& topic) const {
  auto it = topics_.find(topic);
  return it == topics_.end() ? nullptr : &it->second.schema_id;
}

Result<Subscription*> Bus::subscribe(const std::string& topic, const std::string& subscriber_id) {
  auto it = topics_.find(topic);
  if (it == topics_.end()) return make_error("unknown_topic", "topic not registered: " + topic);
  if (subscriber_id.empty()) return make_error("bad_subscriber", "empty subscriber_id");
  for (const auto& s : it->second.subs) {
    if (s->subscriber_id() == subscriber_id) {
      return make_error("duplicate_subscription",
                        subscriber_id + " already subscribed to " + topic);
    }
  }
  it->second.subs.emplace_back(new Subscription(topic, subscriber_id));
  return it->second.subs.back().get();
}

Result<void> Bus::publish(Envelope env) {
  auto it = topics_.find(env.topic);
  if (it == topics_.end()) {
    return make_error("unknown_topic", "topic not registered: " + env.topic);
  }
  if (env.publisher_id.empty()) return make_error("bad_publisher", "empty publisher_id");
  TopicState& ts = it->second;
  if (env.schema_id.empty()) env.schema_id = ts.schema_id;
  if (env.schema_id != ts.schema_id) {
    return make_error("schema_mismatch", "envelope schema " + env.schema_id +
                                             " does not match topic schema " + ts.schema_id);
  }
  auto valid = registry_.validate(ts.schema_id, env.payload);
  if (!valid.ok()) return valid;

  auto& next = ts.next_seq[env.publisher_id];
  if (env.seq) {
    if (*env.seq < next) {
      return make_error("bad_seq", "seq must increase per (topic, publisher)");
    }
    next = *env.seq + 1;
  } else {
    env.seq = next++;
  }

  if (!env.stamp) env.stamp = clock_;
  if (*env.stamp < 0.0) return make_error("bad_stamp", "stamp must be non-negative");
  auto last_it = ts.last_stamp.find(env.publisher_id);
  if (last_it != ts.last_stamp.end() && *env.stamp < last_it->second) {
    return make_error("bad_stamp", "stamp regressed within publisher stream");
  }
  ts.last_stamp[env.publisher_id] = *env.stamp;

  if (mode_ == Mode::free_running) {
    deliver(env);
    if (recording_) entries_.push_back(TraceEntry{tick_index_, env});
    return ok_result();
  }
  pending_.push_back(std::move(env));
  return ok_result();
}

void Bus::deliver(const Envelope& env) {
  auto it = topics_.find(env.topic);
  assert(it != topics_.end());
  for (auto& sub : it->second.subs) {
    sub->deliver(env);
  }
}

std::size_t Bus::tick(double dt) {
  assert(dt > 0.0 && "tick requires positive dt");
  std::stable_sort(pending_.begin(), pending_.end(), [](const Envelope& a, const Envelope& b) {
    if (a.topic != b.topic) return a.topic < b.topic;
    if (a.publisher_id != b.publisher_id) return a.publisher_id < b.publisher_id;
    return a.seq.value_or(0) < b.seq.value_or(0);
  });
  std::size_t delivered = 0;
  for (const auto& env : pending_) {
    deliver(env);
    if (recording_) entries_.push_back(TraceEntry{tick_index_, env});
    ++delivered;
  }
  pending_.clear();
  clock_ += dt;
  ++tick_index_;
  return delivered;
}

Result<void> Bus::start_recording(std::uint64_t seed) {
  if (tick_index_ != 0 || !pending_.empty()) {
    return make_error("record_too_late", "recording must start from tick 0");
  }
  recording_ = true;
  seed_ = seed;
  entries_.clear();
  return ok_result();
}

Json Bus::wiring() const {
  Json topics_json = Json::array();
  Json subs_json = Json::array();
  for (const auto& [name, ts] : topics_) {
    topics_json.push_back(Json{{"name", name}, {"schema", ts.schema_id}});
    for (const auto& sub : ts.subs) {
      subs_json.push_back(Json::array({sub->subscriber_id(), name}));
    }
  }
  return Json{{"mode", mode_ == Mode::lockstep ? "lockstep" : "free_running"},
              {"schemas", registry_.to_json()},
              {"topics", std::move(topics_json)},
              {"subscriptions", std::move(subs_json)}};
}

std::string Bus::config_digest() const { return hex64(fnv1a64(wiring().dump())); }

Trace Bus::trace() const {
  Trace t;
  t.seed = seed_;
  t.config_digest = config_digest();
  t.wiring = wiring();
  t.entries = entries_;
  return t;
}

Json Bus::inbox_digests() const {
  Json out = Json::object();
  for (const auto& [name, ts] : topics_) {
    for (const auto& sub : ts.subs) {
      out[sub->subscriber_id() + "|" + name] = sub->history_digest();
    }
  }
  return out;
}

std::vector<const Subscription*> Bus::all_subscriptions() const {
  std::vector<const Subscription*> out;
  for (const auto& [name, ts] : topics_) {
    (void)name;
    for (const auto& sub : ts.subs) out.push_back(sub.get());
  }
  return out;
}

Result<Bus> bus_from_wiring(const Json& wiring) {
  if (!wiring.is_object()) return make_error("bad_trace", "missing wiring object");
  Bus bus(wiring.value("mode", "lockstep") == "free_running" ? Mode::free_running
                                                             : Mode::lockstep);
  for (const auto& sj : wiring.value("schemas", Json::array())) {
    auto schema = TopicSchema::from_json(sj);
    if (!schema.ok()) return schema.error();
    auto r = bus.schemas().add(std::move(schema).take());
    if (!r.ok()) return r.error();
  }
  for (const auto& tj : wiring.value("topics", Json::array())) {
    auto r = bus.register_topic(tj.at("name").get<std::string>(),
                                tj.at("schema").get<std::string>());
    if (!r.ok()) return r.error();
  }
  for (const auto& sub : wiring.value("subscriptions", Json::array())) {
    auto r = bus.subscribe(sub.at(1).get<std::string>(), sub.at(0).get<std::string>());
    if (!r.ok()) return r.error();
  }
  return bus;
}

Result<void> replay_trace(const Trace& trace, Bus& fresh_bus) {
  if (fresh_bus.tick_index() != 0) {
    return make_error("replay_on_used_bus", "replay requires a fresh bus");
  }
  if (fresh_bus.config_digest() != trace.config_digest) {
    return make_error("config_digest_mismatch",
                      "trace recorded against a different bus configuration");
  }
  std::uint64_t max_tick = 0;
  for (const auto& e : trace.entries) max_tick = std::max(max_tick, e.tick);
  std::size_t i = 0;
  for (std::uint64_t t = 0; trace.entries.empty() ? false : t <= max_tick; ++t) {
    while (i < trace.entries.size() && trace.entries[i].tick == t) {
      auto r = fresh_bus.publish(trace.entries[i].env);
      if (!r.ok()) return r;
      ++i;
    }
    fresh_bus.tick(1.0);
  }
  return ok_result();
}

}  // namespace manta::bus
