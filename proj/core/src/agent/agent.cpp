#include "manta/agent/agent.hpp"

#include <algorithm>
#include <limits>

namespace manta::agent {

std::vector<bus::Envelope> Agent::drain_inbox() {
  std::vector<bus::Envelope> all;
  for (auto* sub : subs_) {
    auto batch = sub->drain();
    all.insert(all.end(), std::make_move_iterator(batch.begin()),
               std::make_move_iterator(batch.end()));
  }
  return all;
}

std::size_t Agent::pending_inbox() const {
  std::size_t n = 0;
  for (auto* sub : subs_) n += sub->pending();
  return n;
}

void Host::ensure_safety_topic() {
  if (!bus_.schemas().contains(kSafetySchema)) {
    bus::TopicSchema schema;
    schema.schema_id = kSafetySchema;
    schema.fields = {
        {"agent", bus::FieldKind::string, true, {}, {}, {}},
        {"category", bus::FieldKind::string, true, {}, {}, {"violation", "fault"}},
        {"kind", bus::FieldKind::string, true, {}, {},
         {"syntax", "schema", "limit", "backend_fault"}},
        {"detail", bus::FieldKind::string, true, {}, {}, {}},
    };
    (void)bus_.schemas().add(schema);
  }
  if (!bus_.has_topic(kSafetyTopic)) {
    (void)bus_.register_topic(kSafetyTopic, kSafetySchema);
  }
}

Result<Agent*> Host::instantiate(AgentSpec spec) {
  if (spec.agent_id.empty()) return make_error("bad_spec", "agent_id required");
  if (agents_.count(spec.agent_id)) {
    return make_error("duplicate_agent", "agent_id already instantiated: " + spec.agent_id);
  }
  if (!spec.reasoner) return make_error("bad_spec", "reasoner backend required");
  if (spec.constitution.core_directive.empty()) {
    return make_error("bad_spec", "constitution directive required");
  }
  for (const auto& topic : spec.publications) {
    if (!bus_.has_topic(topic)) {
      return make_error("unknown_topic", "publication topic not registered: " + topic);
    }
  }
  for (const auto& topic : spec.subscriptions) {
    if (!bus_.has_topic(topic)) {
      return make_error("unknown_topic", "subscription topic not registered: " + topic);
    }
  }
  if (!spec.constitution.output_schema_id.empty() &&
      !bus_.schemas().contains(spec.constitution.output_schema_id)) {
    return make_error("unknown_schema",
                      "output schema not registered: " + spec.constitution.output_schema_id);
  }

  auto agent = std::unique_ptr<Agent>(new Agent());
  agent->spec_ = std::move(spec);
  for (const auto& topic : agent->spec_.subscriptions) {
    auto sub = bus_.subscribe(topic, agent->spec_.agent_id);
    if (!sub.ok()) return sub.error();
    agent->subs_.push_back(sub.value());
  }
  Agent* raw = agent.get();
  agents_[raw->id()] = std::move(agent);
  return raw;
}

Result<Agent*> Host::retune(const std::string& agent_id, Constitution new_constitution) {
  auto it = agents_.find(agent_id);
  if (it == agents_.end()) return make_error("unknown_agent", "no agent: " + agent_id);
  if (new_constitution.core_directive.empty()) {
    return make_error("bad_constitution", "directive required");
  }
  if (!new_constitution.output_schema_id.empty() &&
      !bus_.schemas().contains(new_constitution.output_schema_id)) {
    return make_error("unknown_schema",
                      "output schema not registered: " + new_constitution.output_schema_id);
  }
  Agent& agent = *it->second;
  agent.spec_.constitution = std::move(new_constitution);
  agent.episode_ += 1;
  // Fresh reasoner context; subscriptions (and any in-flight inbox) persist.
  agent.spec_.reasoner->reset_context();
  return &agent;
}

Agent* Host::find(const std::string& agent_id) {
  auto it = agents_.find(agent_id);
  return it == agents_.end() ? nullptr : it->second.get();
}

std::vector<Agent*> Host::agents() {
  std::vector<Agent*> out;
  out.reserve(agents_.size());
  for (auto& [id, a] : agents_) {
    (void)id;
    out.push_back(a.get());
  }
  return out;
}

void Host::emit_event(StepOutcome& out, const Agent& agent, const std::string& category,
                      const std::string& kind, const std::string& detail) const {
  out.safety_events.push_back(Json{
      {"agent", agent.id()}, {"category", category}, {"kind", kind}, {"detail", detail}});
}

StepOutcome Host::step(Agent& agent, const std::vector<bus::Envelope>& inbox,
                       const std::vector<ContextItem>& rag_context) {
  StepOutcome out;
  const AgentSpec& spec = agent.spec();

  ReasonerQuery query;
  query.system_text = spec.constitution.render();
  query.context = rag_context;
  Json inbox_json = Json::array();
  for (const auto& env : inbox) {
    inbox_json.push_back(Json{{"topic", env.topic},
                              {"stamp", env.stamp.value_or(0.0)},
                              {"payload", env.payload}});
  }
  query.user_content = inbox_json.dump();

  auto reply = spec.reasoner->infer(query);
  if (!reply.ok()) {
    emit_event(out, agent, "fault", "backend_fault", reply.error().message);
    return out;
  }
  if (reply.value().is_noop()) return out;

  // A reply either targets the primary publication topic directly, or wraps
  // multiple outputs as {"__outputs":[{"topic":...,"payload":...}]}.
  struct Candidate {
    std::string topic;
    Json payload;
  };
  std::vector<Candidate> candidates;

  Json parsed;
  {
    const std::string& text = reply.value().content;
    bus::TopicSchema throwaway;  // syntax check happens against the parse only
    throwaway.allow_extra_fields = true;
    SafetyLimits no_limits;
    no_limits.max_speed = std::numeric_limits<double>::max();
    no_limits.max_depth = std::numeric_limits<double>::max();
    no_limits.workspace = AABox{{-1e300, -1e300, -1e300}, {1e300, 1e300, 1e300}};
    if (auto v = validate_text(text, throwaway, no_limits, &parsed)) {
      emit_event(out, agent, "violation", to_string(v->kind), v->detail);
      return out;
    }
  }

  if (parsed.is_object() && parsed.contains("__outputs")) {
    const auto& outputs = parsed.at("__outputs");
    if (!outputs.is_array()) {
      emit_event(out, agent, "violation", "schema", "__outputs must be a list");
      return out;
    }
    for (const auto& o : outputs) {
      if (!o.is_object() || !o.contains("topic") || !o.contains("payload") ||
          !o.at("topic").is_string()) {
        emit_event(out, agent, "violation", "schema", "__outputs entries need topic and payload");
        continue;
      }
      candidates.push_back(Candidate{o.at("topic").get<std::string>(), o.at("payload")});
    }
  } else {
    if (spec.publications.empty()) {
      emit_event(out, agent, "violation", "schema", "agent declares no publications");
      return out;
    }
    candidates.push_back(Candidate{spec.publications.front(), parsed});
  }

  for (auto& c : candidates) {
    if (std::find(spec.publications.begin(), spec.publications.end(), c.topic) ==
        spec.publications.end()) {
      emit_event(out, agent, "violation", "schema", "undeclared publication topic: " + c.topic);
      continue;
    }
    const std::string* schema_id = bus_.topic_schema(c.topic);
    if (!schema_id) {
      emit_event(out, agent, "violation", "schema", "topic not registered: " + c.topic);
      continue;
    }
    const bus::TopicSchema* schema = bus_.schemas().find(*schema_id);
    if (auto v = validate_payload(c.payload, *schema, spec.limits)) {
      emit_event(out, agent, "violation", to_string(v->kind), v->detail);
      continue;
    }
    bus::Envelope env;
    env.topic = c.topic;
    env.schema_id = *schema_id;
    env.publisher_id = agent.id();
    env.payload = std::move(c.payload);
    out.outbox.push_back(std::move(env));
  }
  return out;
}

Result<void> Host::step_and_publish(Agent& agent, const std::vector<bus::Envelope>& inbox,
                                    const std::vector<ContextItem>& rag_context) {
  StepOutcome out = step(agent, inbox, rag_context);
  for (auto& env : out.outbox) {
    auto r = bus_.publish(std::move(env));
    if (!r.ok()) return r;
  }
  for (auto& event : out.safety_events) {
    bus::Envelope env;
    env.topic = kSafetyTopic;
    env.schema_id = kSafetySchema;
    env.publisher_id = agent.id();
    env.payload = std::move(event);
    auto r = bus_.publish(std::move(env));
    if (!r.ok()) return r;
  }
  return ok_result();
}

Result<void> Host::step_all() {
  for (auto& [id, agent] : agents_) {
    (void)id;
    auto inbox = agent->drain_inbox();
    auto r = step_and_publish(*agent, inbox);
    if (!r.ok()) return r;
  }
  return ok_result();
}

}  // namespace manta::agent
