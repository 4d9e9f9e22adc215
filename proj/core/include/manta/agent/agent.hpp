#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "manta/agent/backend.hpp"
#include "manta/agent/constitution.hpp"
#include "manta/agent/validate.hpp"
#include "manta/bus/bus.hpp"

namespace manta::agent {

inline constexpr const char* kSafetyTopic = "safety/events";
inline constexpr const char* kSafetySchema = "safety_event";

struct AgentSpec {
  std::string agent_id;
  std::string role;
  Constitution constitution;
  std::vector<std::string> subscriptions;
  std::vector<std::string> publications;  // first entry is the primary output topic
  BackendPtr reasoner;
  SafetyLimits limits;
};

/// A running agentic node: constitution + reasoner + safety parser, joined to
/// the bus through its subscriptions. Owned by the Host.
class Agent {
 public:
  const AgentSpec& spec() const { return spec_; }
  const std::string& id() const { return spec_.agent_id; }
  int episode() const { return episode_; }
  const std::vector<bus::Subscription*>& subscriptions() const { return subs_; }

  /// All pending envelopes across this agent's subscriptions, in subscription
  /// order (kept stable across retunes).
  std::vector<bus::Envelope> drain_inbox();
  std::size_t pending_inbox() const;

 private:
  friend class Host;
  AgentSpec spec_;
  std::vector<bus::Subscription*> subs_;
  int episode_ = 1;
};

struct StepOutcome {
  std::vector<bus::Envelope> outbox;        // everything that passed the safety parser
  std::vector<Json> safety_events;          // violation / fault records
};

/// Hosts agents on a bus: instantiation, the reason-act step, retuning, and
/// routing of outputs and safety events back through the lockstep scheduler.
class Host {
 public:
  explicit Host(bus::Bus& bus) : bus_(bus) { ensure_safety_topic(); }

  Result<Agent*> instantiate(AgentSpec spec);
  Result<Agent*> retune(const std::string& agent_id, Constitution new_constitution);

  Agent* find(const std::string& agent_id);
  std::vector<Agent*> agents();

  /// The reason-act cycle: assemble query (constitution, rag context, inbox),
  /// infer, parse, gate every candidate through the safety parser. Reasoner
  /// faults yield an empty outbox plus a fault event, never a crash.
  StepOutcome step(Agent& agent, const std::vector<bus::Envelope>& inbox,
                   const std::vector<ContextItem>& rag_context = {});

  /// step() + publish outbox and safety events through the bus.
  Result<void> step_and_publish(Agent& agent, const std::vector<bus::Envelope>& inbox,
                                const std::vector<ContextItem>& rag_context = {});

  /// Drains every agent's inbox and runs step_and_publish for each, in agent
  /// id order.
  Result<void> step_all();

  bus::Bus& bus() { return bus_; }

 private:
  void ensure_safety_topic();
  void emit_event(StepOutcome& out, const Agent& agent, const std::string& category,
                  const std::string& kind, const std::string& detail) const;

  bus::Bus& bus_;
  std::map<std::string, std::unique_ptr<Agent>> agents_;
};

}  // namespace manta::agent
