#pragma once

#include "manta/agent/agent.hpp"
#include "manta/diagnostics/diagnostics.hpp"
#include "manta/mission/interpret.hpp"
#include "manta/negotiation/negotiation.hpp"
#include "manta/planner/planner.hpp"
#include "manta/tuning/tuning.hpp"

namespace manta::mission {

/// Registers every schema and topic the standard agent crew uses. Safe to
/// call on a fresh bus only.
Result<void> register_standard_topics(bus::Bus& bus);

/// Stateful diagnostics rule: feeds inbox status samples through a sliding
/// Monitor, answers with the latest three-line report.
agent::TemplateBackend::RuleFactory make_diagnostics_rule(
    diagnostics::Thresholds thresholds = {});

struct RecoveryGains {
  double kp = 0.45;              // baseline proportional gain
  double kp_memory = 1.6;        // slope-informed aggressive gain
  double slope_feedforward = 0.4;
  double max_speed = 1.0;        // command clamp (the safety limit)
};

/// Pipeline-recovery rule. With memory enabled it keeps a ten-sample
/// RingWindow of lateral error and uses the inferred error rate to issue
/// proactive high-gain corrections; without, it reacts proportionally to the
/// instantaneous error only.
agent::TemplateBackend::RuleFactory make_recovery_rule(bool with_memory,
                                                       RecoveryGains gains = {});

/// Commander rule: interprets natural-language commands against the goal
/// table and emits the task graph.
agent::TemplateBackend::RuleFactory make_commander_rule(GoalTable table);

struct NegotiatorConfig {
  std::string self_id;
  std::string other_id;
  double radius = 0.4;
  double threshold = negotiation::kDefaultConflictThreshold;
  double sample_dt = negotiation::kDefaultSampleDt;
  const planner::GridMap* map = nullptr;
  double replan_speed = 0.5;
};

/// Decentralized deconfliction rule: watches both intent topics, detects
/// conflicts, negotiates a role, and (when yielding) publishes a replanned
/// intent plus a negotiation event.
agent::TemplateBackend::RuleFactory make_negotiator_rule(NegotiatorConfig config);

/// Rule book with every standard role bound: planner, diagnostics, student,
/// recovery (baseline/memory), commander (needs a goal table at bind time).
agent::RuleBook standard_rulebook();

}  // namespace manta::mission
