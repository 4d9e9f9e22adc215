#include "manta/mission/rules.hpp"

#include "manta/memory/memory.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace manta::mission {

using bus::FieldKind;
using bus::TopicSchema;

Result<void> register_standard_topics(bus::Bus& bus) {
  auto add_schema = [&](TopicSchema s) { return bus.schemas().add(std::move(s)); };

  {
    TopicSchema s;
    s.schema_id = "twist_cmd";
    s.fields = {{"vx", FieldKind::real, true, {}, {}, {}},
                {"vy", FieldKind::real, true, {}, {}, {}},
                {"vz", FieldKind::real, false, {}, {}, {}},
                {"yaw_rate", FieldKind::real, false, {}, {}, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "vehicle_status";
    s.fields = {{"t", FieldKind::real, true, {}, {}, {}},
                {"armed", FieldKind::boolean, true, {}, {}, {}},
                {"mode", FieldKind::string, true, {}, {}, {}},
                {"thrusters", FieldKind::list, true, {}, {}, {}},
                {"thrusters[].id", FieldKind::integer, true, 0.0, 7.0, {}},
                {"thrusters[].pwm_cmd", FieldKind::real, true, {}, {}, {}},
                {"thrusters[].pwm_obs", FieldKind::real, true, {}, {}, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "diagnosis_report";
    s.fields = {{"labels", FieldKind::list, true, {}, {}, {}},
                {"labels[]", FieldKind::string, true, {}, {}, {"ok", "dead", "out_of_range"}},
                {"lines", FieldKind::list, true, {}, {}, {}},
                {"lines[]", FieldKind::string, true, {}, {}, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "pipeline_error";
    s.fields = {{"t", FieldKind::real, true, {}, {}, {}},
                {"e", FieldKind::real, true, {}, {}, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "waypoint_list";
    s.fields = {{"waypoints", FieldKind::list, true, {}, {}, {}},
                {"waypoints[].x", FieldKind::real, true, {}, {}, {}},
                {"waypoints[].y", FieldKind::real, true, {}, {}, {}},
                {"waypoints[].z", FieldKind::real, false, {}, {}, {}},
                {"length", FieldKind::real, false, {}, {}, {}},
                {"infeasible", FieldKind::boolean, false, {}, {}, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "plan_request";
    s.allow_extra_fields = true;  // carries the serialized map
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "detections";
    s.fields = {{"detections", FieldKind::list, true, {}, {}, {}},
                {"detections[].class", FieldKind::string, true, {}, {}, {}},
                {"detections[].bearing", FieldKind::real, true, {}, {}, {}},
                {"detections[].range", FieldKind::real, true, {}, {}, {}},
                {"detections[].confidence", FieldKind::real, true, 0.0, 1.0, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "scene_text";
    s.fields = {{"text", FieldKind::string, true, {}, {}, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "intent";
    s.fields = {{"agent_id", FieldKind::string, true, {}, {}, {}},
                {"trajectory", FieldKind::list, true, {}, {}, {}},
                {"trajectory[].t", FieldKind::real, true, {}, {}, {}},
                {"trajectory[].x", FieldKind::real, true, {}, {}, {}},
                {"trajectory[].y", FieldKind::real, true, {}, {}, {}},
                {"trajectory[].z", FieldKind::real, false, {}, {}, {}},
                {"radius", FieldKind::real, true, 0.0, {}, {}},
                {"priority", FieldKind::string, false, {}, {}, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "negotiation_event";
    s.fields = {{"agent", FieldKind::string, true, {}, {}, {}},
                {"role", FieldKind::string, true, {}, {}, {"yield", "proceed"}},
                {"t_star", FieldKind::real, true, {}, {}, {}},
                {"d_star", FieldKind::real, true, {}, {}, {}},
                {"replan", FieldKind::string, false, {}, {},
                 {"temporal", "spatial", "abort_hold"}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "task_graph";
    s.allow_extra_fields = true;
    s.fields = {{"tasks", FieldKind::list, true, {}, {}, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "mission_command";
    s.fields = {{"text", FieldKind::string, true, {}, {}, {}}};
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }
  {
    TopicSchema s;
    s.schema_id = "nav_sample";
    s.allow_extra_fields = true;
    auto r = add_schema(s);
    if (!r.ok()) return r;
  }

  for (const auto& [topic, schema] :
       std::vector<std::pair<const char*, const char*>>{
           {"cmd/twist", "twist_cmd"},
           {"vehicle/status", "vehicle_status"},
           {"diagnostics/report", "diagnosis_report"},
           {"pipeline/error", "pipeline_error"},
           {"plan/request", "plan_request"},
           {"nav/plan", "waypoint_list"},
           {"perception/detections", "detections"},
           {"scene/description", "scene_text"},
           {"intent/A", "intent"},
           {"intent/B", "intent"},
           {"negotiation/events", "negotiation_event"},
           {"mission/command", "mission_command"},
           {"mission/tasks", "task_graph"},
           {"sensors/dvl", "nav_sample"},
           {"sensors/compass", "nav_sample"},
           {"sensors/odom", "nav_sample"},
           {"nav/estimate", "nav_sample"},
           {"synthesis/request", "nav_sample"},
           {"synthesis/report", "nav_sample"}}) {
    auto r = bus.register_topic(topic, schema);
    if (!r.ok()) return r;
  }
  return ok_result();
}

agent::TemplateBackend::RuleFactory make_diagnostics_rule(diagnostics::Thresholds thresholds) {
  return [thresholds]() {
    auto monitor = std::make_shared<diagnostics::Monitor>(thresholds);
    return [monitor](const agent::ReasonerQuery& query) -> Result<agent::ReasonerReply> {
      const Json inbox = Json::parse(query.user_content, nullptr, false);
      if (!inbox.is_array()) return agent::ReasonerReply::noop();
      std::optional<diagnostics::Diagnosis> latest;
      for (const auto& env : inbox) {
        auto status = sim::VehicleStatus::from_json(env.at("payload"));
        if (!status.ok()) continue;
        auto pushed = monitor->push(status.value());
        if (!pushed.ok()) return pushed.error();  // stream fault
        if (pushed.value().has_value()) latest = *pushed.value();
      }
      if (!latest) return agent::ReasonerReply::noop();
      Json labels = Json::array();
      for (auto l : latest->labels) labels.push_back(sim::to_string(l));
      return agent::ReasonerReply::from_json(
          Json{{"labels", std::move(labels)}, {"lines", latest->lines()}});
    };
  };
}

agent::TemplateBackend::RuleFactory make_recovery_rule(bool with_memory, RecoveryGains gains) {
  return [with_memory, gains]() {
    auto window = std::make_shared<memory::RingWindow>(10);
    return [with_memory, gains, window](
               const agent::ReasonerQuery& query) -> Result<agent::ReasonerReply> {
      const Json inbox = Json::parse(query.user_content, nullptr, false);
      if (!inbox.is_array()) return agent::ReasonerReply::noop();
      std::optional<std::pair<double, double>> latest;  // (t, e)
      for (const auto& env : inbox) {
        const auto& payload = env.at("payload");
        if (!payload.is_object() || !payload.contains("e")) continue;
        const double t = payload.value("t", 0.0);
        const double e = payload.at("e").get<double>();
        latest = {t, e};
        (void)window->push(t, e);  // duplicate stamps are simply skipped
      }
      if (!latest) return agent::ReasonerReply::noop();
      const double e = latest->second;
      double vy = -gains.kp * e;
      if (with_memory) {
        const auto slope = memory::window_slope(*window);
        if (slope) {
          // The inferred disturbance dynamics justify a proactive, high-gain
          // correction instead of the cautious reactive one.
          vy = -gains.kp_memory * e - gains.slope_feedforward * (*slope);
        }
      }
      vy = std::clamp(vy, -gains.max_speed, gains.max_speed);
      return agent::ReasonerReply::from_json(
          Json{{"vx", 0.0}, {"vy", vy}, {"vz", 0.0}, {"yaw_rate", 0.0}});
    };
  };
}

agent::TemplateBackend::RuleFactory make_commander_rule(GoalTable table) {
  return [table]() {
    return [table](const agent::ReasonerQuery& query) -> Result<agent::ReasonerReply> {
      const Json inbox = Json::parse(query.user_content, nullptr, false);
      if (!inbox.is_array()) return agent::ReasonerReply::noop();
      std::optional<std::string> command;
      for (const auto& env : inbox) {
        const auto& payload = env.at("payload");
        if (payload.is_object() && payload.contains("text")) {
          command = payload.at("text").get<std::string>();
        }
      }
      if (!command) return agent::ReasonerReply::noop();
      auto graph = interpret(*command, table);
      if (!graph.ok()) {
        return agent::ReasonerReply::from_json(
            Json{{"tasks", Json::array()}, {"unparseable", true}});
      }
      return agent::ReasonerReply::from_json(graph.value().to_json());
    };
  };
}

agent::TemplateBackend::RuleFactory make_negotiator_rule(NegotiatorConfig config) {
  return [config]() {
    struct State {
      std::optional<negotiation::IntentMsg> self;
      std::optional<negotiation::IntentMsg> other;
      bool replanned = false;
    };
    auto state = std::make_shared<State>();
    return [config, state](const agent::ReasonerQuery& query) -> Result<agent::ReasonerReply> {
      const Json inbox = Json::parse(query.user_content, nullptr, false);
      if (!inbox.is_array()) return agent::ReasonerReply::noop();
      for (const auto& env : inbox) {
        auto intent = negotiation::IntentMsg::from_json(env.at("payload"));
        if (!intent.ok()) continue;
        if (intent.value().agent_id == config.self_id) {
          state->self = intent.value();
        } else if (intent.value().agent_id == config.other_id) {
          state->other = intent.value();
        }
      }
      if (!state->self || !state->other || state->replanned) {
        return agent::ReasonerReply::noop();
      }
      const double horizon =
          std::max(negotiation::trajectory_end_time(state->self->trajectory),
                   negotiation::trajectory_end_time(state->other->trajectory));
      const auto report = negotiation::make_report(
          state->self->trajectory, state->other->trajectory, state->self->bounding_radius,
          state->other->bounding_radius, horizon, config.sample_dt, config.threshold);
      if (!report.conflicting) return agent::ReasonerReply::noop();
      auto role = negotiation::negotiate(*state->self, *state->other);
      if (!role.ok()) return role.error();

      Json outputs = Json::array();
      Json event{{"agent", config.self_id},
                 {"role", role.value() == negotiation::Role::yield ? "yield" : "proceed"},
                 {"t_star", report.t_star},
                 {"d_star", report.d_star}};
      if (role.value() == negotiation::Role::yield) {
        negotiation::ReplanParams params;
        params.threshold = config.threshold;
        params.sample_dt = config.sample_dt;
        params.map = config.map;
        params.speed = config.replan_speed;
        const auto replan = negotiation::replan_yield(
            state->self->trajectory, state->other->trajectory, state->self->bounding_radius,
            state->other->bounding_radius, params);
        negotiation::IntentMsg updated = *state->self;
        updated.trajectory = replan.trajectory;
        state->self = updated;
        state->replanned = true;
        event["replan"] = replan.kind == negotiation::ReplanKind::temporal   ? "temporal"
                          : replan.kind == negotiation::ReplanKind::spatial ? "spatial"
                                                                            : "abort_hold";
        outputs.push_back(Json{{"topic", "intent/" + config.self_id},
                               {"payload", updated.to_json()}});
      }
      outputs.push_back(Json{{"topic", "negotiation/events"}, {"payload", std::move(event)}});
      return agent::ReasonerReply::from_json(Json{{"__outputs", std::move(outputs)}});
    };
  };
}

agent::RuleBook standard_rulebook() {
  agent::RuleBook book;
  book.register_role("planner", planner::make_planner_rule());
  book.register_role("diagnostics", make_diagnostics_rule());
  book.register_role("student", tuning::make_student_rule());
  book.register_role("recovery_baseline", make_recovery_rule(false));
  book.register_role("recovery_memory", make_recovery_rule(true));
  return book;
}

}  // namespace manta::mission
