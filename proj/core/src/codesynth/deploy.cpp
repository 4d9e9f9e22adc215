#include "manta/codesynth/deploy.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

namespace manta::codesynth {

Json DeployReport::to_json() const {
  return Json{{"node_id", node_id},
              {"gen_time_s", gen_time_s},
              {"tests_passed", tests_passed},
              {"tests_total", tests_total},
              {"deployed", deployed},
              {"rejection_reason", rejection_reason}};
}

Result<DeployReport> Runtime::deploy(const NodeDef& def, const TestSuite& suite,
                                     const std::string& name_hint) {
  DeployReport report;
  report.node_id = name_hint + "_" + std::to_string(next_id_++);
  report.tests_total = static_cast<int>(suite.cases.size());

  if (suite.cases.size() < 2) {
    report.rejection_reason = "suite requires at least 2 cases";
    return report;
  }
  const auto results = run_suite(def, suite);
  for (const auto& r : results) {
    if (r.passed) {
      ++report.tests_passed;
    } else if (report.rejection_reason.empty()) {
      report.rejection_reason = r.name + ": " + r.detail;
    }
  }
  if (report.tests_passed != report.tests_total) return report;

  // All green: hot-register on the live bus.
  for (const auto& topic : def.pub_permissions) {
    if (!bus_.has_topic(topic)) {
      report.rejection_reason = "pub topic not registered on bus: " + topic;
      return report;
    }
  }
  auto node = SandboxNode::instantiate(def);
  if (!node.ok()) {
    report.rejection_reason = node.error().message;
    return report;
  }
  LiveNode live;
  live.id = report.node_id;
  live.node = std::move(node).take();
  for (const auto& topic : def.sub_permissions) {
    if (!bus_.has_topic(topic)) {
      report.rejection_reason = "sub topic not registered on bus: " + topic;
      return report;
    }
    auto sub = bus_.subscribe(topic, live.id);
    if (!sub.ok()) {
      report.rejection_reason = sub.error().message;
      return report;
    }
    live.subs.push_back(sub.value());
  }
  if (!out_dir_.empty()) {
    std::filesystem::create_directories(out_dir_);
    std::ofstream f(out_dir_ + "/" + live.id + ".json");
    if (f) f << def.to_json().dump(2) << "\n";
  }
  nodes_.push_back(std::move(live));
  report.deployed = true;
  return report;
}

Result<void> Runtime::undeploy(const std::string& node_id) {
  for (auto it = nodes_.begin(); it != nodes_.end(); ++it) {
    if (it->id == node_id) {
      nodes_.erase(it);
      return ok_result();
    }
  }
  return make_error("unknown_node", "no deployed node: " + node_id);
}

Result<void> Runtime::enable_request_service(agent::ReasonerBackend* reasoner) {
  if (request_sub_) return ok_result();
  auto sub = bus_.subscribe("synthesis/request", "code_synthesis");
  if (!sub.ok()) return sub.error();
  request_sub_ = sub.value();
  service_reasoner_ = reasoner;
  return ok_result();
}

Result<void> Runtime::tick() {
  if (request_sub_) {
    for (const auto& env : request_sub_->drain()) {
      auto req = NodeRequirement::from_json(env.payload);
      Json report_json;
      if (req.ok()) {
        auto report = synthesize_and_deploy(req.value(), *this, service_reasoner_);
        report_json = report.ok()
                          ? report.value().to_json()
                          : Json{{"deployed", false}, {"rejection_reason", report.error().message}};
      } else {
        report_json = Json{{"deployed", false}, {"rejection_reason", req.error().message}};
      }
      bus::Envelope out;
      out.topic = "synthesis/report";
      out.publisher_id = "code_synthesis";
      out.payload = std::move(report_json);
      auto r = bus_.publish(std::move(out));
      if (!r.ok()) return r;
    }
  }
  for (auto& live : nodes_) {
    std::vector<bus::Envelope> inputs;
    for (auto* sub : live.subs) {
      auto batch = sub->drain();
      inputs.insert(inputs.end(), std::make_move_iterator(batch.begin()),
                    std::make_move_iterator(batch.end()));
    }
    auto result = live.node->process_tick(inputs);
    if (std::holds_alternative<SandboxError>(result)) {
      continue;  // violation: no outputs this tick; the node stays up
    }
    for (auto& env : std::get<std::vector<bus::Envelope>>(result)) {
      env.publisher_id = live.id;
      auto r = bus_.publish(std::move(env));
      if (!r.ok()) return r;
    }
  }
  return ok_result();
}

std::vector<std::string> Runtime::deployed_ids() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) out.push_back(n.id);
  return out;
}

const SandboxNode* Runtime::find(const std::string& node_id) const {
  for (const auto& n : nodes_) {
    if (n.id == node_id) return n.node.get();
  }
  return nullptr;
}

Result<DeployReport> synthesize_and_deploy(const NodeRequirement& req, Runtime& runtime,
                                           agent::ReasonerBackend* reasoner) {
  const auto start = std::chrono::steady_clock::now();
  auto def = synthesize(req, reasoner);
  if (!def.ok()) return def.error();
  auto suite = gen_tests(req, def.value());
  if (!suite.ok()) return suite.error();
  auto report = runtime.deploy(def.value(), suite.value(), "synth");
  if (!report.ok()) return report;
  const auto elapsed = std::chrono::steady_clock::now() - start;
  report.value().gen_time_s =
      std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
  return report;
}

}  // namespace manta::codesynth
