#pragma once

#include <memory>
#include <string>
#include <vector>

#include "manta/bus/bus.hpp"
#include "manta/codesynth/synth.hpp"

namespace manta::codesynth {

struct DeployReport {
  std::string node_id;
  double gen_time_s = 0.0;
  int tests_passed = 0;
  int tests_total = 0;
  bool deployed = false;
  std::string rejection_reason;

  Json to_json() const;
};

/// Hosts deployed nodes on the live bus. Test suites always run on an
/// isolated sandbox first; only a fully green def is hot-registered.
/// Deploy/undeploy happen between ticks.
class Runtime {
 public:
  explicit Runtime(bus::Bus& bus, std::string out_dir = "") : bus_(bus), out_dir_(std::move(out_dir)) {}

  /// Shadow-test then hot-register. deployed == all tests passed.
  Result<DeployReport> deploy(const NodeDef& def, const TestSuite& suite,
                              const std::string& name_hint = "node");

  /// Stops the node. Its bus subscriptions remain registered (wiring
  /// stability for trace replay); they simply go undrained.
  Result<void> undeploy(const std::string& node_id);

  /// Processes one lockstep interval: drain each live node's inputs, run the
  /// graph, publish outputs. Call between bus ticks.
  Result<void> tick();

  /// Subscribes to "synthesis/request"; requirement envelopes arriving there
  /// run the full synthesize/test/deploy pipeline, with the DeployReport
  /// published on "synthesis/report".
  Result<void> enable_request_service(agent::ReasonerBackend* reasoner = nullptr);

  std::vector<std::string> deployed_ids() const;
  const SandboxNode* find(const std::string& node_id) const;

 private:
  struct LiveNode {
    std::string id;
    std::unique_ptr<SandboxNode> node;
    std::vector<bus::Subscription*> subs;
  };

  bus::Bus& bus_;
  std::string out_dir_;
  std::vector<LiveNode> nodes_;
  int next_id_ = 0;
  bus::Subscription* request_sub_ = nullptr;
  agent::ReasonerBackend* service_reasoner_ = nullptr;
};

/// Full pipeline with timing: synthesize -> gen_tests -> deploy.
Result<DeployReport> synthesize_and_deploy(const NodeRequirement& req, Runtime& runtime,
                                           agent::ReasonerBackend* reasoner = nullptr);

}  // namespace manta::codesynth
