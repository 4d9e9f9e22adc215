#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "manta/bus/envelope.hpp"
#include "manta/codesynth/nodedef.hpp"
#include "manta/util/result.hpp"

namespace manta::codesynth {

enum class SandboxViolation { topic, op_budget, state_bytes, malformed };

const char* to_string(SandboxViolation kind);

struct SandboxError {
  SandboxViolation kind;
  std::string detail;
};

/// Interprets one NodeDef. All state lives inside; ticking it with input
/// envelopes yields output envelopes, or a violation (in which case the tick
/// produced no outputs). The interpreter enforces topic permissions, the per-
/// tick op budget, and the state-byte cap; a synthesized definition cannot
/// touch anything else.
class SandboxNode {
 public:
  static Result<std::unique_ptr<SandboxNode>> instantiate(NodeDef def);

  /// Processes one tick of inputs. Either all outputs of the tick, or a
  /// violation and none.
  std::variant<std::vector<bus::Envelope>, SandboxError> process_tick(
      const std::vector<bus::Envelope>& inputs);

  const NodeDef& def() const { return def_; }
  const std::vector<std::string>& sub_topics() const { return sub_topics_; }

 private:
  SandboxNode() = default;

  struct KfState;
  struct OpState {
    std::vector<double> window;                 // window op
    std::shared_ptr<KfState> kf;                // kf op
  };

  NodeDef def_;
  std::vector<std::size_t> topo_order_;
  std::vector<OpState> state_;
  std::vector<std::string> sub_topics_;
};

/// One-shot convenience: instantiate, feed each tick batch, collect outputs.
std::variant<std::vector<bus::Envelope>, SandboxError> sandbox_run(
    const NodeDef& def, const std::vector<std::vector<bus::Envelope>>& ticks,
    const ResourceCaps* cap_overrides = nullptr);

}  // namespace manta::codesynth
