#pragma once

#include <string>
#include <vector>

#include "manta/util/json.hpp"
#include "manta/util/result.hpp"

namespace manta::codesynth {

/// Primitive dataflow operators a synthesized node may be built from.
/// sub(topic)    source: extracts numeric fields from matching envelopes
/// window(n)     stateful: rolling window of the input's first element
/// mean          mean of the incoming vector
/// gain(k)       elementwise scale
/// offset(b)     elementwise shift
/// kf(...)       linear Kalman filter with per-input measurement wiring
/// pub(topic)    sink: maps vector elements onto named payload fields
enum class OpKind { sub, window, mean, gain, offset, kf, pub };

Result<OpKind> op_kind_from_string(const std::string& s);
const char* to_string(OpKind kind);

struct NodeOp {
  std::string id;
  OpKind op = OpKind::mean;
  Json params = Json::object();
};

struct ResourceCaps {
  std::int64_t ops_per_tick = 256;
  std::int64_t state_bytes = 65536;
};

/// A sandboxed dataflow definition: DAG of primitive operators plus declared
/// topic permissions and resource caps. This is the deployable artifact; the
/// interpreter in sandbox.hpp is the only thing that ever executes it.
struct NodeDef {
  std::vector<NodeOp> nodes;
  std::vector<std::pair<std::string, std::string>> edges;  // src -> dst
  std::vector<std::string> sub_permissions;
  std::vector<std::string> pub_permissions;
  ResourceCaps caps;

  Json to_json() const;
  static Result<NodeDef> from_json(const Json& j);

  /// Acyclicity, known ops, unique ids, permission coverage, positive caps,
  /// well-formed parameters. Returns the topological order.
  Result<std::vector<std::size_t>> validate() const;

  /// Static state footprint (window/kf state); checked against caps.
  std::int64_t state_bytes() const;

  const NodeOp* find(const std::string& id) const;
  std::vector<std::string> inputs_of(const std::string& id) const;
};

}  // namespace manta::codesynth
