#include "manta/codesynth/nodedef.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace manta::codesynth {

Result<OpKind> op_kind_from_string(const std::string& s) {
  if (s == "sub") return OpKind::sub;
  if (s == "window") return OpKind::window;
  if (s == "mean") return OpKind::mean;
  if (s == "gain") return OpKind::gain;
  if (s == "offset") return OpKind::offset;
  if (s == "kf") return OpKind::kf;
  if (s == "pub") return OpKind::pub;
  return make_error("bad_op", "unknown operator: " + s);
}

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::sub: return "sub";
    case OpKind::window: return "window";
    case OpKind::mean: return "mean";
    case OpKind::gain: return "gain";
    case OpKind::offset: return "offset";
    case OpKind::kf: return "kf";
    case OpKind::pub: return "pub";
  }
  return "?";
}

Json NodeDef::to_json() const {
  Json nodes_json = Json::array();
  for (const auto& n : nodes) {
    nodes_json.push_back(Json{{"id", n.id}, {"op", to_string(n.op)}, {"params", n.params}});
  }
  Json edges_json = Json::array();
  for (const auto& [src, dst] : edges) edges_json.push_back(Json::array({src, dst}));
  return Json{{"nodes", std::move(nodes_json)},
              {"edges", std::move(edges_json)},
              {"permissions", Json{{"sub", sub_permissions}, {"pub", pub_permissions}}},
              {"caps", Json{{"ops", caps.ops_per_tick}, {"state_bytes", caps.state_bytes}}}};
}

Result<NodeDef> NodeDef::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("nodes")) {
    return make_error("bad_nodedef", "missing nodes");
  }
  NodeDef def;
  for (const auto& nj : j.at("nodes")) {
    NodeOp n;
    n.id = nj.at("id").get<std::string>();
    auto kind = op_kind_from_string(nj.at("op").get<std::string>());
    if (!kind.ok()) return kind.error();
    n.op = kind.value();
    n.params = nj.value("params", Json::object());
    def.nodes.push_back(std::move(n));
  }
  for (const auto& ej : j.value("edges", Json::array())) {
    if (!ej.is_array() || ej.size() != 2) return make_error("bad_nodedef", "malformed edge");
    def.edges.emplace_back(ej[0].get<std::string>(), ej[1].get<std::string>());
  }
  const Json perms = j.value("permissions", Json::object());
  for (const auto& t : perms.value("sub", Json::array())) {
    def.sub_permissions.push_back(t.get<std::string>());
  }
  for (const auto& t : perms.value("pub", Json::array())) {
    def.pub_permissions.push_back(t.get<std::string>());
  }
  const Json caps = j.value("caps", Json::object());
  def.caps.ops_per_tick = caps.value("ops", std::int64_t{256});
  def.caps.state_bytes = caps.value("state_bytes", std::int64_t{65536});
  return def;
}

const NodeOp* NodeDef::find(const std::string& id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

std::vector<std::string> NodeDef::inputs_of(const std::string& id) const {
  std::vector<std::string> in;
  for (const auto& [src, dst] : edges) {
    if (dst == id) in.push_back(src);
  }
  return in;
}

std::int64_t NodeDef::state_bytes() const {
  std::int64_t total = 0;
  for (const auto& n : nodes) {
    if (n.op == OpKind::window) {
      total += 8 * n.params.value("n", std::int64_t{0});
    } else if (n.op == OpKind::kf) {
      const std::int64_t d = n.params.value("state_dim", std::int64_t{0});
      total += 8 * (d + d * d);
    }
  }
  return total;
}

Result<std::vector<std::size_t>> NodeDef::validate() const {
  if (nodes.empty()) return make_error("bad_nodedef", "no operators");
  if (caps.ops_per_tick <= 0 || caps.state_bytes <= 0) {
    return make_error("bad_nodedef", "caps must be positive");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id.empty()) return make_error("bad_nodedef", "empty node id");
    if (!index.emplace(nodes[i].id, i).second) {
      return make_error("bad_nodedef", "duplicate node id: " + nodes[i].id);
    }
  }
  const std::set<std::string> subs(sub_permissions.begin(), sub_permissions.end());
  const std::set<std::string> pubs(pub_permissions.begin(), pub_permissions.end());
  for (const auto& n : nodes) {
    if (n.op == OpKind::sub) {
      const std::string topic = n.params.value("topic", "");
      if (!subs.count(topic)) {
        return make_error("permission", "sub topic not in permissions: " + topic);
      }
    }
    if (n.op == OpKind::pub) {
      const std::string topic = n.params.value("topic", "");
      if (!pubs.count(topic)) {
        return make_error("permission", "pub topic not in permissions: " + topic);
      }
    }
    if (n.op == OpKind::window && n.params.value("n", std::int64_t{0}) < 1) {
      return make_error("bad_nodedef", "window requires n >= 1");
    }
    if (n.op == OpKind::kf && n.params.value("state_dim", std::int64_t{0}) < 1) {
      return make_error("bad_nodedef", "kf requires state_dim >= 1");
    }
  }
  for (const auto& [src, dst] : edges) {
    if (!index.count(src) || !index.count(dst)) {
      return make_error("bad_nodedef", "edge references unknown node");
    }
  }
  // Kahn topological sort; leftover nodes mean a cycle.
  std::map<std::string, int> indegree;
  for (const auto& n : nodes) indegree[n.id] = 0;
  for (const auto& [src, dst] : edges) {
    (void)src;
    indegree[dst] += 1;
  }
  std::vector<std::string> ready;
  for (const auto& n : nodes) {
    if (indegree[n.id] == 0) ready.push_back(n.id);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end());  // deterministic order
    const std::string id = ready.front();
    ready.erase(ready.begin());
    order.push_back(index.at(id));
    for (const auto& [src, dst] : edges) {
      if (src != id) continue;
      if (--indegree[dst] == 0) ready.push_back(dst);
    }
  }
  if (order.size() != nodes.size()) return make_error("bad_nodedef", "graph has a cycle");
  return order;
}

}  // namespace manta::codesynth
