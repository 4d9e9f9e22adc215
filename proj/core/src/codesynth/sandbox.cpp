#include "manta/codesynth/sandbox.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>

#include "manta/util/geom.hpp"

namespace manta::codesynth {

const char* to_string(SandboxViolation kind) {
  switch (kind) {
    case SandboxViolation::topic: return "topic";
    case SandboxViolation::op_budget: return "op_budget";
    case SandboxViolation::state_bytes: return "state_bytes";
    case SandboxViolation::malformed: return "malformed";
  }
  return "?";
}

namespace {

using Value = std::vector<double>;

Result<Eigen::MatrixXd> matrix_param(const Json& params, const char* key, int rows, int cols) {
  if (!params.contains(key)) return make_error("bad_nodedef", std::string("missing ") + key);
  const auto& m = params.at(key);
  if (!m.is_array() || static_cast<int>(m.size()) != rows) {
    return make_error("bad_nodedef", std::string("bad shape for ") + key);
  }
  Eigen::MatrixXd out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!m[static_cast<std::size_t>(r)].is_array() ||
        static_cast<int>(m[static_cast<std::size_t>(r)].size()) != cols) {
      return make_error("bad_nodedef", std::string("bad shape for ") + key);
    }
    for (int c = 0; c < cols; ++c) {
      out(r, c) = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return out;
}

}  // namespace

struct SandboxNode::KfState {
  Eigen::VectorXd x;
  Eigen::MatrixXd p;
  Eigen::MatrixXd f;
  Eigen::MatrixXd q;
  bool emit_cov_trace = false;
  std::vector<int> trace_indices;  // empty = full trace

  double cov_trace() const {
    if (trace_indices.empty()) return p.trace();
    double tr = 0.0;
    for (int i : trace_indices) tr += p(i, i);
    return tr;
  }

  struct InputWiring {
    std::string node;
    Eigen::MatrixXd h;
    Eigen::VectorXd r_diag;
    bool rotate_by_state_yaw = false;
    int yaw_index = 0;
    std::vector<int> angle_rows;
  };
  std::vector<InputWiring> inputs;

  void predict() {
    x = f * x;
    p = f * p * f.transpose() + q;
  }

  void update(const InputWiring& w, const Value& measurement) {
    Eigen::VectorXd z(static_cast<int>(measurement.size()));
    for (int i = 0; i < z.size(); ++i) z(i) = measurement[static_cast<std::size_t>(i)];
    if (w.rotate_by_state_yaw && z.size() >= 2) {
      const double yaw = x(w.yaw_index);
      const double c = std::cos(yaw), s = std::sin(yaw);
      const double zx = z(0), zy = z(1);
      z(0) = c * zx - s * zy;
      z(1) = s * zx + c * zy;
    }
    const int rows = std::min<int>(w.h.rows(), z.size());
    for (int r = 0; r < rows; ++r) {
      const Eigen::RowVectorXd h = w.h.row(r);
      double innov = z(r) - h * x;
      if (std::find(w.angle_rows.begin(), w.angle_rows.end(), r) != w.angle_rows.end()) {
        innov = wrap_angle(innov);
      }
      const double s_cov = (h * p * h.transpose())(0) + w.r_diag(r);
      const Eigen::VectorXd k = p * h.transpose() / s_cov;
      x += k * innov;
      p -= k * (h * p);
    }
  }
};

Result<std::unique_ptr<SandboxNode>> SandboxNode::instantiate(NodeDef def) {
  auto order = def.validate();
  if (!order.ok()) return order.error();
  if (def.state_bytes() > def.caps.state_bytes) {
    return make_error("sandbox_violation",
                      "state bytes " + std::to_string(def.state_bytes()) + " exceed cap");
  }
  auto node = std::unique_ptr<SandboxNode>(new SandboxNode());
  node->topo_order_ = order.value();
  node->state_.resize(def.nodes.size());

  for (std::size_t i = 0; i < def.nodes.size(); ++i) {
    const NodeOp& op = def.nodes[i];
    if (op.op == OpKind::sub) {
      node->sub_topics_.push_back(op.params.value("topic", ""));
    }
    if (op.op == OpKind::kf) {
      const int dim = static_cast<int>(op.params.value("state_dim", std::int64_t{0}));
      auto kf = std::make_shared<KfState>();
      auto f = matrix_param(op.params, "F", dim, dim);
      if (!f.ok()) return f.error();
      auto q = matrix_param(op.params, "Q", dim, dim);
      if (!q.ok()) return q.error();
      auto p0 = matrix_param(op.params, "P0", dim, dim);
      if (!p0.ok()) return p0.error();
      kf->f = f.value();
      kf->q = q.value();
      kf->p = p0.value();
      kf->x = Eigen::VectorXd::Zero(dim);
      if (op.params.contains("x0")) {
        const auto& x0 = op.params.at("x0");
        if (!x0.is_array() || static_cast<int>(x0.size()) != dim) {
          return make_error("bad_nodedef", "bad shape for x0");
        }
        for (int k = 0; k < dim; ++k) kf->x(k) = x0[static_cast<std::size_t>(k)].get<double>();
      }
      kf->emit_cov_trace = op.params.value("emit_cov_trace", false);
      for (const auto& ti : op.params.value("trace_indices", Json::array())) {
        const int t = ti.get<int>();
        if (t < 0 || t >= dim) return make_error("bad_nodedef", "trace index out of range");
        kf->trace_indices.push_back(t);
      }
      if (!op.params.contains("inputs") || !op.params.at("inputs").is_array()) {
        return make_error("bad_nodedef", "kf requires inputs wiring");
      }
      for (const auto& ij : op.params.at("inputs")) {
        KfState::InputWiring w;
        w.node = ij.value("node", "");
        const int rows = static_cast<int>(ij.value("rows", std::int64_t{1}));
        auto h = matrix_param(ij, "H", rows, dim);
        if (!h.ok()) return h.error();
        w.h = h.value();
        if (!ij.contains("R") || !ij.at("R").is_array() ||
            static_cast<int>(ij.at("R").size()) != rows) {
          return make_error("bad_nodedef", "kf input requires R diagonal of length rows");
        }
        w.r_diag = Eigen::VectorXd(rows);
        for (int r = 0; r < rows; ++r) {
          w.r_diag(r) = ij.at("R")[static_cast<std::size_t>(r)].get<double>();
        }
        w.rotate_by_state_yaw = ij.value("preprocess", "") == "rotate_by_state_yaw";
        w.yaw_index = static_cast<int>(ij.value("yaw_index", std::int64_t{0}));
        for (const auto& ar : ij.value("angle_rows", Json::array())) {
          w.angle_rows.push_back(ar.get<int>());
        }
        kf->inputs.push_back(std::move(w));
      }
      node->state_[i].kf = std::move(kf);
    }
  }
  node->def_ = std::move(def);
  return node;
}

std::variant<std::vector<bus::Envelope>, SandboxError> SandboxNode::process_tick(
    const std::vector<bus::Envelope>& inputs) {
  std::vector<bus::Envelope> outputs;
  std::int64_t ops_used = 0;
  auto budget = [&](std::int64_t n) {
    ops_used += n;
    return ops_used <= def_.caps.ops_per_tick;
  };

  // Values produced this tick, per node.
  std::map<std::string, std::vector<Value>> produced;

  for (const std::size_t idx : topo_order_) {
    const NodeOp& op = def_.nodes[idx];
    OpState& st = state_[idx];
    std::vector<Value> in_values;
    for (const auto& src : def_.inputs_of(op.id)) {
      const auto it = produced.find(src);
      if (it == produced.end()) continue;
      in_values.insert(in_values.end(), it->second.begin(), it->second.end());
    }
    std::vector<Value>& out_values = produced[op.id];

    switch (op.op) {
      case OpKind::sub: {
        const std::string topic = op.params.value("topic", "");
        // Permission enforced at validate(); re-checked here for defs run
        // without prior validation.
        if (std::find(def_.sub_permissions.begin(), def_.sub_permissions.end(), topic) ==
            def_.sub_permissions.end()) {
          return SandboxError{SandboxViolation::topic, "sub topic not permitted: " + topic};
        }
        std::vector<std::string> fields;
        for (const auto& f : op.params.value("fields", Json::array())) {
          fields.push_back(f.get<std::string>());
        }
        for (const auto& env : inputs) {
          if (env.topic != topic) continue;
          if (!budget(1)) {
            return SandboxError{SandboxViolation::op_budget, "op budget exhausted"};
          }
          Value v;
          bool ok = env.payload.is_object();
          for (const auto& f : fields) {
            if (!ok || !env.payload.contains(f) || !env.payload.at(f).is_number()) {
              ok = false;
              break;
            }
            v.push_back(env.payload.at(f).get<double>());
          }
          if (!ok) {
            return SandboxError{SandboxViolation::malformed,
                                "input payload missing numeric field on " + topic};
          }
          out_values.push_back(std::move(v));
        }
        break;
      }
      case OpKind::window: {
        const std::int64_t n = op.params.value("n", std::int64_t{1});
        for (const auto& v : in_values) {
          if (v.empty()) continue;
          if (!budget(1)) {
            return SandboxError{SandboxViolation::op_budget, "op budget exhausted"};
          }
          st.window.push_back(v.front());
          while (static_cast<std::int64_t>(st.window.size()) > n) {
            st.window.erase(st.window.begin());
          }
          out_values.push_back(st.window);
        }
        break;
      }
      case OpKind::mean: {
        for (const auto& v : in_values) {
          if (v.empty()) continue;
          if (!budget(1)) {
            return SandboxError{SandboxViolation::op_budget, "op budget exhausted"};
          }
          double acc = 0.0;
          for (double x : v) acc += x;
          out_values.push_back({acc / static_cast<double>(v.size())});
        }
        break;
      }
      case OpKind::gain: {
        const double k = op.params.value("k", 1.0);
        for (auto v : in_values) {
          if (!budget(1)) {
            return SandboxError{SandboxViolation::op_budget, "op budget exhausted"};
          }
          for (double& x : v) x *= k;
          out_values.push_back(std::move(v));
        }
        break;
      }
      case OpKind::offset: {
        const double b = op.params.value("b", 0.0);
        for (auto v : in_values) {
          if (!budget(1)) {
            return SandboxError{SandboxViolation::op_budget, "op budget exhausted"};
          }
          for (double& x : v) x += b;
          out_values.push_back(std::move(v));
        }
        break;
      }
      case OpKind::kf: {
        if (!budget(1)) {
          return SandboxError{SandboxViolation::op_budget, "op budget exhausted"};
        }
        KfState& kf = *st.kf;
        kf.predict();
        for (const auto& wiring : kf.inputs) {
          const auto it = produced.find(wiring.node);
          if (it == produced.end()) continue;
          for (const auto& z : it->second) {
            if (!budget(1)) {
              return SandboxError{SandboxViolation::op_budget, "op budget exhausted"};
            }
            kf.update(wiring, z);
          }
        }
        Value v(kf.x.data(), kf.x.data() + kf.x.size());
        if (kf.emit_cov_trace) v.push_back(kf.cov_trace());
        out_values.push_back(std::move(v));
        break;
      }
      case OpKind::pub: {
        const std::string topic = op.params.value("topic", "");
        if (std::find(def_.pub_permissions.begin(), def_.pub_permissions.end(), topic) ==
            def_.pub_permissions.end()) {
          return SandboxError{SandboxViolation::topic, "pub topic not permitted: " + topic};
        }
        std::vector<std::string> fields;
        for (const auto& f : op.params.value("fields", Json::array())) {
          fields.push_back(f.get<std::string>());
        }
        for (const auto& v : in_values) {
          if (!budget(1)) {
            return SandboxError{SandboxViolation::op_budget, "op budget exhausted"};
          }
          Json payload = Json::object();
          for (std::size_t i = 0; i < fields.size() && i < v.size(); ++i) {
            payload[fields[i]] = v[i];
          }
          bus::Envelope env;
          env.topic = topic;
          env.payload = std::move(payload);
          outputs.push_back(std::move(env));
        }
        break;
      }
    }
  }
  return outputs;
}

std::variant<std::vector<bus::Envelope>, SandboxError> sandbox_run(
    const NodeDef& def, const std::vector<std::vector<bus::Envelope>>& ticks,
    const ResourceCaps* cap_overrides) {
  NodeDef effective = def;
  if (cap_overrides) effective.caps = *cap_overrides;
  auto node = SandboxNode::instantiate(effective);
  if (!node.ok()) {
    const std::string& msg = node.error().message;
    SandboxViolation kind = SandboxViolation::malformed;
    if (msg.find("state bytes") != std::string::npos) kind = SandboxViolation::state_bytes;
    if (node.error().code == "permission") kind = SandboxViolation::topic;
    return SandboxError{kind, msg};
  }
  std::vector<bus::Envelope> all;
  for (const auto& tick_inputs : ticks) {
    auto result = node.value()->process_tick(tick_inputs);
    if (std::holds_alternative<SandboxError>(result)) {
      return std::get<SandboxError>(result);
    }
    auto& outs = std::get<std::vector<bus::Envelope>>(result);
    all.insert(all.end(), std::make_move_iterator(outs.begin()),
               std::make_move_iterator(outs.end()));
  }
  return all;
}

}  // namespace manta::codesynth
