#include "manta/codesynth/synth.hpp"

#include <algorithm>
#include <cmath>

#include "manta/util/text.hpp"

namespace manta::codesynth {

Json NodeRequirement::to_json() const {
  Json inputs_json = Json::array();
  for (const auto& [topic, schema] : inputs) {
    inputs_json.push_back(Json{{"topic", topic}, {"schema", schema}});
  }
  Json params_json = Json::object();
  for (const auto& [k, v] : params) params_json[k] = v;
  return Json{{"kind", kind},
              {"inputs", std::move(inputs_json)},
              {"output", Json{{"topic", output.first}, {"schema", output.second}}},
              {"params", std::move(params_json)}};
}

Result<NodeRequirement> NodeRequirement::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("inputs") || !j.contains("output")) {
    return make_error("bad_requirement", "requirement needs kind, inputs, output");
  }
  NodeRequirement req;
  req.kind = j.at("kind").get<std::string>();
  for (const auto& ij : j.at("inputs")) {
    req.inputs.emplace_back(ij.at("topic").get<std::string>(), ij.value("schema", ""));
  }
  if (req.inputs.empty()) return make_error("bad_requirement", "at least one input required");
  req.output = {j.at("output").at("topic").get<std::string>(),
                j.at("output").value("schema", "")};
  const Json params = j.value("params", Json::object());
  for (const auto& [k, v] : params.items()) {
    if (v.is_number()) req.params[k] = v.get<double>();
  }
  return req;
}

namespace {

Json identity_matrix(int n, double scale = 1.0) {
  Json rows = Json::array();
  for (int r = 0; r < n; ++r) {
    Json row = Json::array();
    for (int c = 0; c < n; ++c) row.push_back(r == c ? scale : 0.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

Json diag_matrix(const std::vector<double>& d) {
  const int n = static_cast<int>(d.size());
  Json rows = Json::array();
  for (int r = 0; r < n; ++r) {
    Json row = Json::array();
    for (int c = 0; c < n; ++c) row.push_back(r == c ? d[static_cast<std::size_t>(r)] : 0.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

double param_or(const NodeRequirement& req, const std::string& key, double fallback) {
  auto it = req.params.find(key);
  return it == req.params.end() ? fallback : it->second;
}

NodeDef averaging_template(const NodeRequirement& req) {
  const auto n = static_cast<std::int64_t>(param_or(req, "window", 10));
  NodeDef def;
  def.nodes = {
      {"in", OpKind::sub, Json{{"topic", req.inputs[0].first}, {"fields", Json::array({"value"})}}},
      {"win", OpKind::window, Json{{"n", n}}},
      {"avg", OpKind::mean, Json::object()},
      {"out", OpKind::pub, Json{{"topic", req.output.first}, {"fields", Json::array({"value"})}}},
  };
  def.edges = {{"in", "win"}, {"win", "avg"}, {"avg", "out"}};
  def.sub_permissions = {req.inputs[0].first};
  def.pub_permissions = {req.output.first};
  return def;
}

NodeDef dual_odom_template(const NodeRequirement& req) {
  const double r = param_or(req, "r", 2.5e-3);
  NodeDef def;
  Json kf_params{
      {"state_dim", 2},
      {"F", identity_matrix(2)},
      {"Q", diag_matrix({1e-6, 1e-6})},
      {"P0", diag_matrix({10.0, 10.0})},
      {"x0", Json::array({param_or(req, "x0", 0.0), param_or(req, "y0", 0.0)})},
      {"emit_cov_trace", true},
      {"inputs",
       Json::array({Json{{"node", "odom_a"},
                         {"rows", 2},
                         {"H", identity_matrix(2)},
                         {"R", Json::array({r, r})}},
                    Json{{"node", "odom_b"},
                         {"rows", 2},
                         {"H", identity_matrix(2)},
                         {"R", Json::array({r, r})}}})},
  };
  def.nodes = {
      {"odom_a", OpKind::sub,
       Json{{"topic", req.inputs[0].first}, {"fields", Json::array({"x", "y"})}}},
      {"odom_b", OpKind::sub,
       Json{{"topic", req.inputs[1].first}, {"fields", Json::array({"x", "y"})}}},
      {"fuse", OpKind::kf, std::move(kf_params)},
      {"out", OpKind::pub,
       Json{{"topic", req.output.first}, {"fields", Json::array({"x", "y", "cov_trace"})}}},
  };
  def.edges = {{"odom_a", "fuse"}, {"odom_b", "fuse"}, {"fuse", "out"}};
  def.sub_permissions = {req.inputs[0].first, req.inputs[1].first};
  def.pub_permissions = {req.output.first};
  return def;
}

/// State [x, y, yaw, vx, vy] (world-frame velocity): constant-velocity
/// dead-reckoning prediction; compass pins yaw, DVL body velocity is rotated
/// by the current yaw estimate into the world frame.
NodeDef dvl_compass_template(const NodeRequirement& req) {
  const double dt = param_or(req, "dt", 0.1);
  const double sigma_dvl = param_or(req, "sigma_dvl", 0.02);
  const double sigma_psi = param_or(req, "sigma_psi", 0.01);
  const double q_vel = param_or(req, "q_vel", 1e-6);
  const double q_psi = param_or(req, "q_psi", 1e-8);
  // Input 0 is the compass topic, input 1 the DVL topic (compass updates
  // first so the DVL rotation sees the corrected heading).
  const std::string compass_topic = req.inputs[0].first;
  const std::string dvl_topic = req.inputs.size() > 1 ? req.inputs[1].first : req.inputs[0].first;

  Json f = identity_matrix(5);
  f[0][3] = dt;
  f[1][4] = dt;
  Json kf_params{
      {"state_dim", 5},
      {"F", std::move(f)},
      {"Q", diag_matrix({0.0, 0.0, q_psi, q_vel, q_vel})},
      {"P0", diag_matrix({1e-6, 1e-6, 1.0, 1.0, 1.0})},
      {"x0", Json::array({param_or(req, "x0", 0.0), param_or(req, "y0", 0.0),
                          param_or(req, "psi0", 0.0), 0.0, 0.0})},
      {"emit_cov_trace", true},
      // Position is dead-reckoned (unobserved) and its covariance grows by
      // design; the emitted confidence tracks the observed yaw/velocity block.
      {"trace_indices", Json::array({2, 3, 4})},
      {"inputs",
       Json::array(
           {Json{{"node", "compass"},
                 {"rows", 1},
                 {"H", Json::array({Json::array({0.0, 0.0, 1.0, 0.0, 0.0})})},
                 {"R", Json::array({sigma_psi * sigma_psi})},
                 {"angle_rows", Json::array({0})}},
            Json{{"node", "dvl"},
                 {"rows", 2},
                 {"H", Json::array({Json::array({0.0, 0.0, 0.0, 1.0, 0.0}),
                                    Json::array({0.0, 0.0, 0.0, 0.0, 1.0})})},
                 {"R", Json::array({sigma_dvl * sigma_dvl, sigma_dvl * sigma_dvl})},
                 {"preprocess", "rotate_by_state_yaw"},
                 {"yaw_index", 2}}})},
  };
  NodeDef def;
  def.nodes = {
      {"compass", OpKind::sub,
       Json{{"topic", compass_topic}, {"fields", Json::array({"psi"})}}},
      {"dvl", OpKind::sub, Json{{"topic", dvl_topic}, {"fields", Json::array({"vx", "vy"})}}},
      {"fuse", OpKind::kf, std::move(kf_params)},
      {"out", OpKind::pub,
       Json{{"topic", req.output.first},
            {"fields", Json::array({"x", "y", "psi", "vx", "vy", "cov_trace"})}}},
  };
  def.edges = {{"compass", "fuse"}, {"dvl", "fuse"}, {"fuse", "out"}};
  def.sub_permissions = {compass_topic, dvl_topic};
  def.pub_permissions = {req.output.first};
  return def;
}

enum class TemplateKind { averaging, dual_odom, dvl_compass, none };

TemplateKind match_template(const std::string& kind_text, std::size_t input_count) {
  const std::string k = to_lower(kind_text);
  const bool kalman = k.find("kalman") != std::string::npos || contains_word(k, "kf");
  if (kalman) {
    if (k.find("dvl") != std::string::npos || k.find("compass") != std::string::npos) {
      return TemplateKind::dvl_compass;
    }
    if (k.find("odom") != std::string::npos && input_count >= 2) {
      return TemplateKind::dual_odom;
    }
    return TemplateKind::none;
  }
  if (k.find("averag") != std::string::npos ||
      (k.find("mean") != std::string::npos && k.find("filter") != std::string::npos) ||
      (k.find("noise") != std::string::npos && k.find("filter") != std::string::npos)) {
    return TemplateKind::averaging;
  }
  return TemplateKind::none;
}

}  // namespace

Result<NodeDef> synthesize(const NodeRequirement& req, agent::ReasonerBackend* reasoner) {
  if (req.inputs.empty()) return make_error("bad_requirement", "at least one input required");
  switch (match_template(req.kind, req.inputs.size())) {
    case TemplateKind::averaging: {
      NodeDef def = averaging_template(req);
      auto ok = def.validate();
      if (!ok.ok()) return ok.error();
      return def;
    }
    case TemplateKind::dual_odom: {
      NodeDef def = dual_odom_template(req);
      auto ok = def.validate();
      if (!ok.ok()) return ok.error();
      return def;
    }
    case TemplateKind::dvl_compass: {
      NodeDef def = dvl_compass_template(req);
      auto ok = def.validate();
      if (!ok.ok()) return ok.error();
      return def;
    }
    case TemplateKind::none:
      break;
  }
  if (reasoner) {
    agent::ReasonerQuery query;
    query.system_text =
        "You are a code synthesis node. Emit a dataflow NodeDef JSON for the requirement.";
    query.user_content = req.to_json().dump();
    auto reply = reasoner->infer(query);
    if (reply.ok() && reply.value().structured) {
      auto def = NodeDef::from_json(*reply.value().structured);
      if (def.ok()) {
        auto valid = def.value().validate();
        if (valid.ok()) return def;
      }
    }
  }
  return make_error("unknown_kind", "no template matches requirement: " + req.kind);
}

std::vector<std::vector<bus::Envelope>> scalar_ticks(const std::string& topic,
                                                     const std::string& field,
                                                     const std::vector<double>& values) {
  std::vector<std::vector<bus::Envelope>> ticks;
  for (double v : values) {
    bus::Envelope env;
    env.topic = topic;
    env.payload = Json{{field, v}};
    ticks.push_back({env});
  }
  return ticks;
}

Result<TestSuite> gen_tests(const NodeRequirement& req, const NodeDef& def) {
  auto valid = def.validate();
  if (!valid.ok()) return valid.error();
  TestSuite suite;
  switch (match_template(req.kind, req.inputs.size())) {
    case TemplateKind::averaging: {
      const int n = static_cast<int>(param_or(req, "window", 10));
      const std::string in_topic = req.inputs[0].first;
      {
        TestCase c;
        c.name = "constant_input_converges";
        c.ticks = scalar_ticks(in_topic, "value", std::vector<double>(n + 5, 7.0));
        c.check = TestCase::Check::final_value_near;
        c.field = "value";
        c.expected = {7.0};
        c.tolerance = 1e-9;
        suite.cases.push_back(std::move(c));
      }
      {
        TestCase c;
        c.name = "unit_step_fills_window";
        std::vector<double> values(static_cast<std::size_t>(n), 0.0);
        std::vector<double> expected(static_cast<std::size_t>(n), 0.0);
        for (int k = 1; k < n; ++k) {
          values.push_back(1.0);
          expected.push_back(static_cast<double>(k) / n);  // k-th post-step output
        }
        c.ticks = scalar_ticks(in_topic, "value", values);
        c.check = TestCase::Check::outputs_match;
        c.field = "value";
        c.expected = std::move(expected);
        c.tolerance = 1e-9;
        suite.cases.push_back(std::move(c));
      }
      return suite;
    }
    case TemplateKind::dual_odom: {
      const std::string topic_a = req.inputs[0].first;
      const std::string topic_b = req.inputs[1].first;
      auto both = [&](double x, double y, int ticks) {
        std::vector<std::vector<bus::Envelope>> out;
        for (int k = 0; k < ticks; ++k) {
          bus::Envelope a, b;
          a.topic = topic_a;
          a.payload = Json{{"x", x}, {"y", y}};
          b.topic = topic_b;
          b.payload = Json{{"x", x}, {"y", y}};
          out.push_back({a, b});
        }
        return out;
      };
      {
        TestCase c;
        c.name = "noiseless_consistent_measurements";
        c.ticks = both(1.2, -0.7, 50);
        c.check = TestCase::Check::final_vector_near;
        c.fields = {"x", "y"};
        c.expected = {1.2, -0.7};
        c.tolerance = 0.05;
        suite.cases.push_back(std::move(c));
      }
      {
        TestCase c;
        c.name = "covariance_trace_non_increasing";
        c.ticks = both(0.5, 0.5, 30);
        c.check = TestCase::Check::non_increasing;
        c.field = "cov_trace";
        c.tolerance = 1e-9;
        suite.cases.push_back(std::move(c));
      }
      return suite;
    }
    case TemplateKind::dvl_compass: {
      const double dt = param_or(req, "dt", 0.1);
      const std::string compass_topic = req.inputs[0].first;
      const std::string dvl_topic =
          req.inputs.size() > 1 ? req.inputs[1].first : req.inputs[0].first;
      auto frames = [&](double yaw, double vx_world, double vy_world, int ticks) {
        // Exact measurements for a constant-velocity, fixed-heading run.
        const double c = std::cos(yaw), s = std::sin(yaw);
        std::vector<std::vector<bus::Envelope>> out;
        for (int k = 0; k < ticks; ++k) {
          bus::Envelope compass, dvl;
          compass.topic = compass_topic;
          compass.payload = Json{{"psi", yaw}};
          dvl.topic = dvl_topic;
          dvl.payload = Json{{"vx", c * vx_world + s * vy_world},
                             {"vy", -s * vx_world + c * vy_world}};
          out.push_back({compass, dvl});
        }
        return out;
      };
      {
        TestCase c;
        c.name = "noiseless_consistent_measurements";
        const int ticks = 50;
        const double yaw = 0.3, vx = 0.2, vy = 0.1;
        c.ticks = frames(yaw, vx, vy, ticks);
        c.check = TestCase::Check::final_vector_near;
        c.fields = {"x", "y"};
        c.expected = {vx * dt * ticks, vy * dt * ticks};
        c.tolerance = 0.05;
        suite.cases.push_back(std::move(c));
      }
      {
        TestCase c;
        c.name = "covariance_trace_non_increasing";
        c.ticks = frames(0.3, 0.0, 0.0, 15);
        c.check = TestCase::Check::non_increasing;
        c.field = "cov_trace";
        c.tolerance = 1e-9;
        suite.cases.push_back(std::move(c));
      }
      return suite;
    }
    case TemplateKind::none:
      break;
  }
  return make_error("unknown_kind", "no generated suite for requirement: " + req.kind);
}

std::vector<CaseResult> run_suite(const NodeDef& def, const TestSuite& suite) {
  std::vector<CaseResult> results;
  for (const auto& test : suite.cases) {
    CaseResult r;
    r.name = test.name;
    auto run = sandbox_run(def, test.ticks);
    if (std::holds_alternative<SandboxError>(run)) {
      r.passed = false;
      r.detail = std::string("sandbox violation: ") +
                 to_string(std::get<SandboxError>(run).kind);
      results.push_back(std::move(r));
      continue;
    }
    const auto& outputs = std::get<std::vector<bus::Envelope>>(run);
    auto field_series = [&](const std::string& field) {
      std::vector<double> series;
      for (const auto& env : outputs) {
        if (env.payload.is_object() && env.payload.contains(field) &&
            env.payload.at(field).is_number()) {
          series.push_back(env.payload.at(field).get<double>());
        }
      }
      return series;
    };
    switch (test.check) {
      case TestCase::Check::final_value_near: {
        const auto series = field_series(test.field);
        r.passed = !series.empty() && !test.expected.empty() &&
                   std::abs(series.back() - test.expected[0]) <= test.tolerance;
        if (!r.passed) r.detail = "final value out of tolerance";
        break;
      }
      case TestCase::Check::outputs_match: {
        const auto series = field_series(test.field);
        r.passed = series.size() == test.expected.size();
        for (std::size_t i = 0; r.passed && i < series.size(); ++i) {
          if (std::abs(series[i] - test.expected[i]) > test.tolerance) r.passed = false;
        }
        if (!r.passed) r.detail = "output sequence mismatch";
        break;
      }
      case TestCase::Check::final_vector_near: {
        r.passed = !outputs.empty();
        if (r.passed) {
          double err2 = 0.0;
          const auto& last = outputs.back().payload;
          for (std::size_t i = 0; i < test.fields.size(); ++i) {
            if (!last.contains(test.fields[i])) {
              r.passed = false;
              break;
            }
            const double d = last.at(test.fields[i]).get<double>() - test.expected[i];
            err2 += d * d;
          }
          if (r.passed) r.passed = std::sqrt(err2) <= test.tolerance;
        }
        if (!r.passed) r.detail = "final state error above bound";
        break;
      }
      case TestCase::Check::non_increasing: {
        const auto series = field_series(test.field);
        r.passed = series.size() >= 2;
        for (std::size_t i = 1; r.passed && i < series.size(); ++i) {
          if (series[i] > series[i - 1] + test.tolerance) r.passed = false;
        }
        if (!r.passed) r.detail = "sequence increased";
        break;
      }
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace manta::codesynth
