#include "manta/agent/validate.hpp"

#include <cmath>

namespace manta::agent {

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::syntax: return "syntax";
    case ViolationKind::schema: return "schema";
    case ViolationKind::limit: return "limit";
  }
  return "?";
}

namespace {

constexpr int kMaxNestingDepth = 64;

/// Bracket-depth pre-check so adversarial inputs cannot drive deep recursion
/// through the parser or the limit walk.
int max_bracket_depth(const std::string& text) {
  int depth = 0, max_depth = 0;
  bool in_string = false, escaped = false;
  for (char c : text) {
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
      max_depth = std::max(max_depth, depth);
    } else if (c == '}' || c == ']') {
      --depth;
    }
  }
  return max_depth;
}

bool number_field(const Json& obj, const char* key, double& out) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) return false;
  out = it->get<double>();
  return true;
}

std::optional<Violation> walk(const Json& node, const SafetyLimits& limits, int depth) {
  if (depth > kMaxNestingDepth) {
    return Violation{ViolationKind::schema, "nesting depth exceeded"};
  }
  if (node.is_object()) {
    // Speed: per-component and vector-norm bound on vx/vy/vz, plus any
    // literal "speed" field.
    double vx = 0, vy = 0, vz = 0;
    const bool has_vx = number_field(node, "vx", vx);
    const bool has_vy = number_field(node, "vy", vy);
    const bool has_vz = number_field(node, "vz", vz);
    if (has_vx || has_vy || has_vz) {
      const double norm = std::sqrt(vx * vx + vy * vy + vz * vz);
      if (norm > limits.max_speed) {
        return Violation{ViolationKind::limit, "speed"};
      }
    }
    double speed = 0;
    if (number_field(node, "speed", speed) && std::abs(speed) > limits.max_speed) {
      return Violation{ViolationKind::limit, "speed"};
    }
    double depth_m = 0;
    if (number_field(node, "depth", depth_m) &&
        (depth_m < 0.0 || depth_m > limits.max_depth)) {
      return Violation{ViolationKind::limit, "depth"};
    }
    // Position: an object carrying both x and y (z optional) must sit inside
    // the closed workspace box; z additionally respects the depth bound.
    double x = 0, y = 0;
    if (number_field(node, "x", x) && number_field(node, "y", y)) {
      double z = 0;
      const bool has_z = number_field(node, "z", z);
      const Vec3 p{x, y, has_z ? z : limits.workspace.lo.z};
      if (!limits.workspace.contains(p)) {
        return Violation{ViolationKind::limit, "workspace"};
      }
      if (has_z && (z < 0.0 || z > limits.max_depth)) {
        return Violation{ViolationKind::limit, "depth"};
      }
    }
    for (const auto& [key, child] : node.items()) {
      (void)key;
      if (auto v = walk(child, limits, depth + 1)) return v;
    }
  } else if (node.is_array()) {
    for (const auto& child : node) {
      if (auto v = walk(child, limits, depth + 1)) return v;
    }
  } else if (node.is_number()) {
    const double d = node.get<double>();
    if (std::isnan(d) || std::isinf(d)) {
      return Violation{ViolationKind::schema, "non-finite number"};
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Violation> check_limits(const Json& payload, const SafetyLimits& limits) {
  return walk(payload, limits, 0);
}

std::optional<Violation> validate_payload(const Json& payload, const bus::TopicSchema& schema,
                                          const SafetyLimits& limits) {
  auto r = bus::SchemaRegistry::validate_payload(schema, payload);
  if (!r.ok()) return Violation{ViolationKind::schema, r.error().message};
  return check_limits(payload, limits);
}

std::optional<Violation> validate_text(const std::string& reply_text,
                                       const bus::TopicSchema& schema,
                                       const SafetyLimits& limits, Json* parsed_out) {
  if (max_bracket_depth(reply_text) > kMaxNestingDepth) {
    return Violation{ViolationKind::syntax, "nesting too deep"};
  }
  Json parsed;
  try {
    parsed = Json::parse(reply_text);
  } catch (const Json::parse_error& e) {
    return Violation{ViolationKind::syntax, "parse error at byte " + std::to_string(e.byte)};
  } catch (const std::exception& e) {
    return Violation{ViolationKind::syntax, e.what()};
  }
  if (auto v = validate_payload(parsed, schema, limits)) return v;
  if (parsed_out) *parsed_out = std::move(parsed);
  return std::nullopt;
}

}  // namespace manta::agent
