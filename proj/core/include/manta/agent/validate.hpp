#pragma once

#include <optional>
#include <string>

#include "manta/bus/schema.hpp"
#include "manta/util/geom.hpp"
#include "manta/util/json.hpp"

namespace manta::agent {

struct SafetyLimits {
  double max_speed = 1.0;  // m/s
  double max_depth = 2.5;  // m
  AABox workspace{{-10.0, -10.0, 0.0}, {10.0, 10.0, 2.5}};
};

/// Every violation is exactly one of these three kinds.
enum class ViolationKind { syntax, schema, limit };

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

/// pass == nullopt. The reactive backstop: parses, checks the topic schema,
/// then walks the payload for kinematic fields (speed components, depth,
/// x/y/z positions) against the operational limits. Boundary-inclusive.
/// Total over arbitrary input bytes; never throws.
std::optional<Violation> validate_text(const std::string& reply_text,
                                       const bus::TopicSchema& schema,
                                       const SafetyLimits& limits, Json* parsed_out = nullptr);

std::optional<Violation> validate_payload(const Json& payload, const bus::TopicSchema& schema,
                                          const SafetyLimits& limits);

/// The limit-walk alone (schema assumed already checked).
std::optional<Violation> check_limits(const Json& payload, const SafetyLimits& limits);

}  // namespace manta::agent
