#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "manta/util/json.hpp"
#include "manta/util/result.hpp"

namespace manta::bus {

/// The unit of all inter-agent communication: a typed, timestamped,
/// sequence-numbered message on a named topic. seq and stamp are assigned by
/// the bus at publish time when left unset.
struct Envelope {
  std::string topic;
  std::string schema_id;
  std::optional<std::uint64_t> seq;
  std::optional<double> stamp;  // simulation seconds
  std::string publisher_id;
  Json payload;
};

/// Canonical single-line serialization (fixed key order); the unit hashed
/// into inbox digests and written to trace files.
std::string envelope_canonical(const Envelope& env);

std::string trace_line(std::uint64_t tick, const Envelope& env);
Result<std::pair<std::uint64_t, Envelope>> parse_trace_line(const std::string& line);

}  // namespace manta::bus
