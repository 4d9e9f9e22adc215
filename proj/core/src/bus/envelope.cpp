#include "manta/bus/envelope.hpp"

namespace manta::bus {

namespace {

std::string num(double v) { return Json(v).dump(); }

}  // namespace

std::string envelope_canonical(const Envelope& env) {
  std::string out = "{\"topic\":";
  out += Json(env.topic).dump();
  out += ",\"schema\":";
  out += Json(env.schema_id).dump();
  out += ",\"seq\":";
  out += std::to_string(env.seq.value_or(0));
  out += ",\"stamp\":";
  out += num(env.stamp.value_or(0.0));
  out += ",\"pub\":";
  out += Json(env.publisher_id).dump();
  out += ",\"payload\":";
  out += env.payload.dump();
  out += "}";
  return out;
}

std::string trace_line(std::uint64_t tick, const Envelope& env) {
  std::string out = "{\"tick\":";
  out += std::to_string(tick);
  out += ",\"topic\":";
  out += Json(env.topic).dump();
  out += ",\"schema\":";
  out += Json(env.schema_id).dump();
  out += ",\"seq\":";
  out += std::to_string(env.seq.value_or(0));
  out += ",\"stamp\":";
  out += num(env.stamp.value_or(0.0));
  out += ",\"pub\":";
  out += Json(env.publisher_id).dump();
  out += ",\"payload\":";
  out += env.payload.dump();
  out += "}";
  return out;
}

Result<std::pair<std::uint64_t, Envelope>> parse_trace_line(const std::string& line) {
  Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return make_error("bad_trace", "unparseable trace line");
  }
  for (const char* key : {"tick", "topic", "schema", "seq", "stamp", "pub", "payload"}) {
    if (!j.contains(key)) return make_error("bad_trace", std::string("trace line missing ") + key);
  }
  Envelope env;
  env.topic = j.at("topic").get<std::string>();
  env.schema_id = j.at("schema").get<std::string>();
  env.seq = j.at("seq").get<std::uint64_t>();
  env.stamp = j.at("stamp").get<double>();
  env.publisher_id = j.at("pub").get<std::string>();
  env.payload = j.at("payload");
  return std::make_pair(j.at("tick").get<std::uint64_t>(), std::move(env));
}

}  // namespace manta::bus
