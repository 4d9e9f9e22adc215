#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "manta/util/json.hpp"
#include "manta/util/result.hpp"

namespace manta::bus {

enum class FieldKind { boolean, integer, real, string, list, object };

const char* to_string(FieldKind kind);
Result<FieldKind> field_kind_from_string(const std::string& s);

/// One field requirement of a topic schema. `path` addresses into the payload
/// tree: "a" (top level), "a.b" (nested object), "a[].b" (field b of every
/// element of list a).
struct FieldSpec {
  std::string path;
  FieldKind kind = FieldKind::real;
  bool required = true;
  std::optional<double> min_value;
  std::optional<double> max_value;
  std::vector<std::string> enum_values;
};

struct TopicSchema {
  std::string schema_id;
  std::vector<FieldSpec> fields;
  /// Unknown top-level keys are rejected unless set. Strict by default so a
  /// reasoner cannot smuggle unchecked content past the safety parser.
  bool allow_extra_fields = false;

  Json to_json() const;
  static Result<TopicSchema> from_json(const Json& j);
};

class SchemaRegistry {
 public:
  Result<void> add(TopicSchema schema);
  bool contains(const std::string& schema_id) const;
  const TopicSchema* find(const std::string& schema_id) const;

  /// Error carries the offending field in the message.
  Result<void> validate(const std::string& schema_id, const Json& payload) const;
  static Result<void> validate_payload(const TopicSchema& schema, const Json& payload);

  Json to_json() const;  // sorted by schema_id
  std::string digest() const;
  std::size_t size() const { return schemas_.size(); }

 private:
  std::map<std::string, TopicSchema> schemas_;
};

}  // namespace manta::bus
