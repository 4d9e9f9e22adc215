#include "manta/bus/schema.hpp"

#include <algorithm>
#include <set>

#include "manta/util/digest.hpp"
#include "manta/util/text.hpp"

namespace manta::bus {

const char* to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::boolean: return "bool";
    case FieldKind::integer: return "int";
    case FieldKind::real: return "real";
    case FieldKind::string: return "string";
    case FieldKind::list: return "list";
    case FieldKind::object: return "object";
  }
  return "?";
}

Result<FieldKind> field_kind_from_string(const std::string& s) {
  if (s == "bool") return FieldKind::boolean;
  if (s == "int") return FieldKind::integer;
  if (s == "real") return FieldKind::real;
  if (s == "string") return FieldKind::string;
  if (s == "list") return FieldKind::list;
  if (s == "object") return FieldKind::object;
  return make_error("bad_field_kind", "unknown field kind: " + s);
}

Json TopicSchema::to_json() const {
  Json fields_json = Json::array();
  for (const auto& f : fields) {
    Json fj{{"path", f.path}, {"kind", to_string(f.kind)}, {"required", f.required}};
    if (f.min_value) fj["min"] = *f.min_value;
    if (f.max_value) fj["max"] = *f.max_value;
    if (!f.enum_values.empty()) fj["enum"] = f.enum_values;
    fields_json.push_back(std::move(fj));
  }
  return Json{{"schema_id", schema_id},
              {"fields", std::move(fields_json)},
              {"allow_extra_fields", allow_extra_fields}};
}

Result<TopicSchema> TopicSchema::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("schema_id")) {
    return make_error("bad_schema", "schema object requires schema_id");
  }
  TopicSchema s;
  s.schema_id = j.at("schema_id").get<std::string>();
  s.allow_extra_fields = j.value("allow_extra_fields", false);
  for (const auto& fj : j.value("fields", Json::array())) {
    FieldSpec f;
    f.path = fj.at("path").get<std::string>();
    auto kind = field_kind_from_string(fj.value("kind", "real"));
    if (!kind.ok()) return kind.error();
    f.kind = kind.value();
    f.required = fj.value("required", true);
    if (fj.contains("min")) f.min_value = fj.at("min").get<double>();
    if (fj.contains("max")) f.max_value = fj.at("max").get<double>();
    for (const auto& e : fj.value("enum", Json::array())) {
      f.enum_values.push_back(e.get<std::string>());
    }
    s.fields.push_back(std::move(f));
  }
  return s;
}

Result<void> SchemaRegistry::add(TopicSchema schema) {
  if (schema.schema_id.empty()) return make_error("bad_schema", "empty schema_id");
  if (schemas_.count(schema.schema_id)) {
    return make_error("duplicate_schema", "schema already registered: " + schema.schema_id);
  }
  for (const auto& f : schema.fields) {
    if (f.path.empty()) return make_error("bad_schema", "empty field path");
    if (f.min_value && f.max_value && *f.min_value > *f.max_value) {
      return make_error("bad_schema", "malformed range on field: " + f.path);
    }
  }
  schemas_.emplace(schema.schema_id, std::move(schema));
  return ok_result();
}

bool SchemaRegistry::contains(const std::string& schema_id) const {
  return schemas_.count(schema_id) > 0;
}

const TopicSchema* SchemaRegistry::find(const std::string& schema_id) const {
  auto it = schemas_.find(schema_id);
  return it == schemas_.end() ? nullptr : &it->second;
}

namespace {

bool kind_matches(FieldKind kind, const Json& v) {
  switch (kind) {
    case FieldKind::boolean: return v.is_boolean();
    case FieldKind::integer: return v.is_number_integer() || v.is_number_unsigned();
    case FieldKind::real: return v.is_number();
    case FieldKind::string: return v.is_string();
    case FieldKind::list: return v.is_array();
    case FieldKind::object: return v.is_object();
  }
  return false;
}

Result<void> check_leaf(const FieldSpec& spec, const Json& v, const std::string& where) {
  if (!kind_matches(spec.kind, v)) {
    return make_error("schema_mismatch",
                      "field " + where + ": expected " + std::string(to_string(spec.kind)));
  }
  if (v.is_number() && (spec.min_value || spec.max_value)) {
    const double d = v.get<double>();
    if ((spec.min_value && d < *spec.min_value) || (spec.max_value && d > *spec.max_value)) {
      return make_error("schema_mismatch", "field " + where + ": out of range");
    }
  }
  if (!spec.enum_values.empty()) {
    if (!v.is_string() ||
        std::find(spec.enum_values.begin(), spec.enum_values.end(), v.get<std::string>()) ==
            spec.enum_values.end()) {
      return make_error("schema_mismatch", "field " + where + ": not in enum");
    }
  }
  return ok_result();
}

Result<void> check_path(const FieldSpec& spec, const std::vector<std::string>& segments,
                        std::size_t idx, const Json& node, std::string where) {
  std::string seg = segments[idx];
  bool each_element = false;
  if (seg.size() >= 2 && seg.ends_with("[]")) {
    each_element = true;
    seg = seg.substr(0, seg.size() - 2);
  }
  if (!node.is_object()) {
    return make_error("schema_mismatch", "field " + where + seg + ": parent is not an object");
  }
  auto it = node.find(seg);
  if (it == node.end()) {
    if (!spec.required) return ok_result();
    return make_error("schema_mismatch", "missing field: " + where + seg);
  }
  where += seg;
  const bool last = idx + 1 == segments.size();
  if (each_element) {
    if (!it->is_array()) {
      return make_error("schema_mismatch", "field " + where + ": expected list");
    }
    std::size_t i = 0;
    for (const auto& elem : *it) {
      const std::string elem_where = where + "[" + std::to_string(i) + "]";
      if (last) {
        auto r = check_leaf(spec, elem, elem_where);
        if (!r.ok()) return r;
      } else {
        auto r = check_path(spec, segments, idx + 1, elem, elem_where + ".");
        if (!r.ok()) return r;
      }
      ++i;
    }
    return ok_result();
  }
  if (last) return check_leaf(spec, *it, where);
  return check_path(spec, segments, idx + 1, *it, where + ".");
}

}  // namespace

Result<void> SchemaRegistry::validate_payload(const TopicSchema& schema, const Json& payload) {
  if (!payload.is_object()) {
    return make_error("schema_mismatch", "payload must be an object");
  }
  if (!schema.allow_extra_fields) {
    std::set<std::string> allowed;
    for (const auto& f : schema.fields) {
      const auto segs = split(f.path, '.');
      std::string head = segs.front();
      if (head.size() >= 2 && head.ends_with("[]")) head = head.substr(0, head.size() - 2);
      allowed.insert(head);
    }
    for (const auto& [key, value] : payload.items()) {
      (void)value;
      if (!allowed.count(key)) {
        return make_error("schema_mismatch", "unexpected field: " + key);
      }
    }
  }
  for (const auto& f : schema.fields) {
    const auto segs = split(f.path, '.');
    auto r = check_path(f, segs, 0, payload, "");
    if (!r.ok()) return r;
  }
  return ok_result();
}

Result<void> SchemaRegistry::validate(const std::string& schema_id, const Json& payload) const {
  const TopicSchema* s = find(schema_id);
  if (!s) return make_error("unknown_schema", "schema not registered: " + schema_id);
  return validate_payload(*s, payload);
}

Json SchemaRegistry::to_json() const {
  Json out = Json::array();
  for (const auto& [id, schema] : schemas_) {
    (void)id;
    out.push_back(schema.to_json());
  }
  return out;
}

std::string SchemaRegistry::digest() const { return hex64(fnv1a64(to_json().dump())); }

}  // namespace manta::bus
