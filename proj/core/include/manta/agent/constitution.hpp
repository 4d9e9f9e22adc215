#pragma once

#include <string>
#include <vector>

#include "manta/util/result.hpp"

namespace manta::agent {

/// An agent's behavioural scaffold. Rendering is deterministic: directive,
/// domain knowledge, reasoning guidelines, constraint clauses, output-format
/// block, in that order.
struct Constitution {
  std::string core_directive;
  std::vector<std::string> domain_knowledge;
  std::vector<std::string> reasoning_guidelines;
  std::string output_schema_id;
  std::vector<std::string> constraint_clauses;  // appended by tuning

  std::string render() const;
  std::string digest() const;

  bool operator==(const Constitution&) const = default;

  /// Appends a clause unless an identical one is already present.
  Constitution with_clause(const std::string& clause) const;

  bool has_clause(const std::string& clause) const;

  /// Structured-text file format: "key: value" headers with "- " items for
  /// the list sections (knowledge / guidelines / constraints).
  std::string to_text() const;
  static Result<Constitution> parse_text(const std::string& text);
  static Result<Constitution> load_file(const std::string& path);
};

}  // namespace manta::agent
