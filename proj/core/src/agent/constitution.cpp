#include "manta/agent/constitution.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "manta/util/digest.hpp"
#include "manta/util/text.hpp"

namespace manta::agent {

std::string Constitution::render() const {
  std::string out = "# DIRECTIVE\n" + core_directive + "\n";
  if (!domain_knowledge.empty()) {
    out += "# DOMAIN KNOWLEDGE\n";
    for (const auto& fact : domain_knowledge) out += "- " + fact + "\n";
  }
  if (!reasoning_guidelines.empty()) {
    out += "# REASONING GUIDELINES\n";
    for (const auto& rule : reasoning_guidelines) out += "- " + rule + "\n";
  }
  if (!constraint_clauses.empty()) {
    out += "# CONSTRAINTS\n";
    for (const auto& clause : constraint_clauses) out += "- " + clause + "\n";
  }
  out += "# OUTPUT FORMAT\n";
  out += "Respond with a single JSON object matching schema '" + output_schema_id + "'.\n";
  return out;
}

std::string Constitution::digest() const { return hex64(fnv1a64(render())); }

Constitution Constitution::with_clause(const std::string& clause) const {
  Constitution next = *this;
  if (!next.has_clause(clause)) next.constraint_clauses.push_back(clause);
  return next;
}

bool Constitution::has_clause(const std::string& clause) const {
  return std::find(constraint_clauses.begin(), constraint_clauses.end(), clause) !=
         constraint_clauses.end();
}

std::string Constitution::to_text() const {
  std::string out;
  out += "directive: " + core_directive + "\n";
  out += "output_schema: " + output_schema_id + "\n";
  out += "knowledge:\n";
  for (const auto& fact : domain_knowledge) out += "- " + fact + "\n";
  out += "guidelines:\n";
  for (const auto& rule : reasoning_guidelines) out += "- " + rule + "\n";
  out += "constraints:\n";
  for (const auto& clause : constraint_clauses) out += "- " + clause + "\n";
  return out;
}

Result<Constitution> Constitution::parse_text(const std::string& text) {
  Constitution c;
  std::vector<std::string>* current_list = nullptr;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.starts_with("- ")) {
      if (!current_list) {
        return make_error("bad_constitution",
                          "list item outside a list section at line " + std::to_string(lineno));
      }
      current_list->push_back(trim(t.substr(2)));
      continue;
    }
    const auto colon = t.find(':');
    if (colon == std::string::npos) {
      return make_error("bad_constitution", "expected 'key: value' at line " +
                                                std::to_string(lineno));
    }
    const std::string key = trim(t.substr(0, colon));
    const std::string value = trim(t.substr(colon + 1));
    if (key == "directive") {
      c.core_directive = value;
      current_list = nullptr;
    } else if (key == "output_schema") {
      c.output_schema_id = value;
      current_list = nullptr;
    } else if (key == "knowledge") {
      current_list = &c.domain_knowledge;
    } else if (key == "guidelines") {
      current_list = &c.reasoning_guidelines;
    } else if (key == "constraints") {
      current_list = &c.constraint_clauses;
    } else {
      return make_error("bad_constitution", "unknown section: " + key);
    }
  }
  if (c.core_directive.empty()) {
    return make_error("bad_constitution", "directive is required");
  }
  return c;
}

Result<Constitution> Constitution::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) return make_error("io_error", "cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str());
}

}  // namespace manta::agent
