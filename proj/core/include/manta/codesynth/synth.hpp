#pragma once

#include <optional>
#include <string>
#include <vector>

#include "manta/agent/backend.hpp"
#include "manta/codesynth/sandbox.hpp"

namespace manta::codesynth {

/// High-level requirement for a new runtime node, matched against the
/// built-in templates (or forwarded to a remote reasoner).
struct NodeRequirement {
  std::string kind;  // free text, e.g. "stateful averaging filter"
  std::vector<std::pair<std::string, std::string>> inputs;  // (topic, schema_id)
  std::pair<std::string, std::string> output;               // (topic, schema_id)
  std::map<std::string, double> params;                     // e.g. {"window": 10}

  Json to_json() const;
  static Result<NodeRequirement> from_json(const Json& j);
};

/// Template matching: averaging filter, dual-odometry KF, DVL+compass KF.
/// A remote backend may emit any NodeDef JSON, which must still validate.
Result<NodeDef> synthesize(const NodeRequirement& req,
                           agent::ReasonerBackend* reasoner = nullptr);

/// One generated test case: scripted input ticks plus an output predicate.
struct TestCase {
  std::string name;
  std::vector<std::vector<bus::Envelope>> ticks;
  enum class Check { final_value_near, outputs_match, final_vector_near, non_increasing };
  Check check = Check::final_value_near;
  std::string field;                  // payload field under test
  std::vector<std::string> fields;    // final_vector_near
  std::vector<double> expected;       // values (or final vector)
  double tolerance = 1e-9;
};

struct TestSuite {
  std::vector<TestCase> cases;  // >= 2 per suite
};

/// Kind-specific generated suite (the "simultaneously creates unit tests"
/// step). Deterministic.
Result<TestSuite> gen_tests(const NodeRequirement& req, const NodeDef& def);

struct CaseResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs a suite against a def in an isolated sandbox.
std::vector<CaseResult> run_suite(const NodeDef& def, const TestSuite& suite);

/// Builds envelope batches for scripted scalar inputs on one topic.
std::vector<std::vector<bus::Envelope>> scalar_ticks(const std::string& topic,
                                                     const std::string& field,
                                                     const std::vector<double>& values);

}  // namespace manta::codesynth
