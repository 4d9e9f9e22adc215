#pragma once

#include <string>
#include <vector>

#include "manta/agent/backend.hpp"
#include "manta/agent/constitution.hpp"
#include "manta/sim/world.hpp"
#include "manta/util/result.hpp"

namespace manta::tuning {

/// What the Teacher wants the Student to report: presence and location of one
/// target class, nothing else.
struct TargetSpec {
  std::string target_class;  // e.g. "red ball"
};

struct EpisodeRecord {
  int episode = 1;  // from 1
  std::string response;
  std::size_t word_count = 0;
  double relevance_pct = 0.0;
  std::string constitution_digest;
};

/// Ground-truth scene the Teacher judges against (and the Student observes,
/// via zero-noise detections).
using Scene = std::vector<sim::Detection>;

/// Constraint clauses the Teacher appends, in priority order.
inline constexpr const char* kIncludeLocationClause = "include bearing and range";
inline constexpr const char* kOneSentenceClause = "respond in one sentence";
std::string report_only_clause(const std::string& target_class);

/// The Student's starting scaffold: verbose scene describer.
agent::Constitution student_constitution(const std::string& output_schema_id = "scene_text");

/// Deterministic template rendering of a description under the constitution's
/// constraint clauses (the "model" behind the template student backend).
std::string render_student_description(const Scene& detections,
                                       const agent::Constitution& constitution);

/// Student step through a reasoner backend; detections travel in the query.
Result<std::string> student_describe(const Scene& detections,
                                     const agent::Constitution& constitution,
                                     agent::ReasonerBackend& reasoner);

/// Template rule for the "student" role: reads detections from the inbox and
/// the constraint clauses from its own rendered system text.
agent::TemplateBackend::RuleFactory make_student_rule();

struct ScoreBreakdown {
  std::size_t word_count = 0;
  double relevance_pct = 0.0;  // 100 * (correct required fields / required) * (on-target/total sentences)
  int required_fields = 0;
  int correct_fields = 0;
  int on_target_sentences = 0;
  int total_sentences = 0;
  bool location_reported = false;
  bool location_correct = false;
  bool presence_correct = false;
};

/// Relevance = 100 * (required fields correctly reported / required fields)
///           * (on-target sentences / total sentences).
/// The Teacher judges against ground truth (needed for location correctness).
ScoreBreakdown score(const std::string& response, const TargetSpec& target, const Scene& truth);

/// Appends the highest-priority unmet constraint clause:
///   1. "report only <class>"      when off-target sentences exist
///   2. "include bearing and range" when the target is present but its
///       location is missing or wrong
///   3. "respond in one sentence"  when word_count > 12
/// Unchanged iff relevance == 100 and word_count <= 12 (the fixed point).
agent::Constitution teacher_feedback(const EpisodeRecord& record, const TargetSpec& target,
                                     const Scene& truth,
                                     const agent::Constitution& current);

/// describe -> score -> feedback -> retune, until fixed point or max
/// episodes. Records every episode.
Result<std::vector<EpisodeRecord>> run_tuning(const Scene& scene, const TargetSpec& target,
                                              int max_episodes,
                                              agent::ReasonerBackend& reasoner,
                                              agent::Constitution start);

/// The cluttered standard scene (six classed detections) used across trials.
Scene standard_cluttered_scene();

/// Deterministic scene variants for the acceptance matrix; index 0 is the
/// standard scene. Scenes 0-3 contain every target class; scene 4 drops
/// "red ball" to exercise the absent-target path.
Scene scene_variant(int index);

}  // namespace manta::tuning
