#include "manta/tuning/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "manta/util/text.hpp"

namespace manta::tuning {

std::string report_only_clause(const std::string& target_class) {
  return "report only " + target_class;
}

agent::Constitution student_constitution(const std::string& output_schema_id) {
  agent::Constitution c;
  c.core_directive = "You are a perception and scene reasoning node.";
  c.domain_knowledge = {"detections arrive as class, bearing (rad) and range (m) tuples"};
  c.reasoning_guidelines = {"describe what the camera sees"};
  c.output_schema_id = output_schema_id;
  return c;
}

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string direction_word(double bearing) {
  if (bearing > 0.35) return "to port";
  if (bearing < -0.35) return "to starboard";
  return "ahead";
}

struct Constraints {
  std::string report_only;  // target class, empty = unconstrained
  bool include_location = false;
  bool one_sentence = false;
};

Constraints constraints_of(const agent::Constitution& c) {
  Constraints out;
  for (const auto& clause : c.constraint_clauses) {
    if (clause.starts_with("report only ")) out.report_only = clause.substr(12);
    if (clause == kIncludeLocationClause) out.include_location = true;
    if (clause == kOneSentenceClause) out.one_sentence = true;
  }
  return out;
}

/// Parse the CONSTRAINTS block back out of a rendered system text (what the
/// template student "reads" from its own prompt).
Constraints constraints_of_system_text(const std::string& system_text) {
  agent::Constitution c;
  bool in_constraints = false;
  std::istringstream in{system_text};
  std::string line;
  for (std::string raw; std::getline(in, raw);) {
    line = trim(raw);
    if (line.starts_with("# ")) {
      in_constraints = line == "# CONSTRAINTS";
      continue;
    }
    if (in_constraints && line.starts_with("- ")) {
      c.constraint_clauses.push_back(line.substr(2));
    }
  }
  return constraints_of(c);
}

const sim::Detection* find_target(const Scene& scene, const std::string& klass) {
  for (const auto& d : scene) {
    if (d.klass == klass) return &d;
  }
  return nullptr;
}

std::string render_with(const Scene& detections, const Constraints& cons) {
  if (cons.report_only.empty()) {
    // Unconstrained: scene preamble plus one sentence per detection, no
    // numeric locations.
    std::string out = "I can see a busy scene with " + std::to_string(detections.size()) +
                      " distinct objects around the vehicle. ";
    for (const auto& d : detections) {
      out += "There appears to be a " + d.klass + " somewhere " + direction_word(d.bearing) +
             " of our position. ";
    }
    return trim(out);
  }
  const sim::Detection* target = find_target(detections, cons.report_only);
  if (!target) {
    if (cons.one_sentence) return cons.report_only + ": not present";
    return "I cannot find any " + cons.report_only +
           " anywhere in the current camera view right now.";
  }
  if (cons.one_sentence && cons.include_location) {
    return cons.report_only + ": bearing " + fmt2(target->bearing) + " rad, range " +
           fmt2(target->range) + " m";
  }
  if (cons.one_sentence) {
    return cons.report_only + ": detected " + direction_word(target->bearing);
  }
  if (cons.include_location) {
    return "I can see the " + cons.report_only + " at bearing " + fmt2(target->bearing) +
           " rad and range " + fmt2(target->range) + " m.";
  }
  return "I can clearly observe a " + cons.report_only +
         " positioned somewhere ahead of the vehicle at this moment.";
}

}  // namespace

std::string render_student_description(const Scene& detections,
                                       const agent::Constitution& constitution) {
  return render_with(detections, constraints_of(constitution));
}

Result<std::string> student_describe(const Scene& detections,
                                     const agent::Constitution& constitution,
                                     agent::ReasonerBackend& reasoner) {
  agent::ReasonerQuery query;
  query.system_text = constitution.render();
  Json dets = Json::array();
  for (const auto& d : detections) dets.push_back(d.to_json());
  Json inbox = Json::array();
  inbox.push_back(Json{{"topic", "perception/detections"},
                       {"stamp", 0.0},
                       {"payload", Json{{"detections", std::move(dets)}}}});
  query.user_content = inbox.dump();
  auto reply = reasoner.infer(query);
  if (!reply.ok()) return reply.error();
  // Template replies carry {"text": ...}; raw text otherwise.
  if (reply.value().structured && reply.value().structured->is_object() &&
      reply.value().structured->contains("text")) {
    return reply.value().structured->at("text").get<std::string>();
  }
  return reply.value().content;
}

agent::TemplateBackend::RuleFactory make_student_rule() {
  return []() {
    return [](const agent::ReasonerQuery& query) -> Result<agent::ReasonerReply> {
      const Json inbox = Json::parse(query.user_content, nullptr, false);
      Scene detections;
      if (inbox.is_array()) {
        for (const auto& env : inbox) {
          const auto& payload = env.at("payload");
          if (!payload.is_object() || !payload.contains("detections")) continue;
          detections.clear();
          for (const auto& dj : payload.at("detections")) {
            sim::Detection d;
            d.klass = dj.value("class", "");
            d.bearing = dj.value("bearing", 0.0);
            d.range = dj.value("range", 0.0);
            d.confidence = dj.value("confidence", 1.0);
            detections.push_back(std::move(d));
          }
        }
      }
      const std::string text =
          render_with(detections, constraints_of_system_text(query.system_text));
      return agent::ReasonerReply::from_json(Json{{"text", text}});
    };
  };
}

ScoreBreakdown score(const std::string& response, const TargetSpec& target, const Scene& truth) {
  ScoreBreakdown s;
  s.word_count = word_count(response);

  const auto sentences = split_sentences(response);
  s.total_sentences = static_cast<int>(sentences.size());
  const auto target_tokens = tokenize_words(target.target_class);
  auto mentions_target = [&](const std::string& sentence) {
    const auto words = tokenize_words(sentence);
    for (const auto& t : target_tokens) {
      if (std::find(words.begin(), words.end(), t) == words.end()) return false;
    }
    return !target_tokens.empty();
  };
  for (const auto& sentence : sentences) {
    if (mentions_target(sentence)) ++s.on_target_sentences;
  }

  const sim::Detection* truth_target = find_target(truth, target.target_class);
  const bool target_present = truth_target != nullptr;

  const bool mentions_anywhere = s.on_target_sentences > 0;
  const bool claims_absent =
      mentions_anywhere && (response.find("not present") != std::string::npos ||
                            response.find("cannot find") != std::string::npos);
  const bool claims_present = mentions_anywhere && !claims_absent;
  s.presence_correct = claims_present == target_present;

  // Location claim: numbers following the "bearing" and "range" keywords.
  auto numeric_after = [&](const char* keyword, double& out) {
    const auto pos = response.find(keyword);
    if (pos == std::string::npos) return false;
    std::size_t i = pos + std::string(keyword).size();
    while (i < response.size() && response[i] == ' ') ++i;
    std::size_t end = i;
    while (end < response.size() &&
           (std::isdigit(static_cast<unsigned char>(response[end])) || response[end] == '.' ||
            response[end] == '-' || response[end] == '+')) {
      ++end;
    }
    if (end == i) return false;
    try {
      out = std::stod(response.substr(i, end - i));
    } catch (...) {
      return false;
    }
    return true;
  };
  double claimed_bearing = 0.0, claimed_range = 0.0;
  const bool has_bearing = numeric_after("bearing", claimed_bearing);
  const bool has_range = numeric_after("range", claimed_range);
  s.location_reported = has_bearing && has_range;
  s.location_correct = target_present && s.location_reported &&
                       std::abs(claimed_bearing - truth_target->bearing) <= 0.05 &&
                       std::abs(claimed_range - truth_target->range) <= 0.1;

  s.required_fields = target_present ? 2 : 1;
  s.correct_fields = (s.presence_correct ? 1 : 0) +
                     (target_present && s.location_correct ? 1 : 0);

  if (s.total_sentences == 0) {
    s.relevance_pct = 0.0;
  } else {
    s.relevance_pct = 100.0 *
                      (static_cast<double>(s.correct_fields) / s.required_fields) *
                      (static_cast<double>(s.on_target_sentences) / s.total_sentences);
  }
  return s;
}

agent::Constitution teacher_feedback(const EpisodeRecord& record, const TargetSpec& target,
                                     const Scene& truth, const agent::Constitution& current) {
  const ScoreBreakdown s = score(record.response, target, truth);
  if (s.relevance_pct >= 100.0 - 1e-9 && s.word_count <= 12) {
    return current;  // fixed point
  }
  const bool off_target_sentences = s.total_sentences > s.on_target_sentences;
  const std::string only_clause = report_only_clause(target.target_class);
  if (off_target_sentences && !current.has_clause(only_clause)) {
    return current.with_clause(only_clause);
  }
  const bool target_present = find_target(truth, target.target_class) != nullptr;
  if (target_present && !s.location_correct && !current.has_clause(kIncludeLocationClause)) {
    return current.with_clause(kIncludeLocationClause);
  }
  if (s.word_count > 12 && !current.has_clause(kOneSentenceClause)) {
    return current.with_clause(kOneSentenceClause);
  }
  return current;
}

Result<std::vector<EpisodeRecord>> run_tuning(const Scene& scene, const TargetSpec& target,
                                              int max_episodes,
                                              agent::ReasonerBackend& reasoner,
                                              agent::Constitution constitution) {
  if (max_episodes < 1) return make_error("bad_request", "max_episodes must be >= 1");
  std::vector<EpisodeRecord> records;
  for (int episode = 1; episode <= max_episodes; ++episode) {
    auto response = student_describe(scene, constitution, reasoner);
    if (!response.ok()) return response.error();
    EpisodeRecord rec;
    rec.episode = episode;
    rec.response = response.value();
    const ScoreBreakdown s = score(rec.response, target, scene);
    rec.word_count = s.word_count;
    rec.relevance_pct = s.relevance_pct;
    rec.constitution_digest = constitution.digest();
    records.push_back(rec);

    agent::Constitution next = teacher_feedback(rec, target, scene, constitution);
    if (next == constitution) break;  // converged
    constitution = std::move(next);
    reasoner.reset_context();  // re-tuned instance starts fresh
  }
  return records;
}

Scene standard_cluttered_scene() {
  return {
      {"red ball", 0.32, 2.1, 0.9},
      {"pink buoy", -0.62, 3.4, 0.8},
      {"fishing net", 0.95, 4.2, 0.7},
      {"submerged obstacle", -0.18, 1.6, 0.85},
      {"pipeline segment", 0.05, 5.0, 0.75},
      {"rock formation", -1.1, 3.9, 0.6},
  };
}

Scene scene_variant(int index) {
  Scene scene = standard_cluttered_scene();
  switch (index % 5) {
    case 0:
      return scene;
    case 1:
      for (auto& d : scene) {
        d.bearing = wrap_angle(d.bearing + 0.2);
        d.range += 0.5;
      }
      return scene;
    case 2:
      std::reverse(scene.begin(), scene.end());
      for (auto& d : scene) d.range += 1.0;
      return scene;
    case 3:
      scene.push_back({"kelp strand", 0.7, 2.8, 0.5});
      for (auto& d : scene) d.bearing = wrap_angle(d.bearing - 0.15);
      return scene;
    default: {
      // Variant without the red ball: exercises the absent-target path.
      Scene out;
      for (auto& d : scene) {
        if (d.klass != "red ball") out.push_back(d);
      }
      return out;
    }
  }
}

}  // namespace manta::tuning
