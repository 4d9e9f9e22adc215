#include "manta/mission/interpret.hpp"

#include <algorithm>
#include <cstdio>

#include "manta/util/text.hpp"

namespace manta::mission {

Result<Vec3> GoalTable::resolve(const std::string& name) const {
  auto it = goals.find(to_lower(trim(name)));
  if (it == goals.end()) return make_error("unknown_goal", "no goal named: " + name);
  return it->second;
}

std::vector<std::string> GoalTable::knowledge_facts() const {
  std::vector<std::string> facts;
  for (const auto& [name, p] : goals) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s is at (%.2f, %.2f, %.2f)", name.c_str(), p.x, p.y, p.z);
    facts.emplace_back(buf);
  }
  return facts;
}

Json TaskGraph::to_json() const {
  Json tasks_json = Json::array();
  for (const auto& t : tasks) {
    tasks_json.push_back(Json{{"verb", t.verb == TaskVerb::goto_goal ? "goto" : "inspect"},
                              {"goal", t.goal_name},
                              {"avoid_obstacles", t.avoid_obstacles},
                              {"retry_budget", t.retry_budget}});
  }
  return Json{{"tasks", std::move(tasks_json)}};
}

namespace {

bool obstacle_mention(const std::string& lower) {
  return contains_word(lower, "obstacle") || contains_word(lower, "obstacles") ||
         contains_word(lower, "box") || contains_word(lower, "boxes") ||
         lower.find("on the way") != std::string::npos ||
         lower.find("on your way") != std::string::npos ||
         lower.find("check for any") != std::string::npos;
}

/// First verb match at or after `from`; returns npos when absent.
std::size_t find_verb(const std::string& lower, std::size_t from, TaskVerb& verb,
                      std::size_t& verb_len) {
  struct Pattern {
    const char* text;
    TaskVerb verb;
  };
  static const Pattern patterns[] = {
      {"go to", TaskVerb::goto_goal},
      {"inspect", TaskVerb::inspect},
      {"check", TaskVerb::inspect},
  };
  std::size_t best = std::string::npos;
  for (const auto& p : patterns) {
    const auto pos = lower.find(p.text, from);
    if (pos != std::string::npos && pos < best) {
      best = pos;
      verb = p.verb;
      verb_len = std::string(p.text).size();
    }
  }
  return best;
}

}  // namespace

Result<TaskGraph> interpret(const std::string& command, const GoalTable& table) {
  const std::string trimmed = trim(command);
  if (trimmed.empty()) return make_error("unparseable", "empty command");
  const std::string lower = to_lower(trimmed);

  // Segment on "and then" for ordered multi-task commands.
  std::vector<std::string> segments;
  std::size_t pos = 0;
  for (;;) {
    const auto split_at = lower.find(" and then ", pos);
    if (split_at == std::string::npos) {
      segments.push_back(lower.substr(pos));
      break;
    }
    segments.push_back(lower.substr(pos, split_at - pos));
    pos = split_at + 10;
  }

  TaskGraph graph;
  for (const auto& segment : segments) {
    TaskVerb verb;
    std::size_t verb_len = 0;
    const auto verb_pos = find_verb(segment, 0, verb, verb_len);
    if (verb_pos == std::string::npos) {
      return make_error("unparseable", "no verb recognized in: " + segment);
    }
    // The goal name is the longest table entry appearing after the verb.
    std::string found_goal;
    std::size_t found_at = std::string::npos;
    for (const auto& [name, coords] : table.goals) {
      (void)coords;
      const auto at = segment.find(name, verb_pos + verb_len);
      if (at == std::string::npos) continue;
      if (found_at == std::string::npos || at < found_at ||
          (at == found_at && name.size() > found_goal.size())) {
        found_at = at;
        found_goal = name;
      }
    }
    if (found_goal.empty()) {
      return make_error("unparseable", "no known goal in: " + segment);
    }
    Task task;
    task.verb = verb;
    task.goal_name = found_goal;
    task.avoid_obstacles = obstacle_mention(segment);
    graph.tasks.push_back(std::move(task));
  }
  return graph;
}

}  // namespace manta::mission
