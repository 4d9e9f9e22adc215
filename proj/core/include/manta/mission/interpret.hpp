#pragma once

#include <map>
#include <string>
#include <vector>

#include "manta/util/geom.hpp"
#include "manta/util/json.hpp"
#include "manta/util/result.hpp"

namespace manta::mission {

/// Named goal coordinates, embedded in the Commander's constitution domain
/// knowledge.
struct GoalTable {
  std::map<std::string, Vec3> goals;  // lowercase names

  Result<Vec3> resolve(const std::string& name) const;
  std::vector<std::string> knowledge_facts() const;
};

enum class TaskVerb { goto_goal, inspect };

struct Task {
  TaskVerb verb = TaskVerb::goto_goal;
  std::string goal_name;
  bool avoid_obstacles = false;
  int retry_budget = 3;
};

struct TaskGraph {
  std::vector<Task> tasks;

  Json to_json() const;
};

/// Literal-adherence command grammar: verb ("go to" | "inspect" | "check") +
/// goal name resolved against the table; avoid_obstacles turns on only when
/// an obstacle-mention pattern appears ("obstacle(s)", "box(es)", "on the/your
/// way", "check for any"). Multi-task commands join with "and then".
Result<TaskGraph> interpret(const std::string& command, const GoalTable& table);

}  // namespace manta::mission
