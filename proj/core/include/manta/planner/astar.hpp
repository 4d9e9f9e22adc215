#pragma once

#include <optional>
#include <vector>

#include "manta/planner/grid_map.hpp"
#include "manta/util/result.hpp"

namespace manta::planner {

/// Collision-free grid path as world-coordinate waypoints at cell centers.
struct Path {
  std::vector<Vec3> waypoints;
  std::vector<Cell> cells;
  double length = 0.0;  // metres

  bool empty() const { return cells.empty(); }
};

/// Tether coupling for a submerged vehicle planning in the plane at a fixed
/// depth: a cell is admissible only when some allowed surface cell lies
/// within sqrt((0.95 L)^2 - depth^2) horizontally.
struct TetherCheck {
  double length = 10.0;   // m
  double depth = 0.0;     // m, plan-plane depth below the surface companion
  const GridMap* surface_free = nullptr;  // defaults to the (inflated) planning map
};

/// Cost-optimal 8-connected A* with sqrt(2) diagonals, no corner cutting,
/// euclidean-disc clearance inflation, and optional tether pruning.
Result<Path> astar(const GridMap& map, const Cell& start, const Cell& goal,
                   double clearance_cells = 0.0,
                   const std::optional<TetherCheck>& tether = std::nullopt);

double path_cost_cells(const std::vector<Cell>& cells);

/// True when every waypoint admits a surface companion within the tether bound.
bool tether_feasible_path(const Path& path, const GridMap& map, const TetherCheck& tether);

}  // namespace manta::planner
