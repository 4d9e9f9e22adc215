#include "manta/planner/astar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace manta::planner {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

double octile(const Cell& a, const Cell& b) {
  const double dx = std::abs(a.x - b.x);
  const double dy = std::abs(a.y - b.y);
  return (dx + dy) + (kSqrt2 - 2.0) * std::min(dx, dy);
}

/// Per-cell tether admissibility over the allowed surface cells.
std::vector<bool> tether_mask(const GridMap& map, const TetherCheck& tether,
                              const GridMap& surface) {
  const std::size_t n =
      static_cast<std::size_t>(map.width()) * static_cast<std::size_t>(map.height());
  std::vector<bool> ok(n, false);
  const double margin = 0.95 * tether.length;
  const double horiz2 = margin * margin - tether.depth * tether.depth;
  if (horiz2 < 0.0) return ok;  // depth alone exceeds the tether bound
  const double max_horiz = std::sqrt(horiz2);

  std::vector<Cell> surface_cells;
  for (int y = 0; y < surface.height(); ++y)
    for (int x = 0; x < surface.width(); ++x)
      if (surface.free({x, y})) surface_cells.push_back({x, y});

  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const Vec3 p = map.cell_center({x, y});
      for (const auto& s : surface_cells) {
        const Vec3 q = surface.cell_center(s);
        const double dx = p.x - q.x, dy = p.y - q.y;
        if (dx * dx + dy * dy <= max_horiz * max_horiz) {
          ok[static_cast<std::size_t>(y) * static_cast<std::size_t>(map.width()) +
             static_cast<std::size_t>(x)] = true;
          break;
        }
      }
    }
  }
  return ok;
}

}  // namespace

double path_cost_cells(const std::vector<Cell>& cells) {
  double cost = 0.0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const int dx = std::abs(cells[i].x - cells[i - 1].x);
    const int dy = std::abs(cells[i].y - cells[i - 1].y);
    cost += (dx != 0 && dy != 0) ? kSqrt2 : 1.0;
  }
  return cost;
}

Result<Path> astar(const GridMap& raw_map, const Cell& start, const Cell& goal,
                   double clearance_cells, const std::optional<TetherCheck>& tether) {
  const GridMap map = raw_map.inflate(clearance_cells);
  if (!map.in_bounds(start) || !map.in_bounds(goal)) {
    return make_error("infeasible", "start or goal out of bounds");
  }
  if (!map.free(start) || !map.free(goal)) {
    return make_error("infeasible", "start or goal blocked after clearance inflation");
  }

  std::vector<bool> admissible;
  if (tether) {
    const GridMap& surface = tether->surface_free ? *tether->surface_free : map;
    admissible = tether_mask(map, *tether, surface);
    auto idx = [&](const Cell& c) {
      return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(map.width()) +
             static_cast<std::size_t>(c.x);
    };
    if (!admissible[idx(start)] || !admissible[idx(goal)]) {
      return make_error("infeasible", "start or goal violates the tether bound");
    }
  }

  const std::size_t n =
      static_cast<std::size_t>(map.width()) * static_cast<std::size_t>(map.height());
  auto idx = [&](const Cell& c) {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(map.width()) +
           static_cast<std::size_t>(c.x);
  };
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<bool> closed(n, false);

  struct Node {
    double f;
    double g;
    int index;
    bool operator>(const Node& o) const {
      if (f != o.f) return f > o.f;
      return index > o.index;  // deterministic tie-break
    }
  };
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
  g[idx(start)] = 0.0;
  open.push({octile(start, goal), 0.0, static_cast<int>(idx(start))});

  auto blocked = [&](const Cell& c) {
    if (!map.free(c)) return true;
    if (tether && !admissible[idx(c)]) return true;
    return false;
  };

  while (!open.empty()) {
    const Node node = open.top();
    open.pop();
    const std::size_t ci = static_cast<std::size_t>(node.index);
    if (closed[ci]) continue;
    closed[ci] = true;
    const Cell cur{static_cast<int>(ci % static_cast<std::size_t>(map.width())),
                   static_cast<int>(ci / static_cast<std::size_t>(map.width()))};
    if (cur == goal) {
      Path path;
      int walk = node.index;
      while (walk >= 0) {
        const Cell c{static_cast<int>(walk % map.width()), static_cast<int>(walk / map.width())};
        path.cells.push_back(c);
        walk = parent[static_cast<std::size_t>(walk)];
      }
      std::reverse(path.cells.begin(), path.cells.end());
      for (const auto& c : path.cells) path.waypoints.push_back(map.cell_center(c));
      path.length = path_cost_cells(path.cells) * map.resolution();
      return path;
    }
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const Cell next{cur.x + dx, cur.y + dy};
        if (!map.in_bounds(next) || blocked(next)) continue;
        if (dx != 0 && dy != 0 &&
            (blocked({cur.x + dx, cur.y}) || blocked({cur.x, cur.y + dy}))) {
          continue;  // no corner cutting
        }
        const double step = (dx != 0 && dy != 0) ? kSqrt2 : 1.0;
        const double ng = node.g + step;
        if (ng < g[idx(next)]) {
          g[idx(next)] = ng;
          parent[idx(next)] = node.index;
          open.push({ng + octile(next, goal), ng, static_cast<int>(idx(next))});
        }
      }
    }
  }
  return make_error("infeasible", "no path");
}

bool tether_feasible_path(const Path& path, const GridMap& map, const TetherCheck& tether) {
  const GridMap& surface = tether.surface_free ? *tether.surface_free : map;
  const auto mask = tether_mask(map, tether, surface);
  for (const auto& c : path.cells) {
    if (!mask[static_cast<std::size_t>(c.y) * static_cast<std::size_t>(map.width()) +
              static_cast<std::size_t>(c.x)]) {
      return false;
    }
  }
  return true;
}

}  // namespace manta::planner
