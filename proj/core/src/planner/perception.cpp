#include "manta/planner/perception.hpp"

#include <cmath>
#include <deque>

#include "manta/util/rng.hpp"

namespace manta::planner {

std::vector<std::vector<Cell>> obstacle_components(const GridMap& map) {
  std::vector<std::vector<Cell>> components;
  std::vector<bool> seen(
      static_cast<std::size_t>(map.width()) * static_cast<std::size_t>(map.height()), false);
  auto idx = [&](const Cell& c) {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(map.width()) +
           static_cast<std::size_t>(c.x);
  };
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const Cell seed{x, y};
      if (!map.occupied(seed) || seen[idx(seed)]) continue;
      std::vector<Cell> comp;
      std::deque<Cell> frontier{seed};
      seen[idx(seed)] = true;
      while (!frontier.empty()) {
        const Cell c = frontier.front();
        frontier.pop_front();
        comp.push_back(c);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const Cell n{c.x + dx, c.y + dy};
            if (map.in_bounds(n) && map.occupied(n) && !seen[idx(n)]) {
              seen[idx(n)] = true;
              frontier.push_back(n);
            }
          }
        }
      }
      components.push_back(std::move(comp));
    }
  }
  return components;
}

GridMap perceive_map(const GridMap& truth, const DetectorParams& params, std::uint64_t seed) {
  GridMap perceived(truth.width(), truth.height(), truth.resolution(), truth.origin());
  perceived.annotated_start = truth.annotated_start;
  perceived.annotated_goal = truth.annotated_goal;

  const Rng root(seed);
  const auto components = obstacle_components(truth);
  for (std::size_t i = 0; i < components.size(); ++i) {
    // Independent streams per decision so a miss-probability sweep keeps the
    // survivors' jitter identical (coupled sampling).
    Rng miss_rng = root.fork(i, 0x6d697373ULL);      // "miss"
    Rng jitter_rng = root.fork(i, 0x6a6974ULL);      // "jit"
    Rng dilation_rng = root.fork(i, 0x64696cULL);    // "dil"
    if (miss_rng.uniform01() < params.miss_prob) continue;
    int jx = 0, jy = 0;
    if (params.jitter_sigma_cells > 0.0) {
      jx = static_cast<int>(std::lround(jitter_rng.gaussian(0.0, params.jitter_sigma_cells)));
      jy = static_cast<int>(std::lround(jitter_rng.gaussian(0.0, params.jitter_sigma_cells)));
    }
    const bool dilate = dilation_rng.uniform01() < params.dilation_prob;
    for (const auto& c : components[i]) {
      const Cell moved{c.x + jx, c.y + jy};
      if (perceived.in_bounds(moved)) perceived.set_occupied(moved);
      if (dilate) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const Cell ring{moved.x + dx, moved.y + dy};
            if (perceived.in_bounds(ring)) perceived.set_occupied(ring);
          }
        }
      }
    }
  }
  return perceived;
}

}  // namespace manta::planner
