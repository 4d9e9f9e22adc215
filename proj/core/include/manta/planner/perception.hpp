#pragma once

#include <cstdint>

#include "manta/planner/grid_map.hpp"

namespace manta::planner {

/// Detector noise model applied per connected obstacle component.
struct DetectorParams {
  double jitter_sigma_cells = 0.0;  // integer displacement ~ round(N(0, sigma))
  double dilation_prob = 0.0;       // grow the component by one ring
  double miss_prob = 0.0;           // drop the component entirely
};

/// Simulated perception over a ground-truth map: each obstacle component is
/// independently missed, displaced, and dilated. Deterministic under seed,
/// and the per-component noise streams are keyed by (seed, component), so
/// sweeping miss_prob only removes obstacles without re-rolling the jitter of
/// the survivors.
GridMap perceive_map(const GridMap& truth, const DetectorParams& params, std::uint64_t seed);

/// Connected components (8-connectivity) of occupied cells, ordered by their
/// top-left-most cell for deterministic numbering.
std::vector<std::vector<Cell>> obstacle_components(const GridMap& map);

}  // namespace manta::planner
