#pragma once

#include <optional>
#include <string>
#include <vector>

#include "manta/util/geom.hpp"
#include "manta/util/result.hpp"

namespace manta::planner {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

/// Row-major occupancy grid. World coordinates map through origin (world
/// position of cell (0,0)'s corner) and resolution (m/cell); waypoints sit at
/// cell centers.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height, double resolution = 1.0, Vec3 origin = {});

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  const Vec3& origin() const { return origin_; }

  bool in_bounds(const Cell& c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  bool occupied(const Cell& c) const { return cells_[index(c)]; }
  bool free(const Cell& c) const { return in_bounds(c) && !cells_[index(c)]; }
  void set_occupied(const Cell& c, bool value = true) { cells_[index(c)] = value; }

  std::size_t occupied_count() const;

  Vec3 cell_center(const Cell& c) const {
    return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_,
            origin_.z};
  }
  Cell world_to_cell(const Vec3& p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
  }

  /// Occupancy dilated by a euclidean disc of `clearance` cells.
  GridMap inflate(double clearance_cells) const;

  /// ASCII round trip ('#' occupied, '.' free); annotations are not emitted.
  std::string to_ascii() const;

  std::optional<Cell> annotated_start;  // from 'S'
  std::optional<Cell> annotated_goal;   // from 'G'

 private:
  std::size_t index(const Cell& c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x);
  }
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Vec3 origin_;
  std::vector<bool> cells_;
};

/// '#'/'O' occupied, '.' free, 'S'/'G' start and goal annotations.
Result<GridMap> load_ascii_map(const std::string& text, double resolution = 1.0,
                               Vec3 origin = {});
/// 8-bit PGM (P2 or P5); occupied iff pixel value < 128.
Result<GridMap> load_pgm_map(const std::string& bytes, double resolution = 1.0,
                             Vec3 origin = {});
/// Dispatches on content (PGM magic) after reading the file.
Result<GridMap> load_map_file(const std::string& path, double resolution = 1.0,
                              Vec3 origin = {});

}  // namespace manta::planner
