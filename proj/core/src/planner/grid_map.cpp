#include "manta/planner/grid_map.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace manta::planner {

GridMap::GridMap(int width, int height, double resolution, Vec3 origin)
    : width_(width),
      height_(height),
      resolution_(resolution),
      origin_(origin),
      cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), false) {}

std::size_t GridMap::occupied_count() const {
  std::size_t n = 0;
  for (bool b : cells_) n += b ? 1 : 0;
  return n;
}

GridMap GridMap::inflate(double clearance_cells) const {
  if (clearance_cells <= 0.0) return *this;
  GridMap out = *this;
  const int r = static_cast<int>(std::ceil(clearance_cells));
  const double r2 = clearance_cells * clearance_cells;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!occupied({x, y})) continue;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dx * dx + dy * dy > r2) continue;
          const Cell c{x + dx, y + dy};
          if (out.in_bounds(c)) out.set_occupied(c);
        }
      }
    }
  }
  return out;
}

std::string GridMap::to_ascii() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_ + 1));
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) out.push_back(occupied({x, y}) ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

Result<GridMap> load_ascii_map(const std::string& text, double resolution, Vec3 origin) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.empty()) return make_error("bad_map", "empty map");
  const std::size_t w = rows[0].size();
  for (std::size_t y = 0; y < rows.size(); ++y) {
    if (rows[y].size() != w) {
      return make_error("bad_map", "ragged row at line " + std::to_string(y + 1));
    }
  }
  GridMap map(static_cast<int>(w), static_cast<int>(rows.size()), resolution, origin);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const char g = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
      switch (g) {
        case '#':
        case 'O':
          map.set_occupied({x, y});
          break;
        case '.':
          break;
        case 'S':
          map.annotated_start = Cell{x, y};
          break;
        case 'G':
          map.annotated_goal = Cell{x, y};
          break;
        default:
          return make_error("bad_map", std::string("unknown glyph '") + g + "' at row " +
                                           std::to_string(y + 1));
      }
    }
  }
  return map;
}

namespace {

// Reads the next PGM header token, skipping whitespace and '#' comments.
Result<std::string> next_pgm_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size()) return make_error("bad_map", "truncated PGM header");
  std::string tok;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    tok.push_back(bytes[pos++]);
  }
  return tok;
}

Result<int> pgm_int(const std::string& bytes, std::size_t& pos) {
  auto tok = next_pgm_token(bytes, pos);
  if (!tok.ok()) return tok.error();
  if (tok.value().find_first_not_of("0123456789") != std::string::npos) {
    return make_error("bad_map", "malformed PGM header token: " + tok.value());
  }
  return std::stoi(tok.value());
}

}  // namespace

Result<GridMap> load_pgm_map(const std::string& bytes, double resolution, Vec3 origin) {
  std::size_t pos = 0;
  auto magic = next_pgm_token(bytes, pos);
  if (!magic.ok()) return magic.error();
  const bool binary = magic.value() == "P5";
  if (!binary && magic.value() != "P2") {
    return make_error("bad_map", "unsupported PGM magic: " + magic.value());
  }
  auto w = pgm_int(bytes, pos);
  if (!w.ok()) return w.error();
  auto h = pgm_int(bytes, pos);
  if (!h.ok()) return h.error();
  auto maxval = pgm_int(bytes, pos);
  if (!maxval.ok()) return maxval.error();
  if (w.value() <= 0 || h.value() <= 0 || maxval.value() <= 0 || maxval.value() > 255) {
    return make_error("bad_map", "malformed PGM dimensions");
  }
  GridMap map(w.value(), h.value(), resolution, origin);
  const std::size_t n = static_cast<std::size_t>(w.value()) * static_cast<std::size_t>(h.value());
  if (binary) {
    ++pos;  // single whitespace after maxval
    if (bytes.size() - pos < n) return make_error("bad_map", "truncated PGM data");
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned char v = static_cast<unsigned char>(bytes[pos + i]);
      if (v < 128) {
        map.set_occupied({static_cast<int>(i % static_cast<std::size_t>(w.value())),
                          static_cast<int>(i / static_cast<std::size_t>(w.value()))});
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      auto v = pgm_int(bytes, pos);
      if (!v.ok()) return make_error("bad_map", "truncated PGM data");
      if (v.value() < 128) {
        map.set_occupied({static_cast<int>(i % static_cast<std::size_t>(w.value())),
                          static_cast<int>(i / static_cast<std::size_t>(w.value()))});
      }
    }
  }
  return map;
}

Result<GridMap> load_map_file(const std::string& path, double resolution, Vec3 origin) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return make_error("io_error", "cannot open map: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.starts_with("P2") || bytes.starts_with("P5")) {
    return load_pgm_map(bytes, resolution, origin);
  }
  return load_ascii_map(bytes, resolution, origin);
}

}  // namespace manta::planner
