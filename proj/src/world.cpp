#include "biam/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "biam/error.hpp"
#include "builtin_scenarios.inc"

namespace biam {

WorldMap::WorldMap(int cols, int rows, double cell_size)
    : WorldMap(cols, rows, cell_size, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(cols, 0)) *
                                                                   static_cast<std::size_t>(std::max(rows, 0)),
                                                               0)) {}

WorldMap::WorldMap(int cols, int rows, double cell_size, std::vector<std::uint8_t> occupancy)
    : cols_(cols), rows_(rows), cell_size_(cell_size), occupancy_(std::move(occupancy)) {
  if (cols <= 0 || rows <= 0) throw Error("map dimensions must be positive");
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw Error("cell size must be positive");
  if (occupancy_.size() != static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows)) {
    throw Error("occupancy size does not match map dimensions");
  }
}

bool WorldMap::cell_occupied(int cx, int cy) const {
  if (cx < 0 || cy < 0 || cx >= cols_ || cy >= rows_) throw BoundsError("cell outside map");
  return occupancy_[static_cast<std::size_t>(cy) * cols_ + cx] != 0;
}

Point WorldMap::cell_center(int cx, int cy) const {
  return {(cx + 0.5) * cell_size_, (cy + 0.5) * cell_size_};
}

bool WorldMap::in_bounds(Point p) const noexcept {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= width_m() && p.y <= height_m();
}

void WorldMap::check_point(Point p) const {
  if (!in_bounds(p)) {
    throw BoundsError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") outside map");
  }
}

bool WorldMap::is_free(Point p) const {
  if (!in_bounds(p)) return false;
  const int cx = std::min(static_cast<int>(p.x / cell_size_), cols_ - 1);
  const int cy = std::min(static_cast<int>(p.y / cell_size_), rows_ - 1);
  if (occupancy_[static_cast<std::size_t>(cy) * cols_ + cx]) return false;
  for (const auto& d : discs_) {
    if (euclidean(p, d.center) < d.radius) return false;
  }
  return true;
}

bool WorldMap::grid_segment_free(Point a, Point b) const {
  double ax = a.x / cell_size_, ay = a.y / cell_size_;
  double bx = b.x / cell_size_, by = b.y / cell_size_;
  if (ax > bx) {
    std::swap(ax, bx);
    std::swap(ay, by);
  }
  const double dx = bx - ax;
  const double slope = dx > 0.0 ? (by - ay) / dx : 0.0;

  // A coordinate sitting exactly on a grid line touches the cells on both sides.
  int i0 = static_cast<int>(std::floor(ax));
  if (static_cast<double>(i0) == ax) --i0;
  int i1 = static_cast<int>(std::floor(bx));
  i0 = std::max(i0, 0);
  i1 = std::min(i1, cols_ - 1);

  for (int i = i0; i <= i1; ++i) {
    double ylo, yhi;
    if (dx > 0.0) {
      const double sx0 = std::max(ax, static_cast<double>(i));
      const double sx1 = std::min(bx, static_cast<double>(i + 1));
      const double y0 = ay + (sx0 - ax) * slope;
      const double y1 = ay + (sx1 - ax) * slope;
      ylo = std::min(y0, y1);
      yhi = std::max(y0, y1);
    } else {
      ylo = std::min(ay, by);
      yhi = std::max(ay, by);
    }
    int j0 = static_cast<int>(std::floor(ylo));
    if (static_cast<double>(j0) == ylo) --j0;
    int j1 = static_cast<int>(std::floor(yhi));
    j0 = std::max(j0, 0);
    j1 = std::min(j1, rows_ - 1);
    const std::uint8_t* column = occupancy_.data() + i;
    for (int j = j0; j <= j1; ++j) {
      if (column[static_cast<std::size_t>(j) * cols_]) return false;
    }
  }
  return true;
}

bool WorldMap::segment_free_static(Point a, Point b) const {
  check_point(a);
  check_point(b);
  return grid_segment_free(a, b);
}

bool WorldMap::segment_free(Point a, Point b) const {
  check_point(a);
  check_point(b);
  for (const auto& d : discs_) {
    if (point_segment_distance(d.center, a, b) < d.radius) return false;
  }
  return grid_segment_free(a, b);
}

std::uint64_t WorldMap::mutate_obstacles(const ObstacleChange& change) {
  if (const auto* add = std::get_if<AddObstacle>(&change)) {
    const auto& disc = add->disc;
    if (!(disc.radius > 0.0) || !std::isfinite(disc.radius)) throw ObstacleError("obstacle radius must be positive");
    if (!in_bounds(disc.center)) throw ObstacleError("obstacle centre outside map");
    for (const auto& d : discs_) {
      if (d.id == disc.id) throw ObstacleError("duplicate obstacle id " + std::to_string(disc.id));
    }
    discs_.push_back(disc);
    next_id_ = std::max(next_id_, disc.id + 1);
  } else {
    const auto id = std::get<RemoveObstacle>(change).id;
    const auto it = std::find_if(discs_.begin(), discs_.end(), [id](const DiscObstacle& d) { return d.id == id; });
    if (it == discs_.end()) throw ObstacleError("unknown obstacle id " + std::to_string(id));
    discs_.erase(it);
  }
  return ++revision_;
}

ObstacleId WorldMap::add_obstacle(Point center, double radius) {
  const ObstacleId id = next_id_;
  mutate_obstacles(AddObstacle{DiscObstacle{id, center, radius}});
  return id;
}

void WorldMap::remove_obstacle(ObstacleId id) { mutate_obstacles(RemoveObstacle{id}); }

void WorldMap::set_cell(int cx, int cy, bool occupied) {
  if (cx < 0 || cy < 0 || cx >= cols_ || cy >= rows_) throw BoundsError("cell outside map");
  occupancy_[static_cast<std::size_t>(cy) * cols_ + cx] = occupied ? 1 : 0;
  ++revision_;
  ++static_revision_;
}

std::size_t WorldMap::free_cell_count() const noexcept {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), 0));
}

std::uint64_t WorldMap::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const std::int32_t dims[2] = {cols_, rows_};
  mix(dims, sizeof dims);
  mix(&cell_size_, sizeof cell_size_);
  mix(occupancy_.data(), occupancy_.size());
  return h;
}

Point WorldMap::sample_free(Rng& rng) const {
  if (free_cell_count() == 0) throw NoFreeSpaceError("map has no free cell");
  std::uniform_real_distribution<double> ux(0.0, width_m());
  std::uniform_real_distribution<double> uy(0.0, height_m());
  for (int attempt = 0; attempt < 10'000'000; ++attempt) {
    const Point p{ux(rng), uy(rng)};
    if (is_free(p)) return p;
  }
  throw NoFreeSpaceError("no free point found; obstacles cover the free cells");
}

namespace {

struct LineCursor {
  std::string_view doc;
  std::size_t pos = 0;
  std::size_t line = 0;

  bool next(std::string_view& out) {
    if (pos >= doc.size()) return false;
    const std::size_t end = doc.find('\n', pos);
    if (end == std::string_view::npos) {
      out = doc.substr(pos);
      pos = doc.size();
    } else {
      out = doc.substr(pos, end - pos);
      pos = end + 1;
    }
    ++line;
    return true;
  }
};

}  // namespace

WorldMap load_map(std::string_view document) {
  LineCursor cur{document};
  std::string_view line;
  if (!cur.next(line) || line != "biam-map v1") throw ParseError(1, 1, "expected header 'biam-map v1'");
  if (!cur.next(line) || line.substr(0, 5) != "cell ") throw ParseError(2, 1, "expected 'cell <size>'");
  double cell = 0.0;
  {
    const std::string value(line.substr(5));
    std::size_t used = 0;
    try {
      cell = std::stod(value, &used);
    } catch (const std::exception&) {
      throw ParseError(2, 6, "cell size is not a number");
    }
    if (used != value.size() || !(cell > 0.0) || !std::isfinite(cell)) {
      throw ParseError(2, 6, "cell size must be a positive number");
    }
  }

  std::vector<std::string_view> rows;
  while (cur.next(line)) rows.push_back(line);
  if (rows.empty()) throw ParseError(3, 1, "map has no rows");

  const std::size_t width = rows.front().size();
  if (width == 0) throw ParseError(3, 1, "empty row");
  const int n_rows = static_cast<int>(rows.size());
  const int n_cols = static_cast<int>(width);
  std::vector<std::uint8_t> occ(width * rows.size(), 0);
  std::optional<Point> start, goal;
  WorldMap probe(n_cols, n_rows, cell);

  for (int r = 0; r < n_rows; ++r) {
    const auto row = rows[static_cast<std::size_t>(r)];
    const std::size_t line_no = static_cast<std::size_t>(r) + 3;
    if (row.size() != width) {
      throw ParseError(line_no, std::min(row.size(), width) + 1,
                       "ragged row: expected " + std::to_string(width) + " glyphs, found " + std::to_string(row.size()));
    }
    const int cy = n_rows - 1 - r;
    for (int c = 0; c < n_cols; ++c) {
      const char g = row[static_cast<std::size_t>(c)];
      switch (g) {
        case '.':
          break;
        case '#':
          occ[static_cast<std::size_t>(cy) * width + c] = 1;
          break;
        case 'S':
        case 'G': {
          auto& slot = g == 'S' ? start : goal;
          if (slot) throw ParseError(line_no, static_cast<std::size_t>(c) + 1, std::string("second '") + g + "' glyph");
          slot = probe.cell_center(c, cy);
          break;
        }
        default:
          throw ParseError(line_no, static_cast<std::size_t>(c) + 1,
                           std::string("unknown glyph '") + (g == '\r' ? std::string("\\r") : std::string(1, g)) + "'");
      }
    }
  }
  WorldMap map(n_cols, n_rows, cell, std::move(occ));
  if (start) map.set_start(*start);
  if (goal) map.set_goal(*goal);
  return map;
}

std::string save_map(const WorldMap& map) {
  auto cell_of = [&](const std::optional<Point>& p) {
    if (!p) return std::pair<int, int>{-1, -1};
    return std::pair<int, int>{static_cast<int>(p->x / map.cell_size()), static_cast<int>(p->y / map.cell_size())};
  };
  const auto s = cell_of(map.start());
  const auto g = cell_of(map.goal());
  std::string out = "biam-map v1\ncell ";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", map.cell_size());
  out += buf;
  out += '\n';
  for (int cy = map.rows() - 1; cy >= 0; --cy) {
    for (int cx = 0; cx < map.cols(); ++cx) {
      if (std::pair{cx, cy} == s) {
        out += 'S';
      } else if (std::pair{cx, cy} == g) {
        out += 'G';
      } else {
        out += map.cell_occupied(cx, cy) ? '#' : '.';
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> builtin_scenario_names() { return {"bug_trap", "maze", "office"}; }

std::string_view builtin_scenario_document(std::string_view name) {
  if (name == "bug_trap") return detail::kBugTrapMap;
  if (name == "maze") return detail::kMazeMap;
  if (name == "office") return detail::kOfficeMap;
  throw Error("unknown scenario '" + std::string(name) + "'");
}

WorldMap builtin_scenario(std::string_view name) { return load_map(builtin_scenario_document(name)); }

}  // namespace biam
