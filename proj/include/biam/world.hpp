#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "biam/geometry.hpp"
#include "biam/random.hpp"

namespace biam {

using ObstacleId = std::uint64_t;

/// A disc that can appear or disappear at runtime. It never moves.
struct DiscObstacle {
  ObstacleId id = 0;
  Point center;
  double radius = 0.0;
};

struct AddObstacle {
  DiscObstacle disc;
};

struct RemoveObstacle {
  ObstacleId id = 0;
};

using ObstacleChange = std::variant<AddObstacle, RemoveObstacle>;

/// Occupancy grid with runtime disc obstacles.
///
/// Cells are indexed (cx, cy) with cy growing upward, so cell (0, 0) spans
/// [0, cell) x [0, cell). A point is obstructed iff its cell is occupied or it
/// lies strictly inside a disc; free space is exactly the complement inside the
/// map rectangle.
///
/// Segment tests are conservative: every cell whose closed square touches the
/// segment is consulted.
///
/// `revision()` increases on every mutation; `static_revision()` only when the
/// grid itself changes, which is what precomputed metrics are keyed on.
class WorldMap {
 public:
  WorldMap(int cols, int rows, double cell_size);
  WorldMap(int cols, int rows, double cell_size, std::vector<std::uint8_t> occupancy);

  int cols() const noexcept { return cols_; }
  int rows() const noexcept { return rows_; }
  double cell_size() const noexcept { return cell_size_; }
  double width_m() const noexcept { return cols_ * cell_size_; }
  double height_m() const noexcept { return rows_ * cell_size_; }

  bool cell_occupied(int cx, int cy) const;
  Point cell_center(int cx, int cy) const;
  bool in_bounds(Point p) const noexcept;

  /// False for points outside the map or inside any obstacle.
  bool is_free(Point p) const;
  /// Throws BoundsError when an endpoint lies outside the map.
  bool segment_free(Point a, Point b) const;
  /// Static grid only; discs are ignored.
  bool segment_free_static(Point a, Point b) const;

  std::uint64_t mutate_obstacles(const ObstacleChange& change);
  /// Adds a disc with a fresh id and returns that id.
  ObstacleId add_obstacle(Point center, double radius);
  void remove_obstacle(ObstacleId id);
  ObstacleId next_obstacle_id() const noexcept { return next_id_; }
  const std::vector<DiscObstacle>& obstacles() const noexcept { return discs_; }

  /// Edits static geometry; invalidates precomputed metrics.
  void set_cell(int cx, int cy, bool occupied);

  std::uint64_t revision() const noexcept { return revision_; }
  std::uint64_t static_revision() const noexcept { return static_revision_; }

  std::size_t free_cell_count() const noexcept;
  /// FNV-1a over dimensions, cell size and occupancy.
  std::uint64_t content_hash() const;

  const std::optional<Point>& start() const noexcept { return start_; }
  const std::optional<Point>& goal() const noexcept { return goal_; }
  void set_start(Point p) { start_ = p; }
  void set_goal(Point p) { goal_ = p; }

  /// Rejection sampling over the map rectangle.
  Point sample_free(Rng& rng) const;

 private:
  bool grid_segment_free(Point a, Point b) const;
  void check_point(Point p) const;

  int cols_;
  int rows_;
  double cell_size_;
  std::vector<std::uint8_t> occupancy_;
  std::vector<DiscObstacle> discs_;
  ObstacleId next_id_ = 1;
  std::uint64_t revision_ = 0;
  std::uint64_t static_revision_ = 0;
  std::optional<Point> start_;
  std::optional<Point> goal_;
};

/// Parses the `biam-map v1` ASCII document. S and G are optional but unique.
WorldMap load_map(std::string_view document);
/// Inverse of load_map for maps whose start and goal sit on cell centres.
std::string save_map(const WorldMap& map);

std::vector<std::string> builtin_scenario_names();
std::string_view builtin_scenario_document(std::string_view name);
WorldMap builtin_scenario(std::string_view name);

}  // namespace biam
