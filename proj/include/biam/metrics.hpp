#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biam/geometry.hpp"
#include "biam/world.hpp"

namespace biam {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// 8-connected graph over free coarse cells.
///
/// A coarse cell is free iff every fine map cell it covers is free. Diagonal
/// edges require both orthogonal neighbours to be free (no corner cutting).
struct GridGraph {
  int cols = 0;
  int rows = 0;
  double resolution = 1.0;
  std::uint64_t source_revision = 0;
  std::vector<std::int32_t> node_of_cell;  // -1 for blocked coarse cells
  std::vector<std::array<std::int32_t, 2>> cell_of_node;
  // CSR adjacency; each undirected edge appears in both directions.
  std::vector<std::int32_t> offsets;
  std::vector<std::int32_t> targets;
  std::vector<std::uint8_t> diagonal;

  std::size_t node_count() const noexcept { return cell_of_node.size(); }
  std::size_t edge_count() const noexcept { return targets.size() / 2; }
  Point node_center(std::int32_t node) const;
  double edge_weight(std::size_t csr_index) const noexcept {
    return diagonal[csr_index] ? resolution * std::numbers::sqrt2 : resolution;
  }
  /// g(.): the node whose cell contains p, else the nearest node among the
  /// eight surrounding cells, else nothing.
  std::optional<std::int32_t> cell_of(Point p) const;
  /// Component label per node; labels are numbered in order of first node.
  std::vector<std::int32_t> components() const;
};

/// Throws MetricError unless resolution is a positive integer multiple of the cell size.
GridGraph build_grid_graph(const WorldMap& map, double resolution);

/// Smallest multiple of the map cell size keeping the coarse grid at or below
/// `max_cells` cells.
double default_metric_resolution(const WorldMap& map, std::size_t max_cells = 2500);

/// Approximate diffusion coordinates h(.) for every graph node.
///
/// Built from the degree-normalised random walk on the largest connected
/// component. Nodes outside that component are parked at distinct far-away
/// coordinates so that they never look close to the main component.
struct DiffusionEmbedding {
  int k = 0;
  int t = 0;
  std::uint64_t source_revision = 0;
  std::vector<double> eigenvalues;  // k leading non-trivial, descending
  std::vector<double> coords;       // node-major, k per node

  std::span<const double> coord(std::int32_t node) const {
    return {coords.data() + static_cast<std::size_t>(node) * k, static_cast<std::size_t>(k)};
  }
};

struct DiffusionOptions {
  int k = 20;
  int t = 2;
  double tolerance = 1e-10;
  int block_size = 4;
  int max_iterations = 10'000;
  std::uint64_t seed = 0x5eed;
};

DiffusionEmbedding build_diffusion_embedding(const GridGraph& graph, const DiffusionOptions& options = {});
inline DiffusionEmbedding build_diffusion_embedding(const GridGraph& graph, int k, int t) {
  DiffusionOptions o;
  o.k = k;
  o.t = t;
  return build_diffusion_embedding(graph, o);
}

/// Throws MetricError when either point has no graph cell.
double diffusion_distance(const DiffusionEmbedding& emb, const GridGraph& graph, Point a, Point b);

/// All-pairs shortest path lengths over the grid graph, +inf when disconnected.
struct GeodesicTable {
  std::size_t n = 0;
  std::uint64_t source_revision = 0;
  std::vector<double> dist;

  double at(std::size_t i, std::size_t j) const noexcept { return dist[i * n + j]; }
};

GeodesicTable build_geodesic_table(const GridGraph& graph);
double geodesic_distance(const GeodesicTable& table, const GridGraph& graph, Point a, Point b);

enum class MetricKind { euclidean, diffusion, geodesic };

std::string_view to_string(MetricKind kind);
MetricKind metric_kind_from_string(std::string_view text);

/// d_A: dispatches to the Euclidean, diffusion or geodesic distance.
///
/// distance() never throws; unmapped points and disconnected pairs yield +inf,
/// which callers treat as worse than any finite value.
class AssistingMetric {
 public:
  AssistingMetric() = default;

  static AssistingMetric euclidean_metric();
  static AssistingMetric diffusion(std::shared_ptr<const GridGraph> graph,
                                   std::shared_ptr<const DiffusionEmbedding> embedding);
  static AssistingMetric geodesic(std::shared_ptr<const GridGraph> graph,
                                  std::shared_ptr<const GeodesicTable> table);

  MetricKind kind() const noexcept { return kind_; }
  double distance(Point a, Point b) const;
  /// True when the payload was built from different static geometry.
  bool stale(const WorldMap& map) const noexcept;

  const GridGraph* graph() const noexcept { return graph_.get(); }
  const DiffusionEmbedding* embedding() const noexcept { return embedding_.get(); }
  const GeodesicTable* geodesic_table() const noexcept { return table_.get(); }

 private:
  MetricKind kind_ = MetricKind::euclidean;
  std::shared_ptr<const GridGraph> graph_;
  std::shared_ptr<const DiffusionEmbedding> embedding_;
  std::shared_ptr<const GeodesicTable> table_;
};

/// Identifies a cached payload: the map content and the build parameters.
struct MetricCacheKey {
  MetricKind kind = MetricKind::euclidean;
  std::uint64_t map_hash = 0;
  double resolution = 0.0;
  int k = 0;
  int t = 0;

  friend bool operator==(const MetricCacheKey&, const MetricCacheKey&) = default;
};

std::filesystem::path cache_file_name(const MetricCacheKey& key);
void save_embedding(const std::filesystem::path& path, const MetricCacheKey& key, const DiffusionEmbedding& emb);
DiffusionEmbedding load_embedding(const std::filesystem::path& path, const MetricCacheKey& expected);
void save_geodesic(const std::filesystem::path& path, const MetricCacheKey& key, const GeodesicTable& table);
GeodesicTable load_geodesic(const std::filesystem::path& path, const MetricCacheKey& expected);

struct MetricParams {
  double resolution = 0.0;  // 0 selects default_metric_resolution
  int k = 20;
  int t = 2;
};

struct CacheOptions {
  std::optional<std::filesystem::path> directory;  // no caching when empty
  bool rebuild = false;                            // ignore existing files
  bool allow_build = true;                         // false: a missing file is an error
};

struct PreparedMetric {
  AssistingMetric metric;
  double prep_seconds = 0.0;
  bool from_cache = false;
};

/// Builds (or loads) the payload for `kind` from the map's static geometry.
PreparedMetric prepare_metric(const WorldMap& map, MetricKind kind, const MetricParams& params = {},
                              const CacheOptions& cache = {});

}  // namespace biam
