#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "biam/error.hpp"
#include "biam/metrics.hpp"
#include "oracles/dense_diffusion.hpp"
#include "oracles/floyd_warshall.hpp"

using namespace biam;

namespace {

WorldMap random_map(int w, int h, double fill, Rng& rng) {
  WorldMap map(w, h, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (uniform01(rng) < fill) map.set_cell(x, y, true);
  return map;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("biam-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Euclidean, ClosedForm) {
  EXPECT_DOUBLE_EQ(euclidean({0, 0}, {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(euclidean({1, 1}, {1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(euclidean({-2, 7}, {10, -2}), 15.0);
  const auto m = AssistingMetric::euclidean_metric();
  EXPECT_DOUBLE_EQ(m.distance({0, 0}, {6, 8}), 10.0);
  EXPECT_EQ(m.distance({0.3, 0.7}, {9.1, 2.2}), m.distance({9.1, 2.2}, {0.3, 0.7}));
}

TEST(GridGraph, NodesEdgesAndCornerCutting) {
  WorldMap map(3, 3, 1.0);
  map.set_cell(1, 1, true);
  const auto g = build_grid_graph(map, 1.0);
  EXPECT_EQ(g.node_count(), 8u);
  // A ring of 8 cells around the centre: only orthogonal links survive.
  EXPECT_EQ(g.edge_count(), 8u);
  for (auto d : g.diagonal) EXPECT_EQ(d, 0);

  WorldMap open(3, 3, 1.0);
  const auto full = build_grid_graph(open, 1.0);
  EXPECT_EQ(full.edge_count(), 12u + 8u);
}

TEST(GridGraph, CoarseCellsNeedEveryFineCellFree) {
  WorldMap map(4, 4, 1.0);
  map.set_cell(3, 3, true);
  const auto g = build_grid_graph(map, 2.0);
  EXPECT_EQ(g.cols, 2);
  EXPECT_EQ(g.node_count(), 3u);
  EXPECT_LT(g.node_of_cell[3], 0);
  EXPECT_THROW(build_grid_graph(map, 1.5), MetricError);
  EXPECT_THROW(build_grid_graph(map, 0.0), MetricError);
}

TEST(GridGraph, CellOfFallsBackToNeighbours) {
  WorldMap map(3, 1, 1.0);
  map.set_cell(1, 0, true);
  const auto g = build_grid_graph(map, 1.0);
  EXPECT_EQ(g.cell_of({0.5, 0.5}), 0);
  // Inside the blocked cell: the nearer neighbour centre wins.
  EXPECT_EQ(g.cell_of({1.4, 0.5}), 0);
  EXPECT_EQ(g.cell_of({1.6, 0.5}), 1);
  EXPECT_EQ(g.cell_of({3.0, 1.0}), 1);  // upper map corner maps to the last cell

  WorldMap walled(5, 5, 1.0);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x)
      if (x != 0) walled.set_cell(x, y, true);
  const auto gw = build_grid_graph(walled, 1.0);
  EXPECT_FALSE(gw.cell_of({3.5, 2.5}).has_value());
}

TEST(GridGraph, DefaultResolution) {
  EXPECT_DOUBLE_EQ(default_metric_resolution(WorldMap(100, 100, 1.0)), 2.0);
  EXPECT_DOUBLE_EQ(default_metric_resolution(WorldMap(200, 200, 1.0)), 4.0);
  EXPECT_DOUBLE_EQ(default_metric_resolution(WorldMap(40, 40, 1.0)), 1.0);
}

TEST(Geodesic, MatchesFloydWarshallExactly) {
  Rng rng(21);
  int maps = 0;
  for (int size : {5, 8, 11, 15}) {
    for (double fill : {0.0, 0.15, 0.3}) {
      const auto map = random_map(size, size, fill, rng);
      const auto g = build_grid_graph(map, 1.0);
      const auto table = build_geodesic_table(g);
      const auto fw = oracle::floyd_warshall(g);
      ASSERT_EQ(table.dist.size(), fw.size());
      for (std::size_t i = 0; i < fw.size(); ++i) ASSERT_EQ(table.dist[i], fw[i]) << "entry " << i;
      ++maps;
    }
  }
  EXPECT_EQ(maps, 12);
}

TEST(Geodesic, KnownDistancesAndDisconnection) {
  WorldMap map(5, 5, 1.0);
  for (int y = 0; y < 5; ++y) map.set_cell(2, y, true);
  const auto g = build_grid_graph(map, 1.0);
  auto table = std::make_shared<GeodesicTable>(build_geodesic_table(g));
  auto graph = std::make_shared<GridGraph>(g);
  const auto m = AssistingMetric::geodesic(graph, table);
  EXPECT_DOUBLE_EQ(m.distance({0.5, 0.5}, {1.5, 1.5}), std::numbers::sqrt2);
  EXPECT_DOUBLE_EQ(m.distance({0.5, 0.5}, {0.5, 4.5}), 4.0);
  EXPECT_EQ(m.distance({0.5, 0.5}, {4.5, 0.5}), kInfinity);
  EXPECT_EQ(m.distance({0.5, 0.5}, {-3, 0.5}), kInfinity);
}

TEST(Diffusion, MatchesDenseEigendecomposition) {
  Rng rng(33);
  int compared = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const int size = 10 + trial % 5;
    auto map = random_map(size, size, 0.12, rng);
    const auto g = build_grid_graph(map, 1.0);
    const auto labels = g.components();
    if (*std::max_element(labels.begin(), labels.end()) != 0) continue;  // oracle needs a connected graph
    ASSERT_LE(g.node_count(), 200u);

    const auto dense_all = oracle::dense_diffusion(g, 12, 2);
    // Stop at a spectral gap so the retained subspace is well defined.
    int k = 0;
    for (int c = 4; c < 12; ++c) {
      if (dense_all.eigenvalues[c - 1] - dense_all.eigenvalues[c] > 1e-3) {
        k = c;
        break;
      }
    }
    ASSERT_GT(k, 0);
    const auto dense = oracle::dense_diffusion(g, k, 2);
    const auto emb = build_diffusion_embedding(g, k, 2);
    for (int i = 0; i < k; ++i) EXPECT_NEAR(emb.eigenvalues[i], dense.eigenvalues[i], 1e-9);

    double max_d = 0.0;
    std::vector<std::pair<double, double>> pairs;
    for (std::int32_t a = 0; a < static_cast<std::int32_t>(g.node_count()); ++a) {
      for (std::int32_t b = a + 1; b < static_cast<std::int32_t>(g.node_count()); ++b) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) {
          const double d = emb.coord(a)[i] - emb.coord(b)[i];
          acc += d * d;
        }
        const double want = (dense.coords.row(a) - dense.coords.row(b)).norm();
        pairs.emplace_back(std::sqrt(acc), want);
        max_d = std::max(max_d, want);
      }
    }
    for (const auto& [got, want] : pairs) {
      if (want > 1e-3 * max_d) EXPECT_LE(std::abs(got - want), 1e-6 * want);
      else EXPECT_LE(std::abs(got - want), 1e-9 * max_d);
    }
    ++compared;
  }
  EXPECT_GE(compared, 4);
}

TEST(Diffusion, WallSeparatesPairsAtEqualEuclideanDistance) {
  WorldMap map(30, 30, 1.0);
  for (int y = 0; y < 24; ++y) map.set_cell(15, y, true);
  const auto prepared = prepare_metric(map, MetricKind::diffusion, MetricParams{1.0, 20, 2});
  const auto& m = prepared.metric;
  for (double y : {2.5, 6.5, 10.5}) {
    const double across = m.distance({12.5, y}, {18.5, y});
    const double open = m.distance({12.5, y}, {6.5, y});
    EXPECT_GT(across, open) << "y=" << y;
  }
}

TEST(Diffusion, OtherComponentsSitFarAway) {
  WorldMap map(12, 12, 1.0);
  for (int y = 0; y < 12; ++y) map.set_cell(8, y, true);
  const auto g = build_grid_graph(map, 1.0);
  const auto emb = build_diffusion_embedding(g, 4, 2);
  const double within = diffusion_distance(emb, g, {0.5, 0.5}, {7.5, 11.5});
  const double across = diffusion_distance(emb, g, {0.5, 0.5}, {10.5, 0.5});
  EXPECT_GT(across, 1e5);
  EXPECT_LT(within, 1e3);
  EXPECT_THROW(build_diffusion_embedding(g, 200, 2), MetricError);
}

TEST(Metric, UnmappedPointsAreInfinitelyFar) {
  WorldMap map(6, 6, 1.0);
  for (int y = 0; y < 6; ++y)
    for (int x = 3; x < 6; ++x) map.set_cell(x, y, true);
  const auto p = prepare_metric(map, MetricKind::diffusion, MetricParams{1.0, 4, 2});
  EXPECT_EQ(p.metric.distance({0.5, 0.5}, {5.5, 5.5}), kInfinity);
  EXPECT_THROW(diffusion_distance(*p.metric.embedding(), *p.metric.graph(), {0.5, 0.5}, {5.5, 5.5}), MetricError);
  EXPECT_EQ(p.metric.distance({1.5, 1.5}, {1.5, 1.5}), 0.0);
}

TEST(MetricKind, Names) {
  for (auto k : {MetricKind::euclidean, MetricKind::diffusion, MetricKind::geodesic})
    EXPECT_EQ(metric_kind_from_string(to_string(k)), k);
  EXPECT_THROW(metric_kind_from_string("manhattan"), ConfigError);
}

TEST(Cache, RoundTripAndKeyChecks) {
  const auto dir = temp_dir("cache");
  WorldMap map(20, 20, 1.0);
  for (int y = 0; y < 15; ++y) map.set_cell(10, y, true);
  CacheOptions cache{dir, false, true};
  const MetricParams params{1.0, 6, 2};

  const auto built = prepare_metric(map, MetricKind::diffusion, params, cache);
  EXPECT_FALSE(built.from_cache);
  const auto loaded = prepare_metric(map, MetricKind::diffusion, params, cache);
  EXPECT_TRUE(loaded.from_cache);
  EXPECT_EQ(loaded.metric.embedding()->coords, built.metric.embedding()->coords);
  EXPECT_EQ(loaded.metric.distance({1, 1}, {18, 3}), built.metric.distance({1, 1}, {18, 3}));

  const auto geo1 = prepare_metric(map, MetricKind::geodesic, params, cache);
  const auto geo2 = prepare_metric(map, MetricKind::geodesic, params, cache);
  EXPECT_TRUE(geo2.from_cache);
  EXPECT_EQ(geo1.metric.geodesic_table()->dist, geo2.metric.geodesic_table()->dist);

  const auto rebuilt = prepare_metric(map, MetricKind::diffusion, params, CacheOptions{dir, true, true});
  EXPECT_FALSE(rebuilt.from_cache);

  WorldMap other(20, 20, 1.0);
  EXPECT_THROW(prepare_metric(other, MetricKind::diffusion, params, CacheOptions{dir, false, false}), MetricError);

  // A file whose contents were built for another map is rejected.
  const MetricCacheKey key{MetricKind::diffusion, map.content_hash(), 1.0, 6, 2};
  const MetricCacheKey other_key{MetricKind::diffusion, other.content_hash(), 1.0, 6, 2};
  std::filesystem::copy_file(dir / cache_file_name(key), dir / cache_file_name(other_key));
  EXPECT_THROW(prepare_metric(other, MetricKind::diffusion, params, cache), MetricError);
  EXPECT_THROW(load_embedding(dir / cache_file_name(key), MetricCacheKey{MetricKind::diffusion, key.map_hash, 1.0, 7, 2}),
               MetricError);
  std::filesystem::remove_all(dir);
}

TEST(Cache, StaleAfterStaticEdit) {
  WorldMap map(10, 10, 1.0);
  const auto p = prepare_metric(map, MetricKind::geodesic, MetricParams{1.0, 4, 2});
  EXPECT_FALSE(p.metric.stale(map));
  map.add_obstacle({5, 5}, 1.0);
  EXPECT_FALSE(p.metric.stale(map));
  map.set_cell(1, 1, true);
  EXPECT_TRUE(p.metric.stale(map));
}
