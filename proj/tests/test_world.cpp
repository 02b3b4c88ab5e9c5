#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "biam/error.hpp"
#include "biam/world.hpp"
#include "oracles/segment.hpp"

using namespace biam;

namespace {

WorldMap random_map(int w, int h, double fill, Rng& rng) {
  WorldMap map(w, h, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (uniform01(rng) < fill) map.set_cell(x, y, true);
    }
  }
  return map;
}

}  // namespace

TEST(LoadMap, AllFreeDocument) {
  const auto map = load_map("biam-map v1\ncell 1\n...\n...\n...\n");
  EXPECT_EQ(map.cols(), 3);
  EXPECT_EQ(map.rows(), 3);
  EXPECT_EQ(map.free_cell_count(), 9u);
  EXPECT_FALSE(map.start().has_value());
}

TEST(LoadMap, WallBetweenStartAndGoal) {
  const auto map = load_map("biam-map v1\ncell 1\n..G..\n#####\n..S..\n");
  ASSERT_TRUE(map.start() && map.goal());
  EXPECT_EQ(*map.start(), (Point{2.5, 0.5}));
  EXPECT_EQ(*map.goal(), (Point{2.5, 2.5}));
  EXPECT_FALSE(map.segment_free(*map.start(), *map.goal()));
  EXPECT_TRUE(map.cell_occupied(0, 1));
}

TEST(LoadMap, RowsAreListedTopFirst) {
  const auto map = load_map("biam-map v1\ncell 2\n#.\n..\n");
  EXPECT_TRUE(map.cell_occupied(0, 1));
  EXPECT_FALSE(map.cell_occupied(0, 0));
  EXPECT_DOUBLE_EQ(map.width_m(), 4.0);
}

TEST(LoadMap, ErrorsNameLineAndColumn) {
  auto expect_error = [](std::string_view doc, std::size_t line, std::size_t col) {
    try {
      load_map(doc);
      ADD_FAILURE() << "accepted: " << doc;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
      EXPECT_EQ(e.column(), col) << e.what();
    }
  };
  expect_error("biam-map v2\ncell 1\n..\n", 1, 1);
  expect_error("biam-map v1\ncel 1\n..\n", 2, 1);
  expect_error("biam-map v1\ncell -1\n..\n", 2, 6);
  expect_error("biam-map v1\ncell 1\n...\n..\n", 4, 3);
  expect_error("biam-map v1\ncell 1\n...\n.x.\n", 4, 2);
  expect_error("biam-map v1\ncell 1\nS.S\n", 3, 3);
  expect_error("biam-map v1\ncell 1\n..\r\n..\r\n", 3, 3);
}

TEST(LoadMap, SaveRoundTrip) {
  const auto doc = std::string(builtin_scenario_document("maze"));
  EXPECT_EQ(save_map(load_map(doc)), doc);
}

TEST(Scenarios, SizesAndBlockedLineOfSight) {
  const std::array<std::pair<const char*, double>, 3> expected{{{"bug_trap", 100}, {"maze", 100}, {"office", 200}}};
  for (const auto& [name, size] : expected) {
    const auto map = builtin_scenario(name);
    EXPECT_DOUBLE_EQ(map.width_m(), size) << name;
    EXPECT_DOUBLE_EQ(map.height_m(), size) << name;
    ASSERT_TRUE(map.start() && map.goal()) << name;
    EXPECT_LT(map.start()->y, map.goal()->y) << name;
    EXPECT_FALSE(map.segment_free(*map.start(), *map.goal())) << name;
    EXPECT_FALSE(oracle::segment_free_exact(map, *map.start(), *map.goal())) << name;
    EXPECT_FALSE(oracle::segment_free_sampled(map, *map.start(), *map.goal(), 0.125)) << name;
  }
  EXPECT_THROW(builtin_scenario("forest"), Error);
}

TEST(SegmentFree, DegenerateAndSimple) {
  WorldMap map(5, 5, 1.0);
  map.set_cell(2, 2, true);
  EXPECT_TRUE(map.segment_free({0.5, 0.5}, {0.5, 0.5}));
  EXPECT_FALSE(map.segment_free({2.5, 2.5}, {2.5, 2.5}));
  EXPECT_FALSE(map.segment_free({0.5, 2.5}, {4.5, 2.5}));
  EXPECT_TRUE(map.segment_free({0.5, 1.5}, {4.5, 1.5}));
  // Grazing the closed corner of an occupied cell counts as a hit.
  EXPECT_FALSE(map.segment_free({1.0, 1.0}, {2.0, 2.0}));
  EXPECT_FALSE(map.segment_free({0.0, 4.0}, {4.0, 0.0}));
  EXPECT_THROW(map.segment_free({-0.1, 0.0}, {1.0, 1.0}), BoundsError);
  EXPECT_THROW(map.segment_free({1.0, 1.0}, {1.0, 5.01}), BoundsError);
}

TEST(SegmentFree, AgreesWithExactCellOracleAndNeverMissesSampledHits) {
  Rng rng(7);
  for (int m = 0; m < 10; ++m) {
    auto map = random_map(20, 20, 0.12, rng);
    if (m % 2 == 1) map.add_obstacle({uniform(rng, 0, 20), uniform(rng, 0, 20)}, uniform(rng, 0.5, 3.0));
    for (int i = 0; i < 100; ++i) {
      const Point a{uniform(rng, 0, 20), uniform(rng, 0, 20)};
      const Point b{uniform(rng, 0, 20), uniform(rng, 0, 20)};
      const bool got = map.segment_free(a, b);
      EXPECT_EQ(got, oracle::segment_free_exact(map, a, b));
      if (!oracle::segment_free_sampled(map, a, b, map.cell_size() / 8)) EXPECT_FALSE(got);
      EXPECT_EQ(got, map.segment_free(b, a));
    }
  }
}

TEST(SegmentFree, AxisAlignedAndGridLineSegments) {
  Rng rng(11);
  auto map = random_map(12, 12, 0.2, rng);
  for (int i = 0; i < 400; ++i) {
    // Endpoints on the lattice exercise the shared-edge conventions.
    const Point a{static_cast<double>(rng() % 13), static_cast<double>(rng() % 13)};
    const Point b = (i % 2) ? Point{a.x, static_cast<double>(rng() % 13)} : Point{static_cast<double>(rng() % 13), a.y};
    EXPECT_EQ(map.segment_free(a, b), oracle::segment_free_exact(map, a, b)) << a.x << "," << a.y << " " << b.x << "," << b.y;
  }
}

TEST(SegmentFree, FreeSegmentsHaveOnlyFreePoints) {
  Rng rng(3);
  auto map = random_map(30, 30, 0.1, rng);
  map.add_obstacle({15, 15}, 4.0);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const Point a{uniform(rng, 0, 30), uniform(rng, 0, 30)};
    const Point b{uniform(rng, 0, 30), uniform(rng, 0, 30)};
    if (!map.segment_free(a, b)) continue;
    ++checked;
    for (int k = 0; k <= 50; ++k) ASSERT_TRUE(map.is_free(a + (b - a) * (k / 50.0)));
  }
  EXPECT_GT(checked, 50);
}

TEST(Obstacles, AddQueryRemove) {
  WorldMap map(10, 10, 1.0);
  const auto before = map.revision();
  const auto id = map.add_obstacle({5, 5}, 1.5);
  EXPECT_FALSE(map.is_free({5, 5}));
  EXPECT_TRUE(map.is_free({5, 6.5}));  // exactly on the rim is free
  EXPECT_FALSE(map.segment_free({2, 5}, {8, 5}));
  map.add_obstacle({1, 1}, 0.5);
  EXPECT_EQ(map.revision(), before + 2);
  map.remove_obstacle(id);
  EXPECT_TRUE(map.is_free({5, 5}));
  EXPECT_EQ(map.revision(), before + 3);
  EXPECT_EQ(map.static_revision(), 0u);
  EXPECT_THROW(map.remove_obstacle(id), ObstacleError);
  EXPECT_THROW(map.add_obstacle({5, 5}, 0.0), ObstacleError);
  EXPECT_THROW(map.add_obstacle({5, 5}, -1.0), ObstacleError);
  EXPECT_THROW(map.add_obstacle({11, 5}, 1.0), ObstacleError);
}

TEST(Obstacles, MutationAndInverseRestoreOccupancy) {
  Rng rng(5);
  auto map = random_map(15, 15, 0.15, rng);
  std::vector<bool> before;
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 60; ++x) before.push_back(map.is_free({x * 0.25 + 0.1, y * 0.25 + 0.1}));
  std::vector<ObstacleId> ids;
  for (int i = 0; i < 5; ++i) ids.push_back(map.add_obstacle({uniform(rng, 0, 15), uniform(rng, 0, 15)}, uniform(rng, 0.5, 3)));
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) map.remove_obstacle(*it);
  std::size_t k = 0;
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 60; ++x) EXPECT_EQ(map.is_free({x * 0.25 + 0.1, y * 0.25 + 0.1}), before[k++]);
}

TEST(IsFree, ExclusiveWithObstruction) {
  Rng rng(9);
  auto map = random_map(10, 10, 0.3, rng);
  map.add_obstacle({5, 5}, 2.0);
  for (int i = 0; i < 5000; ++i) {
    const Point p{uniform(rng, 0, 10), uniform(rng, 0, 10)};
    const int cx = std::min(9, static_cast<int>(p.x)), cy = std::min(9, static_cast<int>(p.y));
    const bool obstructed = map.cell_occupied(cx, cy) || euclidean(p, {5, 5}) < 2.0;
    EXPECT_NE(map.is_free(p), obstructed);
  }
  EXPECT_FALSE(map.is_free({-1, 3}));
}

TEST(SampleFree, UniformOverQuadrants) {
  WorldMap map(10, 10, 1.0);
  Rng rng(42);
  std::array<int, 4> counts{};
  const int n = 10'000;
  for (int i = 0; i < n; ++i) {
    const auto p = map.sample_free(rng);
    ASSERT_TRUE(map.is_free(p));
    ++counts[(p.x >= 5 ? 1 : 0) + (p.y >= 5 ? 2 : 0)];
  }
  // Binomial standard deviation per quadrant and the chi-square statistic (3 dof).
  const double expected = n / 4.0;
  const double sd = std::sqrt(n * 0.25 * 0.75);
  double chi2 = 0.0;
  for (int c : counts) {
    EXPECT_LT(std::abs(c - expected), 4 * sd);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  EXPECT_LT(chi2, 16.27);  // p = 0.001
}

TEST(SampleFree, SingleFreeCellAndFullMap) {
  WorldMap map(4, 4, 1.0);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      if (!(x == 2 && y == 1)) map.set_cell(x, y, true);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto p = map.sample_free(rng);
    EXPECT_GE(p.x, 2.0);
    EXPECT_LT(p.x, 3.0);
    EXPECT_GE(p.y, 1.0);
    EXPECT_LT(p.y, 2.0);
  }
  map.set_cell(2, 1, true);
  EXPECT_THROW(map.sample_free(rng), NoFreeSpaceError);
}
