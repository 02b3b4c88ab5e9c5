#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "biam/bench.hpp"
#include "biam/error.hpp"
#include "biam/planner.hpp"
#include "oracles/segment.hpp"
#include "oracles/tree_check.hpp"

using namespace biam;

namespace {

PlannerConfig deterministic(const std::string& id, std::uint64_t seed) {
  PlannerConfig c = find_planner(id).config;
  c.seed = seed;
  c.budget_mode = BudgetMode::deterministic;
  return c;
}

MetricStore& store() {
  static MetricStore s;
  return s;
}

// Every edge of a tree on a static map must be collision-free.
std::string check_edges(const Tree& t, const WorldMap& map) {
  for (NodeId i = 0; i < static_cast<NodeId>(t.size()); ++i) {
    if (i == t.root()) continue;
    if (!oracle::segment_free_exact(map, t.position(t.parent(i)), t.position(i))) {
      return "edge into " + std::to_string(i) + " crosses an obstacle";
    }
  }
  return "";
}

}  // namespace

TEST(Planner, GoalAndStartErrors) {
  WorldMap map(20, 20, 1.0);
  map.set_cell(10, 10, true);
  PlannerConfig config;
  config.budget_mode = BudgetMode::deterministic;
  EXPECT_THROW(Planner(map, AssistingMetric::euclidean_metric(), config, {10.5, 10.5}), GoalError);
  Planner p(map, AssistingMetric::euclidean_metric(), config, {2, 2});
  EXPECT_THROW(p.set_goal({10.5, 10.5}), GoalError);
  EXPECT_THROW(p.set_goal({25, 5}), GoalError);
  EXPECT_EQ(p.phase(), Phase::idle);
  const auto r = p.plan_tick();
  EXPECT_EQ(r.expansions, 0u);
  EXPECT_EQ(p.forward().tree.size(), 1u);
}

TEST(Planner, DeterministicRunsMatch) {
  const WorldMap& map = store().map("maze");
  const auto& metric = store().metric("maze", MetricKind::diffusion).metric;
  auto run = [&] {
    Planner p(map, metric, deterministic("bi-am-rrt-d", 7), *map.start());
    p.set_goal(*map.goal());
    std::vector<TickReport> reports;
    while (p.phase() != Phase::arrived && p.tick_index() < 400) reports.push_back(p.plan_tick());
    std::ostringstream log;
    p.write_trajectory(log);
    return std::make_pair(reports, log.str());
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.first.back().phase, Phase::arrived);
}

TEST(Planner, InvariantsHoldAfterEveryTick) {
  for (const char* id : {"bi-am-rrt-d", "rt-rrt", "am-rrt-e-1", "am-rrt-g-2"}) {
    for (std::uint64_t seed : {1}) {
      const WorldMap& map = store().map("bug_trap");
      const PlannerConfig config = deterministic(id, seed);
      Planner p(map, store().metric("bug_trap", config.metric).metric, config, *map.start());
      p.set_goal(*map.goal());
      double last = kInfinity;
      while (p.phase() != Phase::arrived && p.tick_index() < 800) {
        const auto r = p.plan_tick();
        ASSERT_EQ(oracle::check_tree(p.forward().tree, &map), "") << id << " tick " << r.tick;
        ASSERT_EQ(check_edges(p.forward().tree, map), "") << id << " tick " << r.tick;
        if (p.reverse_active()) {
          ASSERT_EQ(oracle::check_tree(p.reverse().tree, &map), "") << id << " tick " << r.tick;
          ASSERT_EQ(check_edges(p.reverse().tree, map), "") << id << " tick " << r.tick;
        }
        if (p.phase() == Phase::tracking) {
          ASSERT_LE(euclidean(p.agent(), p.forward().tree.position(p.forward().tree.root())), config.e_max)
              << id << " tick " << r.tick;
        }
        // Static map: the goal cost never rises from one tick to the next.
        if (p.phase() != Phase::arrived) ASSERT_LE(r.cost_goal, last + 1e-9) << id << " tick " << r.tick;
        last = r.cost_goal;
      }
      EXPECT_EQ(p.phase(), Phase::arrived) << id << " seed " << seed;
      for (std::size_t i = 1; i < p.motion().size(); ++i) {
        EXPECT_TRUE(oracle::segment_free_exact(map, p.motion()[i - 1].p, p.motion()[i].p)) << id;
      }
    }
  }
}

TEST(Planner, MeetAndSwapPostconditions) {
  const WorldMap& map = store().map("office");
  const PlannerConfig config = deterministic("bi-am-rrt-d", 3);
  Planner p(map, store().metric("office", MetricKind::diffusion).metric, config, *map.start());
  p.set_goal(*map.goal());
  ASSERT_TRUE(p.reverse_active());
  std::optional<MeetWitness> w;
  for (int i = 0; i < 5000 && !w; ++i) {
    p.expand_forward();
    p.expand_reverse();
    if (i % 50 == 49) w = p.meet();
  }
  ASSERT_TRUE(w.has_value());
  const Point f = p.forward().tree.position(w->forward);
  const Point r = p.reverse().tree.position(w->reverse);
  EXPECT_LT(w->distance, config.sigma);
  EXPECT_DOUBLE_EQ(w->distance, euclidean(f, r));
  EXPECT_TRUE(oracle::segment_free_exact(map, f, r));
  const double through = p.forward().tree.cost(w->forward) + w->distance + p.reverse().tree.path_length(w->reverse);
  ASSERT_TRUE(p.swap(*w));
  EXPECT_FALSE(p.reverse_active());
  EXPECT_TRUE(p.reverse().tree.empty());
  ASSERT_TRUE(p.forward().target_attached());
  EXPECT_NEAR(p.cost_goal(), through, 1e-9);
  EXPECT_EQ(p.forward().tree.position(p.forward().target_node()), *map.goal());
  EXPECT_EQ(oracle::check_tree(p.forward().tree, &map), "");
  EXPECT_EQ(check_edges(p.forward().tree, map), "");
}

TEST(Planner, SwapInsideATickSetsSearchTime) {
  const WorldMap& map = store().map("maze");
  Planner p(map, store().metric("maze", MetricKind::diffusion).metric, deterministic("bi-am-rrt-d", 4), *map.start());
  p.set_goal(*map.goal());
  while (p.phase() == Phase::searching && p.tick_index() < 400) {
    const auto r = p.plan_tick();
    if (r.swapped) {
      EXPECT_TRUE(std::isfinite(r.cost_goal));
      EXPECT_EQ(r.nodes_r, 0u);
      ASSERT_TRUE(p.search_time().has_value());
      // Charged up to the end of the slice that produced the meeting.
      EXPECT_NEAR(*p.search_time(), r.sim_time, 1e-9);
    }
  }
  EXPECT_NE(p.phase(), Phase::searching);
  EXPECT_GT(p.counters().swaps, 0u);
}

TEST(Planner, UnidirectionalSearchTimeIsInsideTheSlice) {
  const WorldMap& map = store().map("maze");
  Planner p(map, store().metric("maze", MetricKind::diffusion).metric, deterministic("am-rrt-d", 5), *map.start());
  p.set_goal(*map.goal());
  TickReport r;
  while (p.phase() == Phase::searching) r = p.plan_tick();
  ASSERT_TRUE(p.search_time().has_value());
  EXPECT_FALSE(p.reverse_active());
  EXPECT_LE(*p.search_time(), r.sim_time + 1e-12);
  EXPECT_GT(*p.search_time(), r.sim_time - p.config().t_exp);
  EXPECT_EQ(p.counters().swaps, 0u);
}

TEST(Planner, NewGoalAfterArrivalSearchesAgain) {
  WorldMap map(60, 40, 1.0);
  for (int y = 0; y < 30; ++y) map.set_cell(30, y, true);
  PlannerConfig config = find_planner("bi-am-rrt-e").config;
  config.budget_mode = BudgetMode::deterministic;
  Planner p(map, AssistingMetric::euclidean_metric(), config, {5, 5});
  p.set_goal({55, 5});
  while (p.phase() != Phase::arrived && p.tick_index() < 400) p.plan_tick();
  ASSERT_EQ(p.phase(), Phase::arrived);
  EXPECT_LE(euclidean(p.agent(), {55, 5}), config.goal_tolerance);
  p.set_goal({5, 35});
  EXPECT_NE(p.phase(), Phase::arrived);
  EXPECT_FALSE(p.search_time().has_value());
  while (p.phase() != Phase::arrived && p.tick_index() < 800) p.plan_tick();
  EXPECT_EQ(p.phase(), Phase::arrived);
  // Setting the goal on the agent counts as arrived at once.
  p.set_goal(p.agent());
  EXPECT_EQ(p.phase(), Phase::arrived);
  EXPECT_EQ(p.search_time(), 0.0);
}

TEST(Planner, ObstacleOnThePathIsAvoided) {
  WorldMap map(60, 30, 1.0);
  PlannerConfig config = find_planner("bi-am-rrt-e").config;
  config.budget_mode = BudgetMode::deterministic;
  config.seed = 9;
  Planner p(map, AssistingMetric::euclidean_metric(), config, {5, 15});
  p.set_goal({55, 15});
  while (p.phase() == Phase::searching) p.plan_tick();
  // Drop a disc on the path ahead; its edges must be flagged and the cost
  // poisoned until a detour is found.
  const auto path = p.current_path_points();
  ASSERT_GE(path.size(), 3u);
  const Point mid{30, 15};
  const ObstacleId disc = map.add_obstacle(mid, 3.0);
  const auto injected = p.tick_index();
  std::uint64_t replanned = 0;
  while (p.phase() != Phase::arrived && p.tick_index() < 600) {
    const auto r = p.plan_tick();
    ASSERT_EQ(oracle::check_tree(p.forward().tree, &map), "");
    if (!replanned && std::isfinite(r.cost_goal)) replanned = r.tick;
  }
  EXPECT_EQ(p.phase(), Phase::arrived);
  EXPECT_GT(replanned, injected);
  EXPECT_LE(replanned - injected, 50u);
  for (std::size_t i = 1; i < p.motion().size(); ++i) {
    EXPECT_TRUE(oracle::segment_free_exact(map, p.motion()[i - 1].p, p.motion()[i].p));
  }
  map.remove_obstacle(disc);
}
