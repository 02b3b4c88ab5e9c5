#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "biam/bench.hpp"
#include "biam/error.hpp"

using namespace biam;

namespace {

MetricStore& store() {
  static MetricStore s;
  return s;
}

RunStats stat(const std::string& planner, const std::string& scenario, std::uint64_t seed, double search, double length) {
  RunStats r;
  r.planner_id = planner;
  r.scenario = scenario;
  r.seed = seed;
  r.arrived = true;
  r.search_time_s = search;
  r.traveled_length_m = length;
  r.attach_cost_m = length;
  r.sim_time_s = 10.0;
  return r;
}

SuiteConfig small_suite() {
  SuiteConfig s;
  s.planners = {"am-rrt-e", "am-rrt-e-1"};
  s.scenarios = {"maze"};
  s.repetitions = 3;
  s.budget_mode = BudgetMode::deterministic;
  return s;
}

}  // namespace

TEST(PlannerMatrix, TwentyRowsWithFamilyParameters) {
  const auto& rows = planner_matrix();
  ASSERT_EQ(rows.size(), 20u);
  std::set<std::string> ids;
  for (const auto& r : rows) {
    ids.insert(r.id);
    const PlannerConfig& c = r.config;
    EXPECT_EQ(c.name, r.id);
    EXPECT_DOUBLE_EQ(c.t_exp, 0.15);
    EXPECT_DOUBLE_EQ(c.e_max, 5.0);
    const bool rt = r.base.rfind("rt-", 0) == 0;
    EXPECT_EQ(c.assisted, !rt) << r.id;
    EXPECT_DOUBLE_EQ(c.t_root, rt ? 0.003 : 0.002) << r.id;
    EXPECT_DOUBLE_EQ(c.t_goal, rt ? 0.003 : 0.004) << r.id;
    EXPECT_EQ(c.n_max, rt ? 12 : 20) << r.id;
    EXPECT_EQ(c.bidirectional, r.scheme == Scheme::bidirectional || r.scheme == Scheme::both) << r.id;
    EXPECT_EQ(c.new_rewiring, r.scheme == Scheme::new_rewiring || r.scheme == Scheme::both) << r.id;
    EXPECT_EQ(&find_planner(r.base), &find_planner(r.base));
    EXPECT_EQ(find_planner(r.base).scheme, Scheme::original);
  }
  EXPECT_EQ(ids.size(), 20u);
  EXPECT_EQ(find_planner("bi-am-rrt-d").label, "Bi-AM-RRT*(D)");
  EXPECT_EQ(find_planner("am-rrt-e-1").label, "AM-RRT*(E)-1");
  EXPECT_EQ(find_planner("rt-rrt").config.metric, MetricKind::euclidean);
  EXPECT_EQ(find_planner("rt-rrt-d-2").config.metric, MetricKind::diffusion);
  EXPECT_EQ(find_planner("am-rrt-g").config.metric, MetricKind::geodesic);
  EXPECT_THROW(find_planner("rrt-connect"), ConfigError);
  EXPECT_DOUBLE_EQ(default_sigma("bug_trap"), 50.0);
  EXPECT_DOUBLE_EQ(default_sigma("maze"), 30.0);
  EXPECT_DOUBLE_EQ(default_sigma("office"), 30.0);
}

TEST(SuiteFile, ParsesKeysAndComments) {
  const auto s = parse_suite(
      "# nightly\n"
      "biam-suite v1\n"
      "planners = am-rrt-d, bi-am-rrt-d   # two rows\n"
      "scenarios = office\n"
      "seeds = 4, 9\n"
      "budget_mode = deterministic\n"
      "sigma = 40\n"
      "cap_s = 60\n");
  EXPECT_EQ(s.planners, (std::vector<std::string>{"am-rrt-d", "bi-am-rrt-d"}));
  EXPECT_EQ(s.scenarios, (std::vector<std::string>{"office"}));
  EXPECT_EQ(s.repetitions, 2);
  EXPECT_EQ(s.effective_seeds(), (std::vector<std::uint64_t>{4, 9}));
  EXPECT_EQ(s.budget_mode, BudgetMode::deterministic);
  EXPECT_EQ(s.sigma_override, 40.0);
  EXPECT_DOUBLE_EQ(s.cap_s, 60.0);

  const auto d = parse_suite("biam-suite v1\nplanners = rt-rrt\nscenarios = maze\nrepetitions = 3\n");
  EXPECT_EQ(d.effective_seeds(), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(d.budget_mode, BudgetMode::wall_clock);
}

TEST(SuiteFile, Errors) {
  auto line_of = [](const std::string& doc) -> std::size_t {
    try {
      parse_suite(doc);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(""), 1u);
  EXPECT_EQ(line_of("suite v2\n"), 1u);
  EXPECT_EQ(line_of("biam-suite v1\nplanners rt-rrt\n"), 2u);
  EXPECT_EQ(line_of("biam-suite v1\nplanners = rt-rrt\nplanners = am-rrt-d\n"), 3u);
  EXPECT_EQ(line_of("biam-suite v1\n\nspeed = 3\n"), 3u);
  EXPECT_EQ(line_of("biam-suite v1\nrepetitions = many\n"), 2u);
  EXPECT_EQ(line_of("biam-suite v1\nbudget_mode = sometimes\n"), 2u);
  EXPECT_THROW(parse_suite("biam-suite v1\nplanners = nope\nscenarios = maze\n"), ConfigError);
  EXPECT_THROW(parse_suite("biam-suite v1\nplanners = rt-rrt\nscenarios = moon\n"), ConfigError);
  EXPECT_THROW(parse_suite("biam-suite v1\nplanners = rt-rrt\nscenarios = maze\nrepetitions = 3\nseeds = 1, 2\n"),
               ConfigError);
}

TEST(Summary, PercentChangesAgainstTheOriginalRow) {
  std::vector<RunStats> runs;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    runs.push_back(stat("am-rrt-d", "maze", s, 10.0, 100.0));
    runs.push_back(stat("am-rrt-d-1", "maze", s, 6.0, 100.0));
    runs.push_back(stat("am-rrt-d-2", "maze", s, 10.0, 100.0));
  }
  const auto rows = summarize(runs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].modified, "am-rrt-d-1");
  EXPECT_DOUBLE_EQ(rows[0].search_median_pct, -40.0);
  EXPECT_DOUBLE_EQ(rows[0].search_mean_pct, -40.0);
  EXPECT_DOUBLE_EQ(rows[0].length_median_pct, 0.0);
  EXPECT_FALSE(rows[0].flagged);
  EXPECT_EQ(rows[1].modified, "am-rrt-d-2");
  EXPECT_DOUBLE_EQ(rows[1].search_median_pct, 0.0);
  EXPECT_DOUBLE_EQ(percent_change(4.0, 5.0), 25.0);
  EXPECT_TRUE(std::isnan(percent_change(0.0, 5.0)));
}

TEST(Summary, EmptyBaselineIsFlagged) {
  std::vector<RunStats> runs;
  RunStats failed = stat("rt-rrt", "office", 1, 0.0, 0.0);
  failed.arrived = false;
  failed.search_time_s.reset();
  runs.push_back(failed);
  runs.push_back(stat("bi-rt-rrt", "office", 1, 3.0, 200.0));
  const auto rows = summarize(runs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].flagged);
  EXPECT_TRUE(std::isnan(rows[0].search_median_pct));
  const auto cells = summarize_cells(runs);
  EXPECT_EQ(cells[0].attached, 0u);
  EXPECT_TRUE(std::isnan(cells[0].median_search_time_s));
}

TEST(Summary, MedianOfEvenAndOddCounts) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(Suite, RunsEveryCellAndRoundTripsThroughCsv) {
  const auto runs = run_suite(small_suite(), store());
  ASSERT_EQ(runs.size(), 6u);
  EXPECT_EQ(runs[0].planner_id, "am-rrt-e");
  EXPECT_EQ(runs[3].planner_id, "am-rrt-e-1");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].seed, i % 3 + 1);
    EXPECT_TRUE(runs[i].arrived);
    EXPECT_EQ(runs[i].audit_failures, 0u);
    EXPECT_EQ(runs[i].metric_prep_time_s, 0.0);
  }
  std::stringstream csv;
  write_csv(csv, runs);
  const std::string text = csv.str();
  EXPECT_EQ(text.rfind("planner_id,scenario,seed,arrived,search_time_s,traveled_length_m,node_count_at_attach,"
                       "metric_prep_time_s,attach_cost_m,sim_time_s,audit_failures\n",
                       0),
            0u);
  EXPECT_NE(text.find("\n\nplanner_id,scenario,runs,arrived,attached,"), std::string::npos);
  const auto back = read_csv(csv);
  EXPECT_EQ(back, runs);
  EXPECT_EQ(summarize(back), summarize(runs));
}

TEST(Suite, DeterministicCsvIsStableAcrossJobCounts) {
  auto csv_of = [](int jobs) {
    std::ostringstream out;
    write_csv(out, run_suite(small_suite(), store(), jobs));
    return out.str();
  };
  const std::string a = csv_of(1);
  EXPECT_EQ(a, csv_of(1));
  EXPECT_EQ(a, csv_of(3));
}

TEST(Suite, ProgressSeesEveryRun) {
  std::size_t calls = 0, last_total = 0;
  run_suite(small_suite(), store(), 1, [&](std::size_t done, std::size_t total, const RunStats&) {
    ++calls;
    last_total = total;
    EXPECT_LE(done, total);
  });
  EXPECT_EQ(calls, 6u);
  EXPECT_EQ(last_total, 6u);
}

TEST(RunSingle, ObstacleAheadIsInjectedAndAudited) {
  RunSpec spec;
  spec.row = &find_planner("bi-am-rrt-d");
  spec.scenario = "office";
  spec.seed = 2;
  spec.keep_logs = true;
  spec.events.push_back({40, {}, 1.5, 15.0});
  const auto r = run_single(spec, store());
  ASSERT_EQ(r.injected.size(), 1u);
  EXPECT_EQ(r.injected[0].tick, 40u);
  EXPECT_TRUE(r.replan_ticks.has_value());
  EXPECT_TRUE(r.stats.arrived);
  EXPECT_EQ(r.stats.audit_failures, 0u);
  EXPECT_FALSE(r.trajectory_log.empty());
  EXPECT_GT(r.motion.size(), 2u);
}

TEST(SigmaSweep, RejectsBadInputs) {
  SigmaSweepOptions o;
  o.repetitions = 1;
  EXPECT_THROW(sigma_sweep("office", "am-rrt-d", {30}, o, store()), ConfigError);
  EXPECT_THROW(sigma_sweep("office", "bi-am-rrt-d", {4.0}, o, store()), ConfigError);
  EXPECT_THROW(sigma_sweep("office", "nope", {30}, o, store()), ConfigError);
}

TEST(SigmaSweep, CountsRunsPerSigma) {
  SigmaSweepOptions o;
  o.repetitions = 2;
  std::vector<RunStats> runs;
  const auto pts = sigma_sweep("maze", "bi-am-rrt-e", {10, 30}, o, store(), &runs);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(runs.size(), 4u);
  for (const auto& p : pts) {
    EXPECT_EQ(p.runs, 2u);
    EXPECT_LE(p.passed, p.arrived);
    EXPECT_DOUBLE_EQ(p.pass_rate(), static_cast<double>(p.passed) / 2.0);
  }
  EXPECT_DOUBLE_EQ(pts[0].sigma, 10.0);
}
