#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biam/config.hpp"
#include "biam/metrics.hpp"
#include "biam/planner.hpp"
#include "biam/world.hpp"

namespace biam {

/// Schemes: the original planner, bidirectional growth only (-1), the
/// new rewiring only (-2), and both (Bi-).
enum class Scheme { original, bidirectional, new_rewiring, both };

std::string_view to_string(Scheme scheme);

struct PlannerRow {
  std::string id;     // e.g. "bi-am-rrt-d"
  std::string label;  // e.g. "Bi-AM-RRT*(D)"
  std::string base;   // id of the original row, e.g. "am-rrt-d"
  Scheme scheme = Scheme::original;
  PlannerConfig config;
};

/// The 20 rows, grouped by base planner in the order RT-RRT*, RT-RRT*(D),
/// AM-RRT*(E), AM-RRT*(D), AM-RRT*(G).
const std::vector<PlannerRow>& planner_matrix();
/// Throws ConfigError for an unknown id.
const PlannerRow& find_planner(std::string_view id);
/// Connection distance used on a builtin scenario when none is given.
double default_sigma(std::string_view scenario);

/// Lazily prepared maps and metrics, one per (scenario, metric kind).
class MetricStore {
 public:
  explicit MetricStore(CacheOptions cache = {}) : cache_(std::move(cache)) {}

  const WorldMap& map(const std::string& scenario);
  const PreparedMetric& metric(const std::string& scenario, MetricKind kind);

  struct PrepRecord {
    std::string scenario;
    MetricKind kind;
    double seconds;
    bool from_cache;
  };
  std::vector<PrepRecord> prep_records() const;

 private:
  CacheOptions cache_;
  std::map<std::string, WorldMap> maps_;
  std::map<std::pair<std::string, MetricKind>, PreparedMetric> metrics_;
};

/// Disc dropped on the map right before the given tick. With `ahead_m` set the
/// centre is not fixed but placed that far along the current path from the
/// agent; the injection is skipped when the path is too short for it.
struct ObstacleEvent {
  std::uint64_t tick = 0;
  Point center;
  double radius = 1.0;
  std::optional<double> ahead_m;
};

struct RunStats {
  std::string planner_id;
  std::string scenario;
  std::uint64_t seed = 0;
  bool arrived = false;
  std::optional<double> search_time_s;
  double traveled_length_m = 0.0;
  std::size_t node_count_at_attach = 0;
  double metric_prep_time_s = 0.0;
  std::optional<double> attach_cost_m;
  double sim_time_s = 0.0;
  std::size_t audit_failures = 0;

  friend bool operator==(const RunStats&, const RunStats&) = default;
};

struct RunSpec {
  const PlannerRow* row = nullptr;
  std::string scenario;
  std::uint64_t seed = 1;
  BudgetMode budget_mode = BudgetMode::deterministic;
  std::optional<double> sigma;
  double cap_s = 120.0;
  std::vector<ObstacleEvent> events;
  bool keep_logs = false;
};

struct InjectedObstacle {
  std::uint64_t tick = 0;
  DiscObstacle disc;
};

struct RunResult {
  RunStats stats;
  std::vector<InjectedObstacle> injected;
  /// Ticks from the first injection until a finite route existed again.
  std::optional<std::uint64_t> replan_ticks;
  // Filled with keep_logs.
  std::vector<MotionVertex> motion;
  std::string trajectory_log;
};

/// Runs one planner from S to G until arrival or the sim-time cap. Each motion
/// segment is checked against the map as it stood during its tick.
RunResult run_single(const RunSpec& spec, MetricStore& store);

struct SuiteConfig {
  std::vector<std::string> planners;
  std::vector<std::string> scenarios;
  int repetitions = 25;
  std::vector<std::uint64_t> seeds;  // 1..repetitions when empty
  BudgetMode budget_mode = BudgetMode::wall_clock;
  std::optional<double> sigma_override;
  double cap_s = 120.0;

  /// Throws ConfigError on unknown planners or scenarios and on a seed list
  /// whose length differs from repetitions.
  void validate() const;
  std::vector<std::uint64_t> effective_seeds() const;
};

/// Parses a `biam-suite v1` document of `key = value` lines.
SuiteConfig parse_suite(std::string_view document);

/// Called after every finished run with (done, total, stats).
using Progress = std::function<void(std::size_t, std::size_t, const RunStats&)>;

/// Every (planner, scenario, seed) cell in suite order. Cells are spread over
/// `jobs` threads; results do not depend on the thread count in
/// deterministic mode.
std::vector<RunStats> run_suite(const SuiteConfig& suite, MetricStore& store, int jobs = 1,
                                const Progress& progress = {});

struct CellSummary {
  std::string planner_id;
  std::string scenario;
  std::size_t runs = 0;
  std::size_t arrived = 0;
  std::size_t attached = 0;
  double mean_search_time_s = 0.0;  // over attached runs
  double median_search_time_s = 0.0;
  double mean_traveled_length_m = 0.0;  // over arrived runs
  double median_traveled_length_m = 0.0;

  friend bool operator==(const CellSummary&, const CellSummary&) = default;
};

double median(std::vector<double> values);
/// Cells in order of first appearance. Empty averages are NaN.
std::vector<CellSummary> summarize_cells(const std::vector<RunStats>& stats);

/// Percent change of one modified scheme against the original scheme of the
/// same base planner in one scenario.
struct Comparison {
  std::string scenario;
  std::string base;
  std::string modified;
  double search_median_pct = 0.0;
  double search_mean_pct = 0.0;
  double length_median_pct = 0.0;
  double length_mean_pct = 0.0;
  /// Set when either side has no usable run or the baseline is zero; the
  /// percentages are then NaN.
  bool flagged = false;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

double percent_change(double baseline, double modified);
std::vector<Comparison> summarize(const std::vector<RunStats>& stats);

/// Fixed-column CSV: one row per run, a blank line, then the summary block.
void write_csv(std::ostream& out, const std::vector<RunStats>& stats);
/// Reads back the run rows written by write_csv.
std::vector<RunStats> read_csv(std::istream& in);
void write_comparisons(std::ostream& out, const std::vector<Comparison>& rows);

struct SigmaPoint {
  double sigma = 0.0;
  std::size_t runs = 0;
  std::size_t arrived = 0;
  std::size_t audit_failures = 0;  // runs with at least one failure
  std::size_t passed = 0;          // arrived without audit failure
  double pass_rate() const { return runs == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(runs); }
};

struct SigmaSweepOptions {
  int repetitions = 25;
  BudgetMode budget_mode = BudgetMode::deterministic;
  double cap_s = 120.0;
  std::vector<ObstacleEvent> events;
  int jobs = 1;
};

/// Throws ConfigError for a planner without bidirectional growth or for a
/// sigma the config rejects.
std::vector<SigmaPoint> sigma_sweep(const std::string& scenario, const std::string& planner_id,
                                    const std::vector<double>& sigmas, const SigmaSweepOptions& options,
                                    MetricStore& store, std::vector<RunStats>* runs = nullptr);

}  // namespace biam
