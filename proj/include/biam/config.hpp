#pragma once

#include <chrono>
#include <cstdint>
#include <string>

#include "biam/metrics.hpp"

namespace biam {

enum class BudgetMode { wall_clock, deterministic };

std::string_view to_string(BudgetMode mode);
BudgetMode budget_mode_from_string(std::string_view text);

/// Virtual prices of planner work in deterministic mode, in microseconds.
struct VirtualCosts {
  std::int64_t expansion_us = 1000;
  std::int64_t rewire_step_us = 200;
};

struct PlannerConfig {
  std::string name = "bi-am-rrt-d";
  double t_exp = 0.15;
  double t_root = 0.002;
  double t_goal = 0.004;
  double e_max = 5.0;
  int n_max = 20;
  double sigma = 30.0;
  double agent_speed = 5.0;
  double goal_tolerance = 0.5;
  MetricKind metric = MetricKind::diffusion;
  /// Goal-directed steps fall back to a free point next to the best node
  /// instead of giving up when the straight step is blocked.
  bool assisted = true;
  bool bidirectional = true;
  bool new_rewiring = true;
  std::uint64_t seed = 1;
  BudgetMode budget_mode = BudgetMode::wall_clock;
  VirtualCosts costs;

  /// Throws ConfigError on non-positive parameters or sigma < e_max.
  void validate() const;
};

/// Time source for expansion slices and rewiring budgets.
///
/// Wall-clock mode reads a steady clock. Deterministic mode advances only when
/// work is charged, so budgets translate into fixed amounts of work.
class WorkClock {
 public:
  WorkClock(BudgetMode mode, VirtualCosts costs) : mode_(mode), costs_(costs) {}

  BudgetMode mode() const noexcept { return mode_; }
  /// Seconds since construction (virtual or real).
  double now() const {
    if (mode_ == BudgetMode::deterministic) return static_cast<double>(virtual_us_) * 1e-6;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }
  void charge_expansion() noexcept { virtual_us_ += costs_.expansion_us; }
  void charge_rewire_step() noexcept { virtual_us_ += costs_.rewire_step_us; }

 private:
  BudgetMode mode_;
  VirtualCosts costs_;
  std::int64_t virtual_us_ = 0;
  std::chrono::steady_clock::time_point origin_ = std::chrono::steady_clock::now();
};

/// Measures one budgeted loop against a WorkClock.
class Stopwatch {
 public:
  explicit Stopwatch(const WorkClock& clock) : clock_(clock), start_(clock.now()) {}
  double elapsed() const { return clock_.now() - start_; }

 private:
  const WorkClock& clock_;
  double start_;
};

/// Work counters accumulated by one planner.
struct Counters {
  std::uint64_t expansions = 0;
  std::uint64_t inserted = 0;
  std::uint64_t rejected_density = 0;
  std::uint64_t rejected_blocked = 0;
  std::uint64_t fallback_steps = 0;
  std::uint64_t ellipse_fallbacks = 0;
  std::uint64_t root_first = 0;
  std::uint64_t root_second = 0;
  std::uint64_t goal_first = 0;
  std::uint64_t goal_second = 0;
  std::uint64_t edge_updates = 0;
  std::uint64_t branch_discards = 0;
  std::uint64_t swaps = 0;
  std::uint64_t aborted_swaps = 0;
  std::uint64_t root_hops = 0;
  std::uint64_t edge_splits = 0;
};

}  // namespace biam
