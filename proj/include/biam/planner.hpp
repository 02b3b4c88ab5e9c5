#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "biam/config.hpp"
#include "biam/random.hpp"
#include "biam/rewiring.hpp"
#include "biam/sampling.hpp"
#include "biam/search_tree.hpp"

namespace biam {

enum class Phase { idle, searching, tracking, arrived };

std::string_view to_string(Phase phase);

struct TickReport {
  std::uint64_t tick = 0;
  double sim_time = 0.0;  // after the tick
  Phase phase = Phase::idle;
  double cost_goal = kInfinity;
  std::size_t nodes_f = 0;
  std::size_t nodes_r = 0;
  std::size_t path_nodes = 0;
  double slice_elapsed = 0.0;
  std::uint64_t expansions = 0;
  bool swapped = false;

  friend bool operator==(const TickReport&, const TickReport&) = default;
};

/// One line of the trajectory log.
struct TrajectorySample {
  double t = 0.0;
  Point agent;
  Phase phase = Phase::idle;
  double cost_goal = kInfinity;
  std::size_t nodes_f = 0;
  std::size_t nodes_r = 0;
};

/// A point the agent passed through, with the tick that moved it there.
struct MotionVertex {
  std::uint64_t tick = 0;
  Point p;
};

/// Forward/reverse node pair that passed the connection test.
struct MeetWitness {
  NodeId forward = kNoNode;
  NodeId reverse = kNoNode;
  double distance = 0.0;
};

/// Real-time planner: a forward tree rooted at the agent, an optional reverse
/// tree rooted at the goal, and an agent that follows the forward path.
///
/// The map is owned by the caller and may gain or lose obstacles between
/// ticks; the planner notices through the map revision.
class Planner {
 public:
  Planner(const WorldMap& map, AssistingMetric metric, PlannerConfig config, Point start);

  /// Throws GoalError for an occupied or out-of-map goal.
  void set_goal(Point goal);
  /// One outer iteration: expansion slice, fusion test, agent motion.
  TickReport plan_tick();

  // Individual steps, exposed for tests.
  void expand_forward();
  void expand_reverse();
  std::optional<MeetWitness> meet();
  bool swap(const MeetWitness& witness);
  void move_agent(double dt);
  void handle_obstacle_change();

  Phase phase() const noexcept { return phase_; }
  Point agent() const noexcept { return agent_; }
  const std::optional<Point>& goal() const noexcept { return goal_; }
  const PlannerConfig& config() const noexcept { return config_; }
  const AssistingMetric& metric() const noexcept { return metric_; }
  const SearchTree& forward() const noexcept { return forward_; }
  const SearchTree& reverse() const noexcept { return reverse_; }
  bool reverse_active() const noexcept { return reverse_active_; }
  double cost_goal() const { return forward_.target_cost(); }
  /// Root-to-goal node ids of the forward tree, empty without a finite path.
  std::vector<NodeId> current_path() const;
  std::vector<Point> current_path_points() const;

  std::uint64_t tick_index() const noexcept { return tick_; }
  double sim_time() const noexcept { return sim_time_; }
  std::optional<double> search_time() const noexcept { return search_time_; }
  std::optional<double> initial_path_cost() const noexcept { return initial_cost_; }
  std::size_t nodes_at_attach() const noexcept { return nodes_at_attach_; }
  double traveled() const noexcept { return traveled_; }
  const Counters& counters() const noexcept { return counters_; }
  const std::vector<TrajectorySample>& trajectory() const noexcept { return trajectory_; }
  /// Every corner of the agent's polyline, starting at the start position.
  const std::vector<MotionVertex>& motion() const noexcept { return motion_; }
  void set_agent_speed(double speed);

  /// `t x y phase cost_goal nodes_f nodes_r`, one line per tick.
  void write_trajectory(std::ostream& out) const;

 private:
  void expand(SearchTree& st, bool goal_rewiring);
  void note_attachment(double elapsed_in_slice);
  void drop_reverse();
  std::optional<MeetWitness> closest_partner(NodeId id, const SearchTree& mine, const SearchTree& other,
                                             NodeId other_limit, bool mine_is_forward) const;

  const WorldMap& map_;
  AssistingMetric metric_;
  PlannerConfig config_;
  Rng rng_;
  WorkClock clock_;
  Counters counters_;

  SearchTree forward_;
  SearchTree reverse_;
  bool reverse_active_ = false;
  NodeId meet_checked_f_ = 0;
  NodeId meet_checked_r_ = 0;

  Point agent_;
  NodeId waypoint_ = kNoNode;
  std::optional<Point> goal_;
  Phase phase_ = Phase::idle;
  std::uint64_t seen_revision_ = 0;

  std::uint64_t tick_ = 0;
  double sim_time_ = 0.0;
  double goal_set_time_ = 0.0;
  std::optional<double> search_time_;
  std::optional<double> initial_cost_;
  std::size_t nodes_at_attach_ = 0;
  double traveled_ = 0.0;
  std::vector<TrajectorySample> trajectory_;
  std::vector<MotionVertex> motion_;
};

}  // namespace biam
