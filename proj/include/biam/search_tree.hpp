#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "biam/metrics.hpp"
#include "biam/tree.hpp"

namespace biam {

/// Rewiring work lists of one tree: the root wave (FIFO) and the goal wave
/// (FIFO plus LIFO). Each wave dedups through its own epoch-stamped seen set,
/// which is cleared whenever the wave restarts from the root.
struct RewireQueues {
  std::deque<NodeId> q_root;
  std::deque<NodeId> q_goal;
  std::vector<NodeId> s_goal;

  bool root_seen(NodeId id) const { return stamp(root_stamp, id) == root_epoch; }
  void mark_root(NodeId id) { set_stamp(root_stamp, id, root_epoch); }
  /// Enqueues on q_root unless already seen in the current wave.
  void enqueue_root(NodeId id) {
    if (root_seen(id)) return;
    mark_root(id);
    q_root.push_back(id);
  }
  void restart_root_wave() {
    q_root.clear();
    ++root_epoch;
  }

  bool goal_seen(NodeId id) const { return stamp(goal_stamp, id) == goal_epoch; }
  void mark_goal(NodeId id) { set_stamp(goal_stamp, id, goal_epoch); }
  void restart_goal_wave() {
    q_goal.clear();
    s_goal.clear();
    ++goal_epoch;
  }

  void clear() {
    restart_root_wave();
    restart_goal_wave();
  }

 private:
  static std::uint32_t stamp(const std::vector<std::uint32_t>& v, NodeId id) {
    return static_cast<std::size_t>(id) < v.size() ? v[static_cast<std::size_t>(id)] : 0;
  }
  static void set_stamp(std::vector<std::uint32_t>& v, NodeId id, std::uint32_t epoch) {
    if (static_cast<std::size_t>(id) >= v.size()) v.resize(static_cast<std::size_t>(id) + 1, 0);
    v[static_cast<std::size_t>(id)] = epoch;
  }

  std::vector<std::uint32_t> root_stamp;
  std::vector<std::uint32_t> goal_stamp;
  std::uint32_t root_epoch = 1;
  std::uint32_t goal_epoch = 1;
};

/// A tree together with the point it grows toward (the goal for the forward
/// tree, the frozen start for the reverse tree) and per-node d_A to that point.
class SearchTree {
 public:
  SearchTree(const WorldMap& map, double bucket_size)
      : tree(map.width_m(), map.height_m(), bucket_size) {}

  Tree tree;
  RewireQueues queues;

  /// Drops all nodes and starts over from `root`.
  void reset(Point root, const AssistingMetric& metric);
  /// Sets the growth target and recomputes d_A for every node.
  void set_target(Point target, const AssistingMetric& metric);
  void clear_target();
  bool has_target() const noexcept { return has_target_; }
  Point target() const noexcept { return target_; }

  /// Registers a node created by tree.insert_*.
  void on_insert(NodeId id, const AssistingMetric& metric);

  /// d_A(node, target), +inf without a target.
  double heuristic(NodeId id) const { return h_[static_cast<std::size_t>(id)]; }
  /// Node minimising d_A to the target; ties go to the lowest id.
  NodeId best() const noexcept { return best_; }
  /// Node placed exactly on the target, if any.
  NodeId target_node() const noexcept { return target_node_; }
  bool target_attached() const noexcept { return target_node_ != kNoNode; }
  double target_cost() const;

 private:
  void consider(NodeId id);

  Point target_;
  bool has_target_ = false;
  std::vector<double> h_;
  NodeId best_ = kNoNode;
  NodeId target_node_ = kNoNode;
};

}  // namespace biam
