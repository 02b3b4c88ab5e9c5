#include "biam/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "biam/error.hpp"

namespace biam {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::idle:
      return "idle";
    case Phase::searching:
      return "searching";
    case Phase::tracking:
      return "tracking";
    case Phase::arrived:
      return "arrived";
  }
  return "?";
}

Planner::Planner(const WorldMap& map, AssistingMetric metric, PlannerConfig config, Point start)
    : map_(map),
      metric_(std::move(metric)),
      config_(std::move(config)),
      rng_(config_.seed),
      clock_(config_.budget_mode, config_.costs),
      forward_(map, config_.e_max),
      reverse_(map, config_.e_max),
      agent_(start),
      seen_revision_(map.revision()) {
  config_.validate();
  if (!map.is_free(start)) throw GoalError("start position is not free");
  forward_.reset(start, metric_);
  motion_.push_back({0, start});
}

void Planner::set_agent_speed(double speed) {
  if (!(speed > 0.0) || !std::isfinite(speed)) throw ConfigError("agent speed must be positive");
  config_.agent_speed = speed;
}

void Planner::set_goal(Point goal) {
  if (!map_.is_free(goal)) throw GoalError("goal is not in free space");
  goal_ = goal;
  waypoint_ = forward_.tree.root();
  goal_set_time_ = sim_time_;
  search_time_.reset();
  initial_cost_.reset();
  nodes_at_attach_ = 0;
  forward_.set_target(goal, metric_);
  drop_reverse();
  if (euclidean(agent_, goal) <= config_.goal_tolerance) {
    phase_ = Phase::arrived;
    search_time_ = 0.0;
    return;
  }
  phase_ = Phase::searching;
  if (forward_.target_attached() && std::isfinite(forward_.target_cost())) {
    note_attachment(0.0);
    return;
  }
  if (config_.bidirectional) {
    reverse_.reset(goal, metric_);
    reverse_.set_target(agent_, metric_);
    reverse_active_ = true;
  }
}

void Planner::drop_reverse() {
  reverse_active_ = false;
  reverse_.tree.clear();
  reverse_.queues.clear();
  reverse_.clear_target();
  meet_checked_f_ = 0;
  meet_checked_r_ = 0;
}

void Planner::note_attachment(double elapsed_in_slice) {
  if (search_time_) return;
  search_time_ = sim_time_ - goal_set_time_ + std::min(elapsed_in_slice, config_.t_exp);
  initial_cost_ = forward_.target_cost();
  nodes_at_attach_ = forward_.tree.size();
  phase_ = Phase::tracking;
}

void Planner::expand(SearchTree& st, bool goal_rewiring) {
  clock_.charge_expansion();
  ++counters_.expansions;
  const auto sample = sample_state(st, map_, rng_);
  if (sample.ellipse_fallback) ++counters_.ellipse_fallbacks;
  extend(st, sample, map_, config_, metric_, rng_, counters_);
  RewireContext ctx{st, map_, config_, metric_, clock_, counters_};
  rewire_root(ctx);
  if (goal_rewiring && st.target_attached()) rewire_goal(ctx);
}

void Planner::expand_forward() { expand(forward_, true); }

void Planner::expand_reverse() {
  if (!reverse_active_) return;
  expand(reverse_, false);
}

void Planner::handle_obstacle_change() {
  if (map_.revision() == seen_revision_) return;
  seen_revision_ = map_.revision();
  if (forward_.tree.refresh_blocked_edges(map_) > 0) {
    forward_.queues.restart_root_wave();
    forward_.queues.restart_goal_wave();
  }
  if (reverse_active_ && reverse_.tree.refresh_blocked_edges(map_) > 0) {
    reverse_.queues.restart_root_wave();
  }
  meet_checked_f_ = 0;
  meet_checked_r_ = 0;
}

std::optional<MeetWitness> Planner::closest_partner(NodeId id, const SearchTree& mine, const SearchTree& other,
                                                    NodeId other_limit, bool mine_is_forward) const {
  thread_local std::vector<NodeId> near;
  thread_local std::vector<std::pair<double, NodeId>> ranked;
  const Point p = mine.tree.position(id);
  other.tree.nearby(p, config_.sigma, near);
  ranked.clear();
  for (NodeId o : near) {
    if (o >= other_limit || !std::isfinite(other.tree.cost(o))) continue;
    const double d = euclidean(p, other.tree.position(o));
    if (d < config_.sigma) ranked.emplace_back(d, o);
  }
  std::sort(ranked.begin(), ranked.end());
  for (const auto& [d, o] : ranked) {
    if (map_.segment_free(p, other.tree.position(o))) {
      return mine_is_forward ? MeetWitness{id, o, d} : MeetWitness{o, id, d};
    }
  }
  return std::nullopt;
}

std::optional<MeetWitness> Planner::meet() {
  if (!reverse_active_ || reverse_.tree.empty()) return std::nullopt;
  const auto nf = static_cast<NodeId>(forward_.tree.size());
  const auto nr = static_cast<NodeId>(reverse_.tree.size());
  std::optional<MeetWitness> best;
  auto keep = [&best](const std::optional<MeetWitness>& w) {
    if (!w) return;
    if (!best || std::tie(w->distance, w->forward, w->reverse) < std::tie(best->distance, best->forward, best->reverse)) {
      best = w;
    }
  };
  // New forward nodes against reverse nodes already checked, then new reverse
  // nodes against the whole forward tree: every pair is examined once.
  for (NodeId f = meet_checked_f_; f < nf; ++f) {
    if (std::isfinite(forward_.tree.cost(f))) keep(closest_partner(f, forward_, reverse_, meet_checked_r_, true));
  }
  for (NodeId r = meet_checked_r_; r < nr; ++r) {
    if (std::isfinite(reverse_.tree.cost(r))) keep(closest_partner(r, reverse_, forward_, nf, false));
  }
  meet_checked_f_ = nf;
  meet_checked_r_ = nr;
  return best;
}

bool Planner::swap(const MeetWitness& w) {
  if (!reverse_active_ || !forward_.tree.contains(w.forward) || !reverse_.tree.contains(w.reverse)) return false;
  // Trunk: w.reverse up to the reverse root (the goal). Branches are dropped.
  std::vector<Point> trunk;
  for (NodeId n = w.reverse; n != kNoNode; n = reverse_.tree.parent(n)) trunk.push_back(reverse_.tree.position(n));
  Point prev = forward_.tree.position(w.forward);
  for (const Point& q : trunk) {
    if (!map_.segment_free(prev, q)) {
      ++counters_.aborted_swaps;
      return false;
    }
    prev = q;
  }
  NodeId parent = w.forward;
  for (const Point& q : trunk) {
    parent = forward_.tree.insert_unchecked(q, parent);
    forward_.on_insert(parent, metric_);
    forward_.queues.enqueue_root(parent);
  }
  forward_.queues.restart_goal_wave();
  ++counters_.swaps;
  drop_reverse();
  return true;
}

std::vector<NodeId> Planner::current_path() const {
  if (!forward_.target_attached() || !std::isfinite(forward_.target_cost())) return {};
  return forward_.tree.path(forward_.target_node());
}

std::vector<Point> Planner::current_path_points() const {
  std::vector<Point> out;
  for (NodeId id : current_path()) out.push_back(forward_.tree.position(id));
  return out;
}

void Planner::move_agent(double dt) {
  if (phase_ != Phase::tracking || !goal_ || dt <= 0.0) return;
  Tree& tree = forward_.tree;
  auto hop = [&](NodeId id) {
    tree.set_root(id);
    forward_.queues.restart_root_wave();
    ++counters_.root_hops;
  };
  double remaining = config_.agent_speed * dt;
  int idle = 0;  // consecutive iterations that did not move the agent
  while (remaining > 1e-12 && idle < 8) {
    if (euclidean(agent_, *goal_) <= config_.goal_tolerance) break;
    const auto path = current_path();
    if (path.empty()) break;  // no valid route: hold position
    std::size_t next = 1;
    while (next < path.size() && euclidean(agent_, tree.position(path[next])) <= config_.e_max / 2.0 &&
           map_.segment_free(agent_, tree.position(path[next]))) {
      hop(path[next]);
      ++next;
    }
    // Head for the next path node, else back to the root, else on to the node
    // the agent was already heading for (it lies on a free straight line).
    NodeId target = kNoNode;
    if (next < path.size() && map_.segment_free(agent_, tree.position(path[next]))) {
      target = path[next];
    } else if (map_.segment_free(agent_, tree.position(tree.root()))) {
      target = tree.root();
    } else if (tree.contains(waypoint_) && map_.segment_free(agent_, tree.position(waypoint_))) {
      target = waypoint_;
    } else {
      break;  // boxed in by a new obstacle: halt until replanned
    }
    waypoint_ = target;
    const Point tp = tree.position(target);
    const double d = euclidean(agent_, tp);
    if (d <= 1e-12) {
      if (target == tree.root()) break;
      hop(target);  // standing on a node off the current path: continue from it
      ++idle;
      continue;
    }
    idle = 0;
    const double step = std::min(remaining, d);
    agent_ = step == d ? tp : agent_ + (tp - agent_) * (step / d);
    traveled_ += step;
    remaining -= step;
    motion_.push_back({tick_, agent_});
    // On an edge longer than e_max the root would fall behind: split the edge
    // at the agent and root the tree there.
    const NodeId root = tree.root();
    if (step < d && target != root && tree.parent(target) == root &&
        euclidean(agent_, tree.position(root)) >= config_.e_max / 2.0 &&
        map_.segment_free(tree.position(root), agent_)) {
      const NodeId split = tree.insert_unchecked(agent_, root);
      forward_.on_insert(split, metric_);
      tree.update_edge_unchecked(split, target);
      hop(split);
      ++counters_.edge_splits;
    }
  }
  if (euclidean(agent_, *goal_) <= config_.goal_tolerance) phase_ = Phase::arrived;
}

TickReport Planner::plan_tick() {
  ++tick_;
  handle_obstacle_change();
  TickReport report;
  const auto expansions_before = counters_.expansions;
  if (phase_ == Phase::searching || phase_ == Phase::tracking) {
    const Stopwatch slice(clock_);
    bool forward_turn = true;
    while (slice.elapsed() < config_.t_exp) {
      if (forward_turn || !reverse_active_) {
        expand_forward();
      } else {
        expand_reverse();
      }
      if (reverse_active_) forward_turn = !forward_turn;
      if (forward_.target_attached() && std::isfinite(forward_.target_cost())) {
        note_attachment(slice.elapsed());
        if (reverse_active_) drop_reverse();
      }
    }
    report.slice_elapsed = slice.elapsed();
    if (reverse_active_) {
      if (const auto w = meet(); w && swap(*w)) {
        report.swapped = true;
        note_attachment(config_.t_exp);
      }
    }
  }
  sim_time_ += config_.t_exp;
  move_agent(config_.t_exp);

  report.tick = tick_;
  report.sim_time = sim_time_;
  report.phase = phase_;
  report.cost_goal = cost_goal();
  report.nodes_f = forward_.tree.size();
  report.nodes_r = reverse_.tree.size();
  report.path_nodes = current_path().size();
  report.expansions = counters_.expansions - expansions_before;
  trajectory_.push_back({sim_time_, agent_, phase_, report.cost_goal, report.nodes_f, report.nodes_r});
  return report;
}

void Planner::write_trajectory(std::ostream& out) const {
  char line[200];
  for (const auto& s : trajectory_) {
    std::snprintf(line, sizeof line, "%.3f %.6f %.6f %s %.6f %zu %zu\n", s.t, s.agent.x, s.agent.y,
                  std::string(to_string(s.phase)).c_str(), s.cost_goal, s.nodes_f, s.nodes_r);
    out << line;
  }
}

}  // namespace biam
