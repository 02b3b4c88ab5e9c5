#include "biam/search_tree.hpp"

namespace biam {

void SearchTree::reset(Point root, const AssistingMetric& metric) {
  tree.clear();
  queues.clear();
  h_.clear();
  best_ = kNoNode;
  target_node_ = kNoNode;
  on_insert(tree.add_root(root), metric);
}

void SearchTree::set_target(Point target, const AssistingMetric& metric) {
  target_ = target;
  has_target_ = true;
  best_ = kNoNode;
  target_node_ = kNoNode;
  queues.restart_goal_wave();
  for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
    h_[static_cast<std::size_t>(id)] = metric.distance(tree.position(id), target_);
    consider(id);
  }
}

void SearchTree::clear_target() {
  has_target_ = false;
  best_ = kNoNode;
  target_node_ = kNoNode;
  queues.restart_goal_wave();
  std::fill(h_.begin(), h_.end(), kInfinity);
}

void SearchTree::on_insert(NodeId id, const AssistingMetric& metric) {
  if (static_cast<std::size_t>(id) >= h_.size()) h_.resize(static_cast<std::size_t>(id) + 1, kInfinity);
  if (!has_target_) return;
  h_[static_cast<std::size_t>(id)] = metric.distance(tree.position(id), target_);
  consider(id);
}

void SearchTree::consider(NodeId id) {
  if (target_node_ == kNoNode && tree.position(id) == target_) target_node_ = id;
  if (best_ == kNoNode || heuristic(id) < heuristic(best_)) best_ = id;
}

double SearchTree::target_cost() const { return target_node_ == kNoNode ? kInfinity : tree.cost(target_node_); }

}  // namespace biam
