#include "biam/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "biam/error.hpp"

namespace biam {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Tree::Tree(double width_m, double height_m, double bucket_size) : bucket_(bucket_size) {
  if (!(bucket_size > 0.0) || !(width_m > 0.0) || !(height_m > 0.0)) throw TreeError("invalid tree bounds");
  bucket_cols_ = static_cast<int>(std::ceil(width_m / bucket_size)) + 1;
  bucket_rows_ = static_cast<int>(std::ceil(height_m / bucket_size)) + 1;
  buckets_.resize(static_cast<std::size_t>(bucket_cols_) * bucket_rows_);
}

const Node& Tree::node(NodeId id) const {
  if (!contains(id)) throw TreeError("unknown node " + std::to_string(id));
  return nodes_[static_cast<std::size_t>(id)];
}

std::pair<int, int> Tree::bucket_coords(Point p) const noexcept {
  const int cx = std::clamp(static_cast<int>(std::floor(p.x / bucket_)), 0, bucket_cols_ - 1);
  const int cy = std::clamp(static_cast<int>(std::floor(p.y / bucket_)), 0, bucket_rows_ - 1);
  return {cx, cy};
}

std::size_t Tree::bucket_of(Point p) const noexcept {
  const auto [cx, cy] = bucket_coords(p);
  return static_cast<std::size_t>(cy) * bucket_cols_ + cx;
}

NodeId Tree::add_root(Point p) {
  if (!nodes_.empty()) throw TreeError("tree already has a root");
  nodes_.push_back(Node{p, kNoNode, {}, 0.0, false});
  root_ = 0;
  buckets_[bucket_of(p)].push_back(0);
  return 0;
}

NodeId Tree::insert_node(const WorldMap& map, Point x, NodeId parent) {
  if (!contains(parent)) throw TreeError("unknown parent " + std::to_string(parent));
  if (!map.segment_free(position(parent), x)) throw TreeError("edge to new node is blocked");
  return insert_unchecked(x, parent);
}

NodeId Tree::insert_unchecked(Point x, NodeId parent) {
  if (!contains(parent)) throw TreeError("unknown parent " + std::to_string(parent));
  const auto id = static_cast<NodeId>(nodes_.size());
  const double c = nodes_[static_cast<std::size_t>(parent)].cost + euclidean(position(parent), x);
  nodes_.push_back(Node{x, parent, {}, c, false});
  nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  buckets_[bucket_of(x)].push_back(id);
  return id;
}

template <class Visit>
void Tree::visit_ring(int cx, int cy, int ring, Visit&& visit) const {
  auto cell = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= bucket_cols_ || y >= bucket_rows_) return;
    for (NodeId id : buckets_[static_cast<std::size_t>(y) * bucket_cols_ + x]) visit(id);
  };
  if (ring == 0) {
    cell(cx, cy);
    return;
  }
  for (int x = cx - ring; x <= cx + ring; ++x) {
    cell(x, cy - ring);
    cell(x, cy + ring);
  }
  for (int y = cy - ring + 1; y <= cy + ring - 1; ++y) {
    cell(cx - ring, y);
    cell(cx + ring, y);
  }
}

NodeId Tree::nearest_node(Point x) const {
  if (nodes_.empty()) return kNoNode;
  const auto [cx, cy] = bucket_coords(x);
  const int max_ring = std::max(bucket_cols_, bucket_rows_);
  NodeId best = kNoNode;
  double best_d = kInf;
  for (int ring = 0; ring <= max_ring; ++ring) {
    visit_ring(cx, cy, ring, [&](NodeId id) {
      const double d = squared_distance(nodes_[static_cast<std::size_t>(id)].position, x);
      if (d < best_d || (d == best_d && id < best)) {
        best_d = d;
        best = id;
      }
    });
    // Anything beyond this ring is at least ring * bucket away.
    if (best != kNoNode) {
      const double reach = ring * bucket_;
      if (best_d <= reach * reach) break;
    }
  }
  return best;
}

std::optional<NodeId> Tree::nearest(Point x, const WorldMap& map) const {
  const NodeId n = nearest_node(x);
  if (n == kNoNode || !map.segment_free(position(n), x)) return std::nullopt;
  return n;
}

void Tree::nearby(Point x, double radius, std::vector<NodeId>& out) const {
  out.clear();
  const double r2 = radius * radius;
  const int lo_x = std::max(0, static_cast<int>(std::floor((x.x - radius) / bucket_)));
  const int hi_x = std::min(bucket_cols_ - 1, static_cast<int>(std::floor((x.x + radius) / bucket_)));
  const int lo_y = std::max(0, static_cast<int>(std::floor((x.y - radius) / bucket_)));
  const int hi_y = std::min(bucket_rows_ - 1, static_cast<int>(std::floor((x.y + radius) / bucket_)));
  for (int by = lo_y; by <= hi_y; ++by) {
    for (int bx = lo_x; bx <= hi_x; ++bx) {
      for (NodeId id : buckets_[static_cast<std::size_t>(by) * bucket_cols_ + bx]) {
        if (squared_distance(nodes_[static_cast<std::size_t>(id)].position, x) <= r2) out.push_back(id);
      }
    }
  }
}

std::vector<NodeId> Tree::nearby(Point x, double radius) const {
  std::vector<NodeId> out;
  nearby(x, radius, out);
  return out;
}

std::size_t Tree::count_within(Point x, double radius, std::size_t limit) const {
  std::size_t count = 0;
  const double r2 = radius * radius;
  const int lo_x = std::max(0, static_cast<int>(std::floor((x.x - radius) / bucket_)));
  const int hi_x = std::min(bucket_cols_ - 1, static_cast<int>(std::floor((x.x + radius) / bucket_)));
  const int lo_y = std::max(0, static_cast<int>(std::floor((x.y - radius) / bucket_)));
  const int hi_y = std::min(bucket_rows_ - 1, static_cast<int>(std::floor((x.y + radius) / bucket_)));
  for (int by = lo_y; by <= hi_y; ++by) {
    for (int bx = lo_x; bx <= hi_x; ++bx) {
      for (NodeId id : buckets_[static_cast<std::size_t>(by) * bucket_cols_ + bx]) {
        if (squared_distance(nodes_[static_cast<std::size_t>(id)].position, x) <= r2 && ++count >= limit) return count;
      }
    }
  }
  return count;
}

std::vector<NodeId> Tree::path(NodeId x) const {
  node(x);
  std::vector<NodeId> out;
  for (NodeId n = x; n != kNoNode; n = nodes_[static_cast<std::size_t>(n)].parent) {
    out.push_back(n);
    if (out.size() > nodes_.size()) throw TreeError("cycle detected while walking to the root");
  }
  std::reverse(out.begin(), out.end());
  return out;
}

double Tree::path_length(NodeId x) const {
  const auto p = path(x);
  double len = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) len += euclidean(position(p[i - 1]), position(p[i]));
  return len;
}

bool Tree::is_ancestor(NodeId ancestor, NodeId x) const {
  std::size_t steps = 0;
  for (NodeId n = x; n != kNoNode; n = nodes_[static_cast<std::size_t>(n)].parent) {
    if (n == ancestor) return true;
    if (++steps > nodes_.size()) throw TreeError("cycle detected while walking to the root");
  }
  return false;
}

void Tree::detach_from_parent(NodeId child) {
  auto& c = nodes_[static_cast<std::size_t>(child)];
  if (c.parent == kNoNode) return;
  auto& siblings = nodes_[static_cast<std::size_t>(c.parent)].children;
  siblings.erase(std::find(siblings.begin(), siblings.end(), child));
}

void Tree::update_edge(const WorldMap& map, NodeId new_parent, NodeId child) {
  if (!contains(new_parent) || !contains(child)) throw TreeError("unknown node in edge update");
  if (!map.segment_free(position(new_parent), position(child))) throw TreeError("new edge is blocked");
  update_edge_unchecked(new_parent, child);
}

void Tree::update_edge_unchecked(NodeId new_parent, NodeId child) {
  if (!contains(new_parent) || !contains(child)) throw TreeError("unknown node in edge update");
  if (child == root_) throw TreeError("the root has no parent edge");
  if (is_ancestor(child, new_parent)) throw TreeError("edge update would create a cycle");
  detach_from_parent(child);
  auto& c = nodes_[static_cast<std::size_t>(child)];
  c.parent = new_parent;
  c.edge_blocked = false;
  nodes_[static_cast<std::size_t>(new_parent)].children.push_back(child);
  recompute_subtree(child);
}

void Tree::recompute_subtree(NodeId top) {
  scratch_.assign(1, top);
  while (!scratch_.empty()) {
    const NodeId id = scratch_.back();
    scratch_.pop_back();
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.parent == kNoNode) {
      n.cost = 0.0;
    } else {
      const auto& p = nodes_[static_cast<std::size_t>(n.parent)];
      n.cost = n.edge_blocked ? kInf : p.cost + euclidean(p.position, n.position);
    }
    for (NodeId c : n.children) scratch_.push_back(c);
  }
}

void Tree::recompute_all() {
  if (root_ != kNoNode) recompute_subtree(root_);
}

void Tree::set_root(NodeId new_root) {
  node(new_root);
  if (new_root == root_) return;
  // Walk new_root -> old root and flip each edge; blocked flags travel with their edge.
  NodeId prev = kNoNode;
  bool prev_flag = false;
  NodeId cur = new_root;
  while (cur != kNoNode) {
    auto& n = nodes_[static_cast<std::size_t>(cur)];
    const NodeId next = n.parent;
    const bool next_flag = n.edge_blocked;
    if (next != kNoNode) {
      auto& siblings = nodes_[static_cast<std::size_t>(next)].children;
      siblings.erase(std::find(siblings.begin(), siblings.end(), cur));
    }
    n.parent = prev;
    n.edge_blocked = prev_flag;
    if (prev != kNoNode) nodes_[static_cast<std::size_t>(prev)].children.push_back(cur);
    prev = cur;
    prev_flag = next_flag;
    cur = next;
  }
  root_ = new_root;
  recompute_all();
}

std::size_t Tree::refresh_blocked_edges(const WorldMap& map) {
  std::size_t changed = 0;
  for (auto& n : nodes_) {
    if (n.parent == kNoNode) continue;
    const bool blocked = !map.segment_free(nodes_[static_cast<std::size_t>(n.parent)].position, n.position);
    if (blocked != n.edge_blocked) {
      n.edge_blocked = blocked;
      ++changed;
    }
  }
  if (changed > 0) recompute_all();
  return changed;
}

std::size_t Tree::blocked_edge_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.edge_blocked; }));
}

void Tree::clear() {
  nodes_.clear();
  root_ = kNoNode;
  for (auto& b : buckets_) b.clear();
}

void Tree::dump(std::ostream& out) const {
  char line[160];
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    std::snprintf(line, sizeof line, "%zu %d %.6f %.6f %.6f\n", i, n.parent, n.position.x, n.position.y, n.cost);
    out << line;
  }
}

}  // namespace biam
