#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "biam/geometry.hpp"
#include "biam/world.hpp"

namespace biam {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct Node {
  Point position;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  /// Euclidean length of the path to the root; +inf below a blocked edge.
  double cost = 0.0;
  /// The edge to the parent crosses an obstacle at the current map revision.
  bool edge_blocked = false;
};

/// Rooted tree with a uniform bucket index over node positions.
///
/// Node ids are dense indices and stay valid until clear(). Costs are kept
/// eagerly: cost(n) = cost(parent) + |parent - n| for every node whose path
/// to the root is unobstructed, and +inf otherwise.
class Tree {
 public:
  Tree(double width_m, double height_m, double bucket_size);

  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t size() const noexcept { return nodes_.size(); }
  NodeId root() const noexcept { return root_; }
  bool contains(NodeId id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size(); }

  const Node& node(NodeId id) const;
  Point position(NodeId id) const { return node(id).position; }
  NodeId parent(NodeId id) const { return node(id).parent; }
  double cost(NodeId id) const { return node(id).cost; }

  /// Starts a tree; throws TreeError if it already has nodes.
  NodeId add_root(Point p);
  /// New leaf under `parent`; throws TreeError on a missing parent or a blocked edge.
  NodeId insert_node(const WorldMap& map, Point x, NodeId parent);
  /// As insert_node for callers that already verified the edge.
  NodeId insert_unchecked(Point x, NodeId parent);

  /// d_E-nearest node (lowest id on ties), without any collision check.
  NodeId nearest_node(Point x) const;
  /// The d_E-nearest node if the segment to it is free, otherwise nothing.
  std::optional<NodeId> nearest(Point x, const WorldMap& map) const;
  /// Every node with |node - x| <= radius.
  std::vector<NodeId> nearby(Point x, double radius) const;
  void nearby(Point x, double radius, std::vector<NodeId>& out) const;
  /// Number of nodes within radius, counting stops at `limit`.
  std::size_t count_within(Point x, double radius, std::size_t limit) const;

  /// Root-to-x node sequence.
  std::vector<NodeId> path(NodeId x) const;
  /// Length of path(x) summed segment by segment.
  double path_length(NodeId x) const;
  bool is_ancestor(NodeId ancestor, NodeId x) const;

  /// Reparents `child` under `new_parent` and refreshes the subtree costs.
  /// Throws TreeError for a cycle or a blocked edge.
  void update_edge(const WorldMap& map, NodeId new_parent, NodeId child);
  void update_edge_unchecked(NodeId new_parent, NodeId child);

  /// Reverses the parent links on the old-root to new-root path.
  void set_root(NodeId new_root);

  /// Rechecks every edge against the map; returns how many edges changed state.
  std::size_t refresh_blocked_edges(const WorldMap& map);
  std::size_t blocked_edge_count() const noexcept;

  void clear();

  /// Writes `id parent_id x y cost` per node, root parent as -1.
  void dump(std::ostream& out) const;

 private:
  std::size_t bucket_of(Point p) const noexcept;
  std::pair<int, int> bucket_coords(Point p) const noexcept;
  void recompute_subtree(NodeId top);
  void recompute_all();
  void detach_from_parent(NodeId child);
  template <class Visit>
  void visit_ring(int cx, int cy, int ring, Visit&& visit) const;

  std::vector<Node> nodes_;
  NodeId root_ = kNoNode;
  double bucket_;
  int bucket_cols_;
  int bucket_rows_;
  std::vector<std::vector<NodeId>> buckets_;
  std::vector<NodeId> scratch_;
};

}  // namespace biam
