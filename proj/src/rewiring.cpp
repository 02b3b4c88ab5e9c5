#include "biam/rewiring.hpp"

#include <cmath>
#include <vector>

#include "biam/sampling.hpp"

namespace biam {

namespace {

std::vector<NodeId>& scratch() {
  thread_local std::vector<NodeId> v;
  return v;
}

NodeId take_front(std::deque<NodeId>& q) {
  const NodeId id = q.front();
  q.pop_front();
  return id;
}

NodeId take_top(std::vector<NodeId>& s) {
  const NodeId id = s.back();
  s.pop_back();
  return id;
}

// Offers x as a parent to each neighbour; returns through `visit` every
// neighbour so the caller can schedule it.
template <class Visit>
void relax_from(RewireContext& ctx, NodeId x, Visit&& visit) {
  Tree& tree = ctx.st.tree;
  auto& near = scratch();
  tree.nearby(tree.position(x), ctx.config.e_max, near);
  const double cx = tree.cost(x);
  const Point px = tree.position(x);
  for (NodeId n : near) {
    if (n == x) continue;
    const double c_new = cx + euclidean(px, tree.position(n));
    if (c_new < tree.cost(n) && ctx.map.segment_free(px, tree.position(n)) && !tree.is_ancestor(n, x)) {
      tree.update_edge_unchecked(x, n);
      ++ctx.counters.edge_updates;
    }
    visit(n);
  }
}

}  // namespace

void rewire_root(RewireContext& ctx) {
  auto& q = ctx.st.queues;
  if (ctx.st.tree.empty()) return;
  if (q.q_root.empty()) {
    q.restart_root_wave();
    q.enqueue_root(ctx.st.tree.root());
  }
  const Stopwatch watch(ctx.clock);
  while (watch.elapsed() < ctx.config.t_root && !q.q_root.empty()) {
    if (!ctx.config.new_rewiring || q.q_root.size() <= 2) {
      rewire_root_first(ctx);
    } else {
      rewire_root_second(ctx);
    }
    ctx.clock.charge_rewire_step();
  }
}

void rewire_root_first(RewireContext& ctx) {
  auto& q = ctx.st.queues;
  if (q.q_root.empty()) return;
  const NodeId x_r = take_front(q.q_root);
  if (!ctx.st.tree.contains(x_r)) return;
  ++ctx.counters.root_first;
  relax_from(ctx, x_r, [&q](NodeId n) { q.enqueue_root(n); });
}

void rewire_root_second(RewireContext& ctx) {
  auto& q = ctx.st.queues;
  Tree& tree = ctx.st.tree;
  if (q.q_root.size() < 2) return;
  const NodeId x_r1 = take_front(q.q_root);
  const NodeId x_r2 = take_front(q.q_root);
  if (!tree.contains(x_r1) || !tree.contains(x_r2)) return;
  ++ctx.counters.root_second;
  // Pricing c_new = Cost(x_r1) + d(x_r2, x_near) + d(x_r1, x_r2) could never
  // undercut c_old = Cost(x_r1); the shortcut prices reaching x_r1 through
  // x_near instead.
  auto& near = scratch();
  tree.nearby(tree.position(x_r2), ctx.config.e_max, near);
  const Point p1 = tree.position(x_r1);
  for (NodeId x_near : near) {
    if (x_near != x_r1 && x_r1 != tree.root()) {
      const double c_old = tree.cost(x_r1);
      const double c_new = tree.cost(x_near) + euclidean(tree.position(x_near), p1);
      if (c_new < c_old && ctx.map.segment_free(tree.position(x_near), p1) && !tree.is_ancestor(x_r1, x_near)) {
        tree.update_edge_unchecked(x_near, x_r1);
        ++ctx.counters.edge_updates;
      }
    }
    q.enqueue_root(x_near);
  }
}

void rewire_goal(RewireContext& ctx) {
  auto& q = ctx.st.queues;
  if (!ctx.st.target_attached()) return;
  if (q.q_goal.empty() && q.s_goal.empty()) {
    q.restart_goal_wave();
    q.mark_goal(ctx.st.tree.root());
    q.s_goal.push_back(ctx.st.tree.root());
  }
  {
    const Stopwatch watch(ctx.clock);
    while (watch.elapsed() < ctx.config.t_goal && !(q.q_goal.empty() && q.s_goal.empty())) {
      rewire_goal_first(ctx);
      ctx.clock.charge_rewire_step();
    }
  }
  if (!ctx.config.new_rewiring) return;
  const Stopwatch watch(ctx.clock);
  while (watch.elapsed() < ctx.config.t_goal && (q.q_goal.size() > 2 || q.s_goal.size() > 2)) {
    rewire_goal_second(ctx);
    ctx.clock.charge_rewire_step();
  }
}

void rewire_goal_first(RewireContext& ctx) {
  auto& q = ctx.st.queues;
  NodeId x;
  if (!q.s_goal.empty()) {
    x = take_top(q.s_goal);
  } else if (!q.q_goal.empty()) {
    x = take_front(q.q_goal);
  } else {
    return;
  }
  if (!ctx.st.tree.contains(x)) return;
  ++ctx.counters.goal_first;
  const double h_x = ctx.st.heuristic(x);
  relax_from(ctx, x, [&](NodeId n) {
    if (q.goal_seen(n)) return;
    q.mark_goal(n);
    if (ctx.st.heuristic(n) < h_x) {
      q.s_goal.push_back(n);
    } else {
      q.q_goal.push_back(n);
    }
  });
}

void rewire_goal_second(RewireContext& ctx) {
  auto& q = ctx.st.queues;
  Tree& tree = ctx.st.tree;
  NodeId x_r1, x_r2;
  if (q.s_goal.size() > 2) {
    x_r1 = take_top(q.s_goal);
    x_r2 = take_top(q.s_goal);
  } else if (q.q_goal.size() > 2) {
    x_r1 = take_front(q.q_goal);
    x_r2 = take_front(q.q_goal);
  } else {
    return;
  }
  if (!tree.contains(x_r1) || !tree.contains(x_r2)) return;
  ++ctx.counters.goal_second;

  const RewireEllipse ellipse{tree.position(tree.root()), ctx.st.target(), ctx.st.target_cost()};
  if (ellipse.contains(tree.position(x_r1))) {
    // Pricing c_new = Cost(x_r2) + d(x_r1, x_near) + d(x_r1, x_r2) would charge
    // a detour through x_r1 that the new edge skips; the created edge is priced.
    auto& near = scratch();
    tree.nearby(tree.position(x_r1), ctx.config.e_max, near);
    const Point p2 = tree.position(x_r2);
    for (NodeId x_near : near) {
      if (x_near == x_r2) continue;
      const double c_old = tree.cost(x_near);
      const double c_new = tree.cost(x_r2) + euclidean(p2, tree.position(x_near));
      if (c_new < c_old && ctx.map.segment_free(tree.position(x_near), p2) && !tree.is_ancestor(x_near, x_r2)) {
        tree.update_edge_unchecked(x_r2, x_near);
        ++ctx.counters.edge_updates;
        if (!q.goal_seen(x_near)) {
          q.mark_goal(x_near);
          q.s_goal.push_back(x_near);
          q.q_goal.push_back(x_near);
        }
      }
    }
  }
  // len(S) > 1 guards the dominance test; as an alternative trigger it would
  // empty the stack on almost every call.
  if (q.s_goal.size() > 1) {
    const NodeId second = q.s_goal[q.s_goal.size() - 2];
    if (tree.contains(second) &&
        ctx.st.heuristic(second) > ctx.st.heuristic(x_r1) + ctx.metric.distance(tree.position(x_r1), tree.position(x_r2))) {
      q.s_goal.clear();
      ++ctx.counters.branch_discards;
    }
  }
}

}  // namespace biam
