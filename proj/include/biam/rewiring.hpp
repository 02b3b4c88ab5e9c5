#pragma once

#include "biam/config.hpp"
#include "biam/search_tree.hpp"
#include "biam/world.hpp"

namespace biam {

/// Shared inputs of the rewiring routines.
struct RewireContext {
  SearchTree& st;
  const WorldMap& map;
  const PlannerConfig& config;
  const AssistingMetric& metric;
  WorkClock& clock;
  Counters& counters;
};

/// Root rewiring for t_root. Starts a new wave from the root when q_root is
/// empty, then runs the single-node stage while q_root holds one or two ids and
/// the two-node stage when it holds more (single-node stage only when
/// new_rewiring is off). Returns early once q_root drains.
void rewire_root(RewireContext& ctx);

/// Dequeues x_r and offers it as parent to every neighbour it makes cheaper.
/// Every unseen neighbour joins the wave.
void rewire_root_first(RewireContext& ctx);

/// Dequeues x_r1 and x_r2 and lets x_r1 adopt a cheaper parent found among the
/// neighbours of x_r2 (the grandfather shortcut).
void rewire_root_second(RewireContext& ctx);

/// Goal rewiring: up to t_goal of the first stage, then (with new_rewiring) up
/// to t_goal of the second stage. No-op while the target is unattached.
void rewire_goal(RewireContext& ctx);

/// Takes x from s_goal (else q_goal) and offers it as parent to its
/// neighbours. Unseen neighbours closer to the target under d_A go on s_goal,
/// the rest on q_goal.
void rewire_goal_first(RewireContext& ctx);

/// Takes x_r1, x_r2 by two pops (or two dequeues). Inside the rewire ellipse,
/// x_r2 becomes the parent of each neighbour of x_r1 it makes cheaper. A
/// branch whose next stack entry is dominated under d_A is discarded.
void rewire_goal_second(RewireContext& ctx);

}  // namespace biam
