#pragma once

#include <optional>

#include "biam/config.hpp"
#include "biam/random.hpp"
#include "biam/search_tree.hpp"
#include "biam/world.hpp"

namespace biam {

enum class SampleKind { goal, uniform, ellipse };

struct SampleOutcome {
  SampleKind kind = SampleKind::uniform;
  Point point;
  /// An ellipse draw was due but fell back to a uniform sample.
  bool ellipse_fallback = false;
};

/// Points q with |q - a| + |q - b| <= c_best.
struct RewireEllipse {
  Point focus_a;
  Point focus_b;
  double c_best = 0.0;

  bool contains(Point q) const { return euclidean(q, focus_a) + euclidean(q, focus_b) <= c_best; }
};

/// Rejection sample of a free point inside the ellipse; nothing when c_best is
/// not finite or no free point turned up within `attempts` tries.
std::optional<Point> sample_ellipse(const RewireEllipse& ellipse, const WorldMap& map, Rng& rng, int attempts = 1000);

/// Draws p in [0,1) and picks the first matching branch: p > 0.7 with the
/// target unattached gives the target; p < 0.5 or target unattached gives a
/// uniform free point; otherwise a free point in the rewire ellipse.
SampleOutcome sample_state(const SearchTree& st, const WorldMap& map, Rng& rng);
/// As sample_state with the branch selector fixed to `p`.
SampleOutcome sample_state_at(const SearchTree& st, const WorldMap& map, Rng& rng, double p);

enum class ExtendStatus { inserted, rejected_density, rejected_blocked };

struct ExtendResult {
  ExtendStatus status = ExtendStatus::rejected_blocked;
  NodeId node = kNoNode;
};

/// Grows the tree by at most e_max toward the sample.
///
/// Uniform and ellipse samples start from the d_E-nearest node. Target samples
/// start from the node closest to the target under d_A. When that step is
/// blocked, or is free but gets no closer under d_A, an assisted planner tries a
/// few free points around that node and keeps the best one. The
/// density cap n_max does not apply to a step landing exactly on the target.
ExtendResult extend(SearchTree& st, const SampleOutcome& sample, const WorldMap& map, const PlannerConfig& config,
                    const AssistingMetric& metric, Rng& rng, Counters& counters);

}  // namespace biam
