#include "biam/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace biam {

std::optional<Point> sample_ellipse(const RewireEllipse& e, const WorldMap& map, Rng& rng, int attempts) {
  if (!std::isfinite(e.c_best)) return std::nullopt;
  const double focal = euclidean(e.focus_a, e.focus_b);
  if (e.c_best < focal) return std::nullopt;
  const Point mid = (e.focus_a + e.focus_b) * 0.5;
  const double a = e.c_best / 2.0;
  const double b = std::sqrt(std::max(0.0, e.c_best * e.c_best - focal * focal)) / 2.0;
  const double cos_t = focal > 0.0 ? (e.focus_b.x - e.focus_a.x) / focal : 1.0;
  const double sin_t = focal > 0.0 ? (e.focus_b.y - e.focus_a.y) / focal : 0.0;
  const double half_w = std::sqrt(a * a * cos_t * cos_t + b * b * sin_t * sin_t);
  const double half_h = std::sqrt(a * a * sin_t * sin_t + b * b * cos_t * cos_t);
  const double x0 = std::max(0.0, mid.x - half_w), x1 = std::min(map.width_m(), mid.x + half_w);
  const double y0 = std::max(0.0, mid.y - half_h), y1 = std::min(map.height_m(), mid.y + half_h);
  if (x0 > x1 || y0 > y1) return std::nullopt;
  for (int i = 0; i < attempts; ++i) {
    const Point q{uniform(rng, x0, x1), uniform(rng, y0, y1)};
    if (e.contains(q) && map.is_free(q)) return q;
  }
  return std::nullopt;
}

SampleOutcome sample_state(const SearchTree& st, const WorldMap& map, Rng& rng) {
  const double p = uniform01(rng);
  return sample_state_at(st, map, rng, p);
}

SampleOutcome sample_state_at(const SearchTree& st, const WorldMap& map, Rng& rng, double p) {
  const bool attached = st.target_attached();
  if (p > 0.7 && !attached && st.has_target()) return {SampleKind::goal, st.target(), false};
  if (p < 0.5 || !attached) return {SampleKind::uniform, map.sample_free(rng), false};
  const RewireEllipse ellipse{st.tree.position(st.tree.root()), st.target(), st.target_cost()};
  if (auto q = sample_ellipse(ellipse, map, rng)) return {SampleKind::ellipse, *q, false};
  return {SampleKind::uniform, map.sample_free(rng), true};
}

namespace {

// Free point in the e_max disc around `from` that is reachable in a straight
// line, preferring the lowest d_A to the target among a few draws.
std::optional<Point> assisted_step(const SearchTree& st, NodeId from, const WorldMap& map, const PlannerConfig& config,
                                   const AssistingMetric& metric, Rng& rng) {
  constexpr int kTries = 4;
  const Point c = st.tree.position(from);
  std::optional<Point> best;
  double best_h = kInfinity;
  for (int i = 0; i < kTries; ++i) {
    const double r = config.e_max * std::sqrt(uniform01(rng));
    const double a = uniform(rng, 0.0, 2.0 * 3.14159265358979323846);
    const Point q{c.x + r * std::cos(a), c.y + r * std::sin(a)};
    if (!map.in_bounds(q) || !map.is_free(q) || !map.segment_free(c, q)) continue;
    const double h = metric.distance(q, st.target());
    if (!best || h < best_h) {
      best = q;
      best_h = h;
    }
  }
  return best;
}

}  // namespace

ExtendResult extend(SearchTree& st, const SampleOutcome& sample, const WorldMap& map, const PlannerConfig& config,
                    const AssistingMetric& metric, Rng& rng, Counters& counters) {
  Tree& tree = st.tree;
  NodeId x_near = kNoNode;
  Point x_new;
  if (sample.kind == SampleKind::goal) {
    x_near = st.best();
    x_new = steer(tree.position(x_near), sample.point, config.e_max);
    const bool free = map.segment_free(tree.position(x_near), x_new);
    const bool stalled = free && x_new != sample.point && metric.distance(x_new, sample.point) >= st.heuristic(x_near);
    if (!free || (config.assisted && stalled)) {
      std::optional<Point> alt;
      if (config.assisted) alt = assisted_step(st, x_near, map, config, metric, rng);
      if (alt && (!free || metric.distance(*alt, sample.point) < metric.distance(x_new, sample.point))) {
        ++counters.fallback_steps;
        x_new = *alt;
      } else if (!free) {
        ++counters.rejected_blocked;
        return {ExtendStatus::rejected_blocked, kNoNode};
      }
    }
  } else {
    const auto n = tree.nearest(sample.point, map);
    if (!n) {
      ++counters.rejected_blocked;
      return {ExtendStatus::rejected_blocked, kNoNode};
    }
    x_near = *n;
    x_new = steer(tree.position(x_near), sample.point, config.e_max);
  }

  const bool on_target = st.has_target() && x_new == st.target();
  if (!on_target && tree.count_within(x_new, config.e_max, static_cast<std::size_t>(config.n_max)) >=
                        static_cast<std::size_t>(config.n_max)) {
    st.queues.enqueue_root(x_near);
    ++counters.rejected_density;
    return {ExtendStatus::rejected_density, kNoNode};
  }

  // Cheapest collision-free parent among the neighbours; x_near always qualifies.
  thread_local std::vector<NodeId> near;
  thread_local std::vector<std::pair<double, NodeId>> ranked;
  tree.nearby(x_new, config.e_max, near);
  ranked.clear();
  for (NodeId id : near) ranked.emplace_back(tree.cost(id) + euclidean(tree.position(id), x_new), id);
  std::sort(ranked.begin(), ranked.end());
  NodeId parent = x_near;
  for (const auto& [c, id] : ranked) {
    if (!std::isfinite(c)) break;
    if (id == x_near || map.segment_free(tree.position(id), x_new)) {
      parent = id;
      break;
    }
  }
  const NodeId id = tree.insert_unchecked(x_new, parent);
  st.on_insert(id, metric);
  st.queues.enqueue_root(id);
  ++counters.inserted;
  return {ExtendStatus::inserted, id};
}

}  // namespace biam
