#pragma once

#include <cstdint>
#include <random>

namespace biam {

/// Every stochastic routine draws from this engine so seeded runs replay exactly.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace biam
