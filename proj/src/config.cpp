#include "biam/config.hpp"

#include <cmath>

#include "biam/error.hpp"

namespace biam {

std::string_view to_string(BudgetMode mode) {
  return mode == BudgetMode::deterministic ? "deterministic" : "wall_clock";
}

BudgetMode budget_mode_from_string(std::string_view text) {
  if (text == "deterministic") return BudgetMode::deterministic;
  if (text == "wall_clock") return BudgetMode::wall_clock;
  throw ConfigError("unknown budget mode '" + std::string(text) + "'");
}

void PlannerConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(t_exp, "t_exp");
  positive(t_root, "t_root");
  positive(t_goal, "t_goal");
  positive(e_max, "e_max");
  positive(sigma, "sigma");
  positive(agent_speed, "agent_speed");
  positive(goal_tolerance, "goal_tolerance");
  if (n_max < 1) throw ConfigError("n_max must be positive");
  if (sigma < e_max) throw ConfigError("sigma must be at least e_max");
  if (costs.expansion_us <= 0 || costs.rewire_step_us <= 0) throw ConfigError("virtual costs must be positive");
}

}  // namespace biam
