#pragma once

#include <cstdint>
#include <vector>

#include "infobot/eval.hpp"

namespace infobot {

struct RuleGrid {
  std::vector<double> c{0.5, 1.0, 2.0, 5.0, 10.0};
  std::vector<double> alpha_r{0.25, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> alpha_t{0.3, 0.6, 1.0, 1.5, 2.0};
  std::vector<double> beta{0.25, 0.5, 0.75};
  std::vector<int> q_max{1, 2};
};

struct RuleTuneResult {
  AgentConfig cfg;
  double avg_reward = 0.0;
  double std_error = 0.0;
  double success_rate = 0.0;
  double avg_turns = 0.0;
};

// Exhaustive grid search over the hand tracker constant and the rule
// thresholds for a rule agent; results sorted by average reward, best first.
std::vector<RuleTuneResult> tune_rule(AgentVariant variant, const KbTable& kb, const AgentConfig& base,
                                      const SimSetup& sim, const RuleGrid& grid, std::size_t n, std::uint64_t seed);

}  // namespace infobot
