#include "infobot/tune.hpp"

#include <algorithm>
#include <stdexcept>

namespace infobot {

std::vector<RuleTuneResult> tune_rule(AgentVariant variant, const KbTable& kb, const AgentConfig& base,
                                      const SimSetup& sim, const RuleGrid& grid, std::size_t n, std::uint64_t seed) {
  if (uses_policy_net(variant) || variant == AgentVariant::max)
    throw std::invalid_argument("tune_rule only applies to rule agents");
  std::vector<RuleTuneResult> out;
  for (double c : grid.c)
    for (double ar : grid.alpha_r)
      for (double at : grid.alpha_t)
        for (double b : grid.beta)
          for (int q : grid.q_max) {
            AgentConfig cfg = base;
            cfg.hand.c = c;
            cfg.rule.alpha_r = ar;
            cfg.rule.alpha_t = at;
            cfg.rule.beta = b;
            cfg.rule.q_max = q;
            const AgentModel model = AgentModel::create(variant, kb, cfg);
            const EvalReport rep = evaluate(model, sim, n, seed);
            out.push_back({cfg, rep.avg_reward, rep.std_error, rep.success_rate, rep.avg_turns});
          }
  std::stable_sort(out.begin(), out.end(),
                   [](const RuleTuneResult& a, const RuleTuneResult& b) { return a.avg_reward > b.avg_reward; });
  return out;
}

}  // namespace infobot
