#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "infobot/agent.hpp"
#include "infobot/simulator.hpp"

namespace infobot {

// One simulated dialogue.
struct Episode {
  UserGoal goal;
  std::vector<UserTurn> user_turns;  // user_turns[t] precedes turns[t]
  std::vector<TurnRecord> turns;
  std::vector<double> rewards;       // one per agent action
  double total_reward = 0.0;         // undiscounted sum
  double discounted = 0.0;
  bool success = false;
  bool timed_out = false;
  std::optional<std::size_t> rank;   // 1-based rank of the target in the inform set

  std::size_t n_turns() const { return turns.size(); }
  nlohmann::json transcript(const KbTable& kb, const TemplatePack& templates) const;
};

struct SimSetup {
  const TemplatePack* templates = nullptr;
  NoiseConfig noise;
  UserConfig user;
};

// Runs the agent against a fresh simulated user until it informs or the
// dialogue hits max_turns. A dialogue that times out gets the turn penalty plus
// the failure reward on its last turn.
Episode rollout(const AgentModel& model, const SimSetup& sim, ActMode mode, Rng& rng);

}  // namespace infobot
