#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "infobot/kb.hpp"
#include "infobot/policy.hpp"
#include "infobot/rng.hpp"
#include "infobot/text.hpp"

namespace infobot {

struct UserGoal {
  RowIndex target_row = 0;
  // Per slot: the user's true value, or nullopt if the user does not know it.
  std::vector<std::optional<ValueId>> known;

  std::vector<std::size_t> known_slots() const;
  bool knows(std::size_t j) const { return known.at(j).has_value(); }
};

struct NoiseConfig {
  double p_corrupt = 0.0;     // drop tokens from a multi-token value mention
  double p_substitute = 0.0;  // replace a mentioned value with another of the same slot
  double p_irrelevant = 0.0;  // answer a request with an off-topic utterance

  void validate() const;
  static NoiseConfig none() { return {}; }
  static NoiseConfig moderate() { return {0.1, 0.05, 0.1}; }

  nlohmann::json to_json() const;
  static NoiseConfig from_json(const nlohmann::json& j);
};

struct RewardConfig {
  std::size_t r = 5;
  double turn_penalty = -0.1;
  double fail_reward = -1.0;
  int max_turns = 10;
  double gamma = 0.99;

  void validate() const;
  nlohmann::json to_json() const;
  static RewardConfig from_json(const nlohmann::json& j);
};

struct UserConfig {
  double p_know = 0.8;
  void validate() const;
};

// Surface templates per dialogue act. Placeholders: {slot}, {value},
// {constraints}.
class TemplatePack {
 public:
  // open, open_empty, constraint, inform, dont_know, irrelevant,
  // agent_request, agent_inform
  static const std::vector<std::string>& act_names();

  static TemplatePack builtin();
  static TemplatePack from_json(const nlohmann::json& j);
  static TemplatePack load(const std::string& path);
  nlohmann::json to_json() const;

  const std::vector<std::string>& get(const std::string& act) const;

  // Throws if an off-topic template shares a token with any value of `kb`.
  void check_against(const KbTable& kb) const;

  // Template text with placeholders removed, one entry per template; the
  // corpus for the n-gram vocabulary.
  std::vector<std::string> corpus() const;

 private:
  std::map<std::string, std::vector<std::string>> acts_;
};

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

enum class UserActKind { open, inform, dont_know, irrelevant };

struct UserTurn {
  UserActKind kind = UserActKind::open;
  std::string text;
  Tokens tokens;
  // What the user meant to convey (true values, before noise).
  std::vector<std::pair<std::size_t, ValueId>> revealed;
  std::vector<std::size_t> unknown;  // slots the user said it does not know
};

std::string to_string(UserActKind kind);

UserGoal sample_goal(const KbTable& kb, Rng& rng, const UserConfig& cfg = {});

// Agenda-based simulated user for one episode.
class UserSimulator {
 public:
  UserSimulator(const KbTable& kb, const TemplatePack& templates, const NoiseConfig& noise, UserGoal goal);

  const UserGoal& goal() const { return goal_; }

  // Opening turn: a random nonempty subset of the known slots, or a bare
  // request for a movie when nothing is known.
  UserTurn open(Rng& rng);
  // Reply to request(slot).
  UserTurn respond(std::size_t slot, Rng& rng);

 private:
  std::string mention(std::size_t j, ValueId v, Rng& rng) const;
  const std::string& pick(const std::string& act, Rng& rng) const;

  const KbTable* kb_;
  const TemplatePack* templates_;
  NoiseConfig noise_;
  UserGoal goal_;
};

// max(0, 2(1 - (r-1)/R)) for 1-based rank r of the target in I, else the
// failure reward.
double score_inform(const UserGoal& goal, const std::vector<RowIndex>& inform, const RewardConfig& cfg);
std::optional<std::size_t> target_rank(const UserGoal& goal, const std::vector<RowIndex>& inform);

// Σ_t γ^t r_t
double discounted_return(const std::vector<double>& rewards, double gamma);

// Agent-side template NLG.
std::string render_agent_action(const Action& action, const KbTable& kb, const TemplatePack& templates, int turn);

}  // namespace infobot
