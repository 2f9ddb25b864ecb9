#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infobot/belief_hand.hpp"
#include "infobot/belief_neural.hpp"
#include "infobot/kb.hpp"
#include "infobot/nn/model_config.hpp"
#include "infobot/nn/param_store.hpp"
#include "infobot/policy.hpp"
#include "infobot/simulator.hpp"
#include "infobot/soft_kb.hpp"

namespace infobot {

enum class AgentVariant { rule_no_kb, rule_hard, rule_soft, rl_no_kb, rl_hard, rl_soft, e2e, max };

enum class KbAccess { none, hard, soft };

std::string to_string(AgentVariant v);
// Accepts the canonical names plus a few aliases ("soft-kb", "rl-soft-kb", ...).
AgentVariant parse_variant(std::string_view name);
const std::vector<AgentVariant>& all_variants();

KbAccess kb_access(AgentVariant v);
bool uses_policy_net(AgentVariant v);
bool uses_neural_tracker(AgentVariant v);

struct AgentConfig {
  HandTrackerConfig hand;
  RulePolicyConfig rule;
  RewardConfig reward;
  nn::ModelConfig model;
  std::size_t e2e_hidden_size = 100;

  void validate() const;
  nlohmann::json to_json() const;
  static AgentConfig from_json(const nlohmann::json& j);
};

// Everything needed to run one agent variant over a KB: configuration,
// parameters (for neural variants) and the n-gram vocabulary (E2E).
struct AgentModel {
  AgentVariant variant = AgentVariant::rule_soft;
  const KbTable* kb = nullptr;
  AgentConfig cfg;
  nn::ParamStore params;
  FeatureVocab vocab;

  // Registers and initializes parameters for the variant. `corpus` feeds the
  // E2E vocabulary and is ignored otherwise.
  static AgentModel create(AgentVariant variant, const KbTable& kb, const AgentConfig& cfg,
                           const std::vector<std::string>& corpus = {});

  std::size_t policy_input_size() const;
  std::size_t n_actions() const { return kb->n_slots() + 1; }
};

std::size_t policy_input_size(AgentVariant v, std::size_t n_slots);

enum class ActMode { greedy, sample };

// What the agent sees on one turn. The dialogue-act fields are only read by
// the Max agent.
struct Observation {
  Tokens tokens;
  std::vector<std::pair<std::size_t, ValueId>> revealed;
  std::vector<std::size_t> unknown;

  static Observation from(const UserTurn& t) { return {t.tokens, t.revealed, t.unknown}; }
  static Observation text(std::string_view s) { return {tokenize(s), {}, {}}; }
};

struct TurnRecord {
  int turn = 0;
  Tokens tokens;
  nn::SparseVec features;            // E2E input
  BeliefState beliefs;
  std::vector<double> summary;       // 2M+1 soft summary
  std::vector<double> policy_input;  // policy-net input (RL variants)
  std::vector<double> action_probs;  // π over M+1 (neural policies)
  Action action;
  double log_pi = 0.0;
  // Inform set bookkeeping.
  double log_mu = 0.0;
  std::size_t mu_prefix = 0;
  bool forced = false;
};

// Per-dialogue agent state. Not thread-safe; one owner per session.
class DialogueSession {
 public:
  // `goal` is required for the Max agent and ignored otherwise.
  explicit DialogueSession(const AgentModel& model, std::optional<UserGoal> goal = std::nullopt);

  // Consumes the user's utterance and chooses the next action. When `forced`
  // is set that action kind is taken instead (its results, if any, are kept);
  // `force_inform` makes the agent inform regardless of the policy.
  TurnRecord step(const Observation& obs, ActMode mode, Rng& rng, bool force_inform = false);

  const BeliefState& beliefs() const { return beliefs_; }
  const KbPosterior& posterior() const { return post_; }
  int turn() const { return turn_; }
  const AgentModel& model() const { return *model_; }

 private:
  BeliefState max_beliefs(const Observation& obs);

  const AgentModel* model_;
  std::optional<UserGoal> goal_;
  int turn_ = 0;
  BeliefState beliefs_;
  KbPosterior post_;
  std::vector<int> request_counts_;
  std::vector<double> initial_entropies_;
  std::vector<bool> evidence_;
  std::optional<std::size_t> last_request_;
  std::optional<std::size_t> prev_action_;

  // Neural state lives in a per-session graph without gradients.
  nn::Graph graph_;
  std::optional<NeuralTracker> tracker_;
  NeuralTracker::State tracker_state_;
  std::optional<PolicyNet> policy_;
  nn::Var policy_h_;
};

// Policy inputs for the hand-tracker variants.
std::vector<double> policy_features(AgentVariant v, const KbTable& kb, const BeliefState& beliefs,
                                    const SummaryState& soft, std::optional<std::size_t> prev_action,
                                    const std::vector<bool>* evidence = nullptr);
std::vector<double> prev_action_one_hot(std::optional<std::size_t> prev, std::size_t n_slots);

// Differentiable E2E turn shared by live sessions and training replays.
struct E2eTurnVars {
  NeuralTracker::Output tracker;
  nn::Var posterior;
  nn::Var log_pi;
};
E2eTurnVars e2e_turn(nn::Graph& g, const KbTable& kb, const NeuralTracker& tracker, NeuralTracker::State& tstate,
                     const PolicyNet& policy, nn::Var& h, const nn::SparseVec& x, std::optional<std::size_t> prev_action);

// Slot entropies and result bin seen by Hard-KB agents. Slots with no
// evidence yet stay out of the query.
struct HardView {
  std::vector<double> slot_entropies;
  std::size_t bin = 0;
  std::size_t matches = 0;
};
HardView hard_view(const KbTable& kb, const BeliefState& beliefs, const std::vector<bool>& evidence);

}  // namespace infobot
