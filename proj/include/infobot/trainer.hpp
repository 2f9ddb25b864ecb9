#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "infobot/episode.hpp"
#include "infobot/eval.hpp"
#include "infobot/nn/optim.hpp"

namespace infobot {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BaselineMode {
  return_mean,  // b = batch mean of discounted returns, weight G - b
  reward_mean,  // b = batch mean of per-turn rewards, weight Σ_t γ^t (r_t - b)
};

struct TrainConfig {
  std::size_t rl_updates = 2000;
  std::size_t il_updates = 500;
  std::size_t batch_size = 128;
  std::size_t il_batch_size = 128;
  // Plain SGD at 0.05 barely moves the tracker in 500 updates, so imitation
  // uses RMSProp by default; "sgd" restores the plain step.
  std::string il_optimizer = "rmsprop";
  double il_learning_rate = 0.005;
  double rl_learning_rate = 0.01;  // 0.005 learned too slowly within 2000 updates
  std::size_t eval_every = 100;
  std::size_t eval_episodes = 2000;
  std::size_t final_eval_episodes = 5000;
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 1001;
  BaselineMode baseline = BaselineMode::return_mean;
  bool freeze_tracker = false;  // E2E only
  std::string metrics_path;     // JSONL, optional

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Per-episode REINFORCE weights (the advantage multiplying Σ log π).
std::vector<double> advantages(const std::vector<Episode>& batch, BaselineMode mode, double gamma);

// Σ_k log π(a_k) over the episode's sampled actions, plus log μ(I) when
// `with_mu` is set and the episode ended with an inform. Replays the stored
// inputs into `g`.
nn::Var episode_log_prob(nn::Graph& g, const AgentModel& model, const Episode& ep, bool with_mu);

// -(1/B) Σ_e weight_e · episode_log_prob(e)
nn::Var reinforce_surrogate(nn::Graph& g, const AgentModel& model, const std::vector<Episode>& batch,
                            const std::vector<double>& weights, bool with_mu);

struct UpdateStats {
  double loss = 0.0;
  double baseline = 0.0;
  double mean_return = 0.0;
  double grad_max = 0.0;
};

// Policy-only REINFORCE step with RMSProp.
UpdateStats reinforce_update(AgentModel& model, const std::vector<Episode>& batch, nn::RmsProp& opt,
                             const TrainConfig& cfg);
// End-to-end step: gradients reach the tracker through summary and posterior,
// and the surrogate includes log μ(I).
UpdateStats e2e_update(AgentModel& model, const std::vector<Episode>& batch, nn::RmsProp& opt, const TrainConfig& cfg);

struct ImitationStats {
  double loss = 0.0;       // mean per turn
  double kl = 0.0;         // mean per turn of Σ_j KL(p̂_j || p_j)
  double bce = 0.0;        // mean per turn of Σ_j H(q̂_j, q_j)
  double nll = 0.0;        // mean per turn of -log π(â)
  double agreement = 0.0;  // argmax π == â
  std::size_t turns = 0;
};

// Teacher episodes come from the rule-soft agent; the student is an E2E model
// replayed on the same utterances and previous actions.
nn::Var imitation_loss(nn::Graph& g, const AgentModel& student, const std::vector<Episode>& teacher,
                       ImitationStats* stats = nullptr);
// Takes an RMSProp step when `opt` is given, a plain SGD step otherwise.
ImitationStats imitation_update(AgentModel& student, const std::vector<Episode>& teacher, double lr,
                                nn::RmsProp* opt = nullptr);
ImitationStats imitation_eval(const AgentModel& student, const std::vector<Episode>& teacher);

AgentModel make_teacher(const AgentModel& student);
std::vector<Episode> teacher_batch(const AgentModel& teacher, const SimSetup& sim, std::size_t n, std::uint64_t seed,
                                   std::uint64_t first_index);

struct CurvePoint {
  std::size_t update = 0;
  double avg_reward = 0.0;
  double success = 0.0;
  double turns = 0.0;
};

struct TrainResult {
  std::vector<ImitationStats> il_curve;
  std::vector<CurvePoint> curve;
  double best_reward = 0.0;
  std::size_t best_update = 0;
  std::optional<EvalReport> final_report;
};

// IL warm start (E2E only), then RL with periodic greedy evaluation. On return
// the model holds the parameters of the best evaluation point.
TrainResult train(AgentModel& model, const SimSetup& sim, const TrainConfig& cfg, std::ostream* log = nullptr);

}  // namespace infobot
