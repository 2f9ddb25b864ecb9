#include "infobot/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "infobot/belief_neural.hpp"

namespace infobot {

void TrainConfig::validate() const {
  if (batch_size < 1 || il_batch_size < 1) throw std::invalid_argument("TrainConfig: batch sizes must be >= 1");
  if (!(il_learning_rate > 0.0) || !(rl_learning_rate > 0.0))
    throw std::invalid_argument("TrainConfig: learning rates must be positive");
  if (il_optimizer != "sgd" && il_optimizer != "rmsprop")
    throw std::invalid_argument("TrainConfig: il_optimizer must be 'sgd' or 'rmsprop'");
  if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("TrainConfig: eval_episodes must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"rl_updates", rl_updates},
          {"il_updates", il_updates},
          {"batch_size", batch_size},
          {"il_batch_size", il_batch_size},
          {"il_optimizer", il_optimizer},
          {"il_learning_rate", il_learning_rate},
          {"rl_learning_rate", rl_learning_rate},
          {"eval_every", eval_every},
          {"eval_episodes", eval_episodes},
          {"final_eval_episodes", final_eval_episodes},
          {"seed", seed},
          {"eval_seed", eval_seed},
          {"baseline", baseline == BaselineMode::return_mean ? "return_mean" : "reward_mean"},
          {"freeze_tracker", freeze_tracker},
          {"metrics_path", metrics_path}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.rl_updates = j.value("rl_updates", c.rl_updates);
  c.il_updates = j.value("il_updates", c.il_updates);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.il_batch_size = j.value("il_batch_size", c.il_batch_size);
  c.il_optimizer = j.value("il_optimizer", c.il_optimizer);
  c.il_learning_rate = j.value("il_learning_rate", c.il_learning_rate);
  c.rl_learning_rate = j.value("rl_learning_rate", c.rl_learning_rate);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
  c.final_eval_episodes = j.value("final_eval_episodes", c.final_eval_episodes);
  c.seed = j.value("seed", c.seed);
  c.eval_seed = j.value("eval_seed", c.eval_seed);
  const std::string b = j.value("baseline", std::string("return_mean"));
  if (b == "return_mean")
    c.baseline = BaselineMode::return_mean;
  else if (b == "reward_mean")
    c.baseline = BaselineMode::reward_mean;
  else
    throw std::invalid_argument("unknown baseline mode '" + b + "'");
  c.freeze_tracker = j.value("freeze_tracker", c.freeze_tracker);
  c.metrics_path = j.value("metrics_path", c.metrics_path);
  c.validate();
  return c;
}

std::vector<double> advantages(const std::vector<Episode>& batch, BaselineMode mode, double gamma) {
  std::vector<double> w;
  if (batch.empty()) return w;
  if (mode == BaselineMode::return_mean) {
    double b = 0.0;
    for (const auto& ep : batch) b += ep.discounted;
    b /= static_cast<double>(batch.size());
    for (const auto& ep : batch) w.push_back(ep.discounted - b);
  } else {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& ep : batch)
      for (double r : ep.rewards) {
        sum += r;
        ++count;
      }
    const double b = count ? sum / static_cast<double>(count) : 0.0;
    for (const auto& ep : batch) {
      std::vector<double> centered;
      for (double r : ep.rewards) centered.push_back(r - b);
      w.push_back(discounted_return(centered, gamma));
    }
  }
  return w;
}

nn::Var episode_log_prob(nn::Graph& g, const AgentModel& model, const Episode& ep, bool with_mu) {
  if (!uses_policy_net(model.variant)) throw std::invalid_argument("episode_log_prob: variant has no policy network");
  const KbTable& kb = *model.kb;
  const std::size_t m = kb.n_slots();
  PolicyNet policy(model.params);
  nn::Var h = policy.initial_state(g);
  std::vector<nn::Var> terms;
  if (model.variant == AgentVariant::e2e) {
    NeuralTracker tracker(model.params, kb);
    auto ts = tracker.initial_state(g);
    std::optional<std::size_t> prev;
    for (const auto& rec : ep.turns) {
      auto vars = e2e_turn(g, kb, tracker, ts, policy, h, rec.features, prev);
      const std::size_t a = rec.action.index(m);
      if (!rec.forced) terms.push_back(g.element(vars.log_pi, a));
      if (with_mu && rec.action.is_inform() && rec.mu_prefix > 0)
        terms.push_back(log_mu_op(g, vars.posterior, rec.action.results, rec.mu_prefix));
      prev = a;
    }
  } else {
    for (const auto& rec : ep.turns) {
      nn::Var lp = policy.step(g, h, g.constant(rec.policy_input));
      if (!rec.forced) terms.push_back(g.element(lp, rec.action.index(m)));
    }
  }
  if (terms.empty()) return g.constant({0.0});
  return g.sum(g.concat(terms));
}

nn::Var reinforce_surrogate(nn::Graph& g, const AgentModel& model, const std::vector<Episode>& batch,
                            const std::vector<double>& weights, bool with_mu) {
  if (batch.empty()) throw std::invalid_argument("reinforce_surrogate: empty batch");
  if (weights.size() != batch.size()) throw std::invalid_argument("reinforce_surrogate: weight count mismatch");
  std::vector<nn::Var> terms;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t e = 0; e < batch.size(); ++e) {
    if (weights[e] == 0.0) continue;
    terms.push_back(g.scale(episode_log_prob(g, model, batch[e], with_mu), -weights[e] * inv_b));
  }
  if (terms.empty()) return g.constant({0.0});
  return g.sum(g.concat(terms));
}

namespace {

UpdateStats policy_gradient_step(AgentModel& model, const std::vector<Episode>& batch, nn::RmsProp& opt,
                                 const TrainConfig& cfg, bool e2e) {
  UpdateStats st;
  const auto w = advantages(batch, cfg.baseline, model.cfg.reward.gamma);
  for (const auto& ep : batch) st.mean_return += ep.discounted;
  st.mean_return /= static_cast<double>(batch.size());
  st.baseline = batch.empty() ? 0.0 : batch.front().discounted - w.front();

  nn::Gradients grads(model.params);
  if (!e2e || cfg.freeze_tracker) grads.freeze_prefix(model.params, "tracker");
  nn::Graph g(model.params, &grads);
  nn::Var loss = reinforce_surrogate(g, model, batch, w, e2e);
  st.loss = g.scalar(loss);
  g.backward(loss);
  if (!std::isfinite(st.loss) || !grads.all_finite())
    throw TrainingError("non-finite policy-gradient loss or gradient (loss " + std::to_string(st.loss) + ")");
  st.grad_max = grads.max_abs();
  opt.step(model.params, grads, cfg.rl_learning_rate);
  return st;
}

}  // namespace

UpdateStats reinforce_update(AgentModel& model, const std::vector<Episode>& batch, nn::RmsProp& opt,
                             const TrainConfig& cfg) {
  return policy_gradient_step(model, batch, opt, cfg, false);
}

UpdateStats e2e_update(AgentModel& model, const std::vector<Episode>& batch, nn::RmsProp& opt, const TrainConfig& cfg) {
  if (model.variant != AgentVariant::e2e) throw std::invalid_argument("e2e_update needs the e2e variant");
  return policy_gradient_step(model, batch, opt, cfg, true);
}

// ---------------------------------------------------------------------------

nn::Var imitation_loss(nn::Graph& g, const AgentModel& student, const std::vector<Episode>& teacher,
                       ImitationStats* stats) {
  if (student.variant != AgentVariant::e2e) throw std::invalid_argument("imitation learning needs the e2e variant");
  const KbTable& kb = *student.kb;
  const std::size_t m = kb.n_slots();
  NeuralTracker tracker(student.params, kb);
  PolicyNet policy(student.params);
  std::vector<nn::Var> terms;
  ImitationStats st;
  for (const auto& ep : teacher) {
    auto ts = tracker.initial_state(g);
    nn::Var h = policy.initial_state(g);
    std::optional<std::size_t> prev;
    for (const auto& rec : ep.turns) {
      const nn::SparseVec x = featurize(rec.tokens, student.vocab);
      auto vars = e2e_turn(g, kb, tracker, ts, policy, h, x, prev);
      std::vector<nn::Var> kl, bce;
      for (std::size_t j = 0; j < m; ++j) {
        kl.push_back(g.kl_to(rec.beliefs.slot_dists[j], g.log_softmax(vars.tracker.p_logits[j])));
        bce.push_back(g.bce_with_logit(rec.beliefs.know_probs[j], vars.tracker.q_logit[j]));
      }
      const std::size_t a = rec.action.index(m);
      nn::Var kl_sum = g.sum(g.concat(kl));
      nn::Var bce_sum = g.sum(g.concat(bce));
      nn::Var nll = g.scale(g.element(vars.log_pi, a), -1.0);
      terms.push_back(g.add(g.add(kl_sum, bce_sum), nll));
      st.kl += g.scalar(kl_sum);
      st.bce += g.scalar(bce_sum);
      st.nll += g.scalar(nll);
      if (argmax(g.value(vars.log_pi)) == a) st.agreement += 1.0;
      ++st.turns;
      prev = a;
    }
  }
  if (terms.empty()) throw std::invalid_argument("imitation_loss: no teacher turns");
  const double inv = 1.0 / static_cast<double>(st.turns);
  nn::Var loss = g.scale(g.sum(g.concat(terms)), inv);
  if (stats) {
    st.loss = g.scalar(loss);
    st.kl *= inv;
    st.bce *= inv;
    st.nll *= inv;
    st.agreement *= inv;
    *stats = st;
  }
  return loss;
}

ImitationStats imitation_update(AgentModel& student, const std::vector<Episode>& teacher, double lr,
                                nn::RmsProp* opt) {
  nn::Gradients grads(student.params);
  nn::Graph g(student.params, &grads);
  ImitationStats st;
  nn::Var loss = imitation_loss(g, student, teacher, &st);
  g.backward(loss);
  if (!std::isfinite(st.loss) || !grads.all_finite())
    throw TrainingError("non-finite imitation loss or gradient (loss " + std::to_string(st.loss) + ")");
  if (opt)
    opt->step(student.params, grads, lr);
  else
    nn::sgd_step(student.params, grads, lr);
  return st;
}

ImitationStats imitation_eval(const AgentModel& student, const std::vector<Episode>& teacher) {
  nn::Graph g(student.params);
  ImitationStats st;
  imitation_loss(g, student, teacher, &st);
  return st;
}

AgentModel make_teacher(const AgentModel& student) {
  return AgentModel::create(AgentVariant::rule_soft, *student.kb, student.cfg);
}

std::vector<Episode> teacher_batch(const AgentModel& teacher, const SimSetup& sim, std::size_t n, std::uint64_t seed,
                                   std::uint64_t first_index) {
  std::vector<Episode> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, first_index + i);
    out.push_back(rollout(teacher, sim, ActMode::greedy, rng));
  }
  return out;
}

// ---------------------------------------------------------------------------

TrainResult train(AgentModel& model, const SimSetup& sim, const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (!uses_policy_net(model.variant))
    throw std::invalid_argument("agent variant " + to_string(model.variant) + " has no trainable parameters");
  std::ofstream metrics;
  if (!cfg.metrics_path.empty()) {
    metrics.open(cfg.metrics_path);
    if (!metrics) throw std::runtime_error("cannot write metrics to " + cfg.metrics_path);
  }
  auto emit = [&](const nlohmann::json& rec) {
    if (metrics) metrics << rec.dump() << '\n' << std::flush;
    if (log) *log << rec.dump() << '\n' << std::flush;
  };

  TrainResult result;
  const std::uint64_t il_seed = splitmix64(cfg.seed ^ 0x696d6974ULL);
  const std::uint64_t rl_seed = splitmix64(cfg.seed ^ 0x726c726cULL);

  if (model.variant == AgentVariant::e2e && cfg.il_updates > 0) {
    const AgentModel teacher = make_teacher(model);
    std::optional<nn::RmsProp> il_opt;
    if (cfg.il_optimizer == "rmsprop") il_opt.emplace(model.params);
    for (std::size_t u = 1; u <= cfg.il_updates; ++u) {
      const auto batch = teacher_batch(teacher, sim, cfg.il_batch_size, il_seed, (u - 1) * cfg.il_batch_size);
      const ImitationStats st = imitation_update(model, batch, cfg.il_learning_rate, il_opt ? &*il_opt : nullptr);
      result.il_curve.push_back(st);
      if (u % cfg.eval_every == 0 || u == cfg.il_updates)
        emit({{"phase", "il"}, {"update", u}, {"loss", st.loss}, {"kl", st.kl}, {"agreement", st.agreement}});
    }
  }

  nn::ParamStore best = model.params;
  result.best_reward = -std::numeric_limits<double>::infinity();
  nn::RmsProp opt(model.params);
  std::uint64_t episode_index = 0;
  for (std::size_t u = 1; u <= cfg.rl_updates; ++u) {
    std::vector<Episode> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      Rng rng = Rng::stream(rl_seed, episode_index++);
      batch.push_back(rollout(model, sim, ActMode::sample, rng));
    }
    if (model.variant == AgentVariant::e2e)
      e2e_update(model, batch, opt, cfg);
    else
      reinforce_update(model, batch, opt, cfg);

    if (u % cfg.eval_every == 0) {
      const EvalReport rep = evaluate(model, sim, cfg.eval_episodes, cfg.eval_seed);
      result.curve.push_back({u, rep.avg_reward, rep.success_rate, rep.avg_turns});
      emit({{"update", u}, {"avg_reward", rep.avg_reward}, {"success", rep.success_rate}, {"turns", rep.avg_turns}});
      if (rep.avg_reward > result.best_reward) {
        result.best_reward = rep.avg_reward;
        result.best_update = u;
        best = model.params;
      }
    }
  }
  if (!result.curve.empty()) model.params = best;
  if (cfg.final_eval_episodes > 0) {
    result.final_report = evaluate(model, sim, cfg.final_eval_episodes, cfg.eval_seed + 1);
    emit({{"phase", "final"}, {"update", result.best_update}, {"avg_reward", result.final_report->avg_reward},
          {"success", result.final_report->success_rate}, {"turns", result.final_report->avg_turns}});
  }
  return result;
}

}  // namespace infobot
