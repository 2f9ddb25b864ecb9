#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "infobot/nn/gradcheck.hpp"
#include "infobot/trainer.hpp"

using namespace infobot;

namespace {

const TemplatePack& templates() {
  static const TemplatePack t = TemplatePack::builtin();
  return t;
}

// One-slot KB: the policy chooses between request (0) and inform (1).
const KbTable& one_slot_kb() {
  static const KbTable kb = fixtures::table({"genre"}, {{"a"}, {"b"}, {"c"}});
  return kb;
}

TurnRecord turn(const std::vector<double>& x, std::size_t action, bool forced = false) {
  TurnRecord r;
  r.policy_input = x;
  r.action = Action::from_index(action, 1);
  r.forced = forced;
  return r;
}

Episode episode(std::vector<TurnRecord> turns, double ret) {
  Episode ep;
  ep.turns = std::move(turns);
  ep.rewards.assign(ep.turns.size(), 0.0);
  ep.rewards.back() = ret;
  ep.discounted = ret;
  ep.total_reward = ret;
  return ep;
}

// Deterministic two-state environment. State 1 (input x1): inform ends with
// return g[0]; request moves to state 2 (input x2), where inform ends with
// g[1] and request leads to a forced inform with g[2].
struct ToyMdp {
  std::vector<double> x1{0.5, 1.0, 0.0, 0.0};
  std::vector<double> x2{1.0, 0.0, 1.0, 0.0};
  std::vector<double> x3{0.2, 0.0, 1.0, 0.0};
  double g[3] = {1.0, 2.0, -0.5};

  std::vector<Episode> trajectories() const {
    return {episode({turn(x1, 1)}, g[0]), episode({turn(x1, 0), turn(x2, 1)}, g[1]),
            episode({turn(x1, 0), turn(x2, 0), turn(x3, 1, true)}, g[2])};
  }

  // Exact probability of each trajectory under the current parameters.
  std::vector<double> probs(const AgentModel& model) const {
    PolicyNet net(model.params);
    nn::Graph g2(model.params);
    nn::Var h2 = net.initial_state(g2);
    const auto lp1 = g2.value(net.step(g2, h2, g2.constant(x1)));
    const auto lp2 = g2.value(net.step(g2, h2, g2.constant(x2)));
    const double req1 = std::exp(lp1[0]), inf1 = std::exp(lp1[1]);
    const double req2 = std::exp(lp2[0]), inf2 = std::exp(lp2[1]);
    return {inf1, req1 * inf2, req1 * req2};
  }

  double objective(const AgentModel& model) const {
    const auto p = probs(model);
    return p[0] * g[0] + p[1] * g[1] + p[2] * g[2];
  }
};

AgentModel toy_model() {
  AgentConfig cfg;
  cfg.model.hidden_size = 3;
  auto model = AgentModel::create(AgentVariant::rl_no_kb, one_slot_kb(), cfg);
  model.params.init_uniform(0.6, 12);
  return model;
}

// Gradient of the surrogate for `batch` with explicit weights.
nn::Gradients surrogate_grad(const AgentModel& model, const std::vector<Episode>& batch,
                             const std::vector<double>& w, bool with_mu = false) {
  nn::Gradients grads(model.params);
  nn::Graph g(model.params, &grads);
  g.backward(reinforce_surrogate(g, model, batch, w, with_mu));
  return grads;
}

AgentModel small_e2e(const KbTable& kb, std::size_t hidden = 4) {
  AgentConfig cfg;
  cfg.model.hidden_size = hidden;
  cfg.e2e_hidden_size = hidden;
  return AgentModel::create(AgentVariant::e2e, kb, cfg, templates().corpus());
}

}  // namespace

TEST_CASE("advantages subtract the batch-mean return") {
  std::vector<Episode> batch{episode({turn({}, 1)}, 1.0), episode({turn({}, 1)}, 3.0)};
  auto w = advantages(batch, BaselineMode::return_mean, 0.99);
  CHECK(w == std::vector<double>{-1.0, 1.0});
  auto same = advantages({batch[0], batch[0]}, BaselineMode::return_mean, 0.99);
  CHECK(same == std::vector<double>{0.0, 0.0});
  CHECK(advantages({batch[1]}, BaselineMode::return_mean, 0.99) == std::vector<double>{0.0});
}

TEST_CASE("reward-mean baseline centers every per-turn reward") {
  Episode a = episode({turn({}, 0), turn({}, 1)}, 2.0);
  a.rewards = {-0.1, 2.0};
  Episode b = episode({turn({}, 1)}, -1.0);
  b.rewards = {-1.1};
  const double mean = (-0.1 + 2.0 - 1.1) / 3.0;
  auto w = advantages({a, b}, BaselineMode::reward_mean, 0.9);
  CHECK(w[0] == doctest::Approx((-0.1 - mean) + 0.9 * (2.0 - mean)).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(-1.1 - mean).epsilon(1e-15));
}

TEST_CASE("finite differences: REINFORCE surrogate") {
  auto model = toy_model();
  ToyMdp mdp;
  const auto batch = mdp.trajectories();
  const std::vector<double> w{0.7, -1.2, 0.4};
  auto res = nn::finite_diff_check(model.params, [&](nn::Graph& g) { return reinforce_surrogate(g, model, batch, w, false); });
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("expected surrogate gradient equals the policy gradient on an enumerable environment") {
  auto model = toy_model();
  ToyMdp mdp;
  const auto trajs = mdp.trajectories();
  const auto p = mdp.probs(model);
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-14));

  // Exact E[G ∇ log P] and E[(G - b) ∇ log P] by enumeration.
  std::vector<nn::Vec> plain, centered;
  const double b = 0.8;
  for (std::size_t t = 0; t < model.params.size(); ++t) {
    plain.emplace_back(model.params.tensors()[t].data.size(), 0.0);
    centered.emplace_back(model.params.tensors()[t].data.size(), 0.0);
  }
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    auto grad = surrogate_grad(model, {trajs[k]}, {1.0});  // -∇ log P(τ_k)
    for (std::size_t t = 0; t < model.params.size(); ++t)
      for (std::size_t i = 0; i < plain[t].size(); ++i) {
        const double dlogp = -grad[nn::ParamId{static_cast<std::uint32_t>(t)}][i];
        plain[t][i] += p[k] * mdp.g[k] * dlogp;
        centered[t][i] += p[k] * (mdp.g[k] - b) * dlogp;
      }
  }

  // Central differences of the exact objective.
  double worst = 0.0, worst_baseline = 0.0;
  const double eps = 1e-5;
  for (std::size_t t = 0; t < model.params.size(); ++t) {
    auto& data = model.params.tensor(nn::ParamId{static_cast<std::uint32_t>(t)}).data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + eps;
      const double up = mdp.objective(model);
      data[i] = orig - eps;
      const double down = mdp.objective(model);
      data[i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double rel = std::abs(numeric - plain[t][i]) / std::max({std::abs(numeric), std::abs(plain[t][i]), 1e-6});
      worst = std::max(worst, rel);
      worst_baseline = std::max(worst_baseline, std::abs(plain[t][i] - centered[t][i]));
    }
  }
  CHECK(worst < 1e-4);
  CHECK(worst_baseline < 1e-10);
}

TEST_CASE("zero advantages leave the parameters unchanged") {
  auto model = toy_model();
  ToyMdp mdp;
  auto batch = mdp.trajectories();
  for (auto& ep : batch) {
    ep.rewards.assign(ep.rewards.size(), 0.0);
    ep.discounted = ep.total_reward = 0.0;
  }
  const auto before = model.params.to_json();
  nn::RmsProp opt(model.params);
  TrainConfig cfg;
  reinforce_update(model, batch, opt, cfg);
  CHECK(model.params.to_json() == before);
  reinforce_update(model, {mdp.trajectories()[1]}, opt, cfg);  // single episode: b = its own return
  CHECK(model.params.to_json() == before);
  cfg.baseline = BaselineMode::reward_mean;
  reinforce_update(model, batch, opt, cfg);
  CHECK(model.params.to_json() == before);
}

TEST_CASE("an update moves probability towards the better trajectory") {
  auto model = toy_model();
  ToyMdp mdp;
  const double before = mdp.objective(model);
  nn::RmsProp opt(model.params);
  TrainConfig cfg;
  cfg.rl_learning_rate = 0.01;
  for (int k = 0; k < 20; ++k) reinforce_update(model, mdp.trajectories(), opt, cfg);
  CHECK(mdp.objective(model) > before);
  nn::Graph g(model.params);
  CHECK_THROWS(reinforce_surrogate(g, model, {}, {}, false));
}

TEST_CASE("finite differences: retrieval log-probability reaches the tracker") {
  auto kb = fixtures::table({"genre"}, {{"comedy"}, {"drama"}});
  auto model = small_e2e(kb, 3);
  model.params.init_uniform(0.3, 4);
  auto sim = fixtures::sim(templates());
  Rng rng(3);
  Episode ep = rollout(model, sim, ActMode::sample, rng);
  REQUIRE(ep.turns.back().action.is_inform());
  REQUIRE(ep.turns.back().mu_prefix > 0);
  // log μ alone, through posterior and tracker.
  auto mu_only = [&](nn::Graph& g) {
    NeuralTracker tracker(model.params, kb);
    PolicyNet policy(model.params);
    auto ts = tracker.initial_state(g);
    nn::Var h = policy.initial_state(g);
    std::optional<std::size_t> prev;
    nn::Var last;
    for (const auto& rec : ep.turns) {
      auto vars = e2e_turn(g, kb, tracker, ts, policy, h, rec.features, prev);
      last = log_mu_op(g, vars.posterior, rec.action.results, rec.mu_prefix);
      prev = rec.action.index(kb.n_slots());
    }
    return last;
  };
  nn::Gradients grads(model.params);
  {
    nn::Graph g(model.params, &grads);
    g.backward(mu_only(g));
  }
  double tracker_grad = 0.0;
  for (std::size_t t = 0; t < model.params.size(); ++t)
    if (model.params.tensors()[t].name.starts_with("tracker"))
      for (double v : grads[nn::ParamId{static_cast<std::uint32_t>(t)}]) tracker_grad = std::max(tracker_grad, std::abs(v));
  CHECK(tracker_grad > 1e-8);
  auto res = nn::finite_diff_check(model.params, mu_only, {1e-5, 0, 0, 1e-6});
  CHECK(res.max_rel_error < 1e-4);
  auto full = nn::finite_diff_check(model.params, [&](nn::Graph& g) { return episode_log_prob(g, model, ep, true); },
                                    {1e-5, 6, 1, 1e-6});
  CHECK(full.max_rel_error < 1e-4);
}

TEST_CASE("end-to-end update trains the tracker unless it is frozen") {
  auto kb = generate_synthetic(KbSplitSpec{30, 2, 4, 0.2, 3});
  auto model = small_e2e(kb);
  model.params.init_uniform(0.1, 2);
  auto sim = fixtures::sim(templates());
  std::vector<Episode> batch;
  for (std::uint64_t i = 0; i < 8; ++i) {
    Rng rng = Rng::stream(4, i);
    batch.push_back(rollout(model, sim, ActMode::sample, rng));
  }
  bool differ = false;
  for (const auto& ep : batch) differ = differ || ep.discounted != batch[0].discounted;
  REQUIRE(differ);
  const std::string probe = "tracker.0.p.b";

  TrainConfig cfg;
  auto trained = model;
  nn::RmsProp opt(trained.params);
  e2e_update(trained, batch, opt, cfg);
  CHECK(trained.params[probe].data != model.params[probe].data);

  cfg.freeze_tracker = true;
  auto frozen = model;
  nn::RmsProp opt_f(frozen.params);
  e2e_update(frozen, batch, opt_f, cfg);
  auto policy_only = model;
  nn::RmsProp opt_p(policy_only.params);
  reinforce_update(policy_only, batch, opt_p, cfg);
  CHECK(frozen.params[probe].data == model.params[probe].data);
  CHECK(frozen.params.to_json() == policy_only.params.to_json());
  CHECK(frozen.params["policy.out.b"].data != model.params["policy.out.b"].data);
}

TEST_CASE("imitation teacher batches come from the rule agent") {
  auto kb = generate_synthetic(KbSplitSpec{30, 2, 4, 0.2, 3});
  auto student = small_e2e(kb);
  auto teacher = make_teacher(student);
  CHECK(teacher.variant == AgentVariant::rule_soft);
  auto sim = fixtures::sim(templates(), NoiseConfig::moderate());
  auto a = teacher_batch(teacher, sim, 5, 7, 0);
  auto b = teacher_batch(teacher, sim, 5, 7, 0);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a[i].total_reward == b[i].total_reward);
  auto c = teacher_batch(teacher, sim, 5, 7, 5);
  bool any_diff = false;
  for (std::size_t i = 0; i < 5; ++i) any_diff = any_diff || c[i].goal.target_row != a[i].goal.target_row;
  CHECK(any_diff);
}

TEST_CASE("finite differences: imitation loss") {
  auto kb = fixtures::table({"genre", "actor"}, {{"comedy", "bill"}, {"drama", std::nullopt}, {"comedy", "tom"}});
  auto student = small_e2e(kb, 3);
  student.params.init_uniform(0.4, 6);
  auto sim = fixtures::sim(templates(), NoiseConfig::moderate());
  auto teacher = teacher_batch(make_teacher(student), sim, 3, 2, 0);
  ImitationStats st;
  {
    nn::Graph g(student.params);
    imitation_loss(g, student, teacher, &st);
  }
  CHECK(st.turns > 0);
  CHECK(st.loss == doctest::Approx(st.kl + st.bce + st.nll).epsilon(1e-12));
  auto res = nn::finite_diff_check(student.params, [&](nn::Graph& g) { return imitation_loss(g, student, teacher); },
                                   {1e-5, 12, 3, 1e-6});
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("imitation loss falls over fifty updates on a fixed corpus") {
  auto kb = generate_synthetic(KbSplitSpec{30, 3, 5, 0.2, 8});
  auto student = small_e2e(kb, 8);
  auto sim = fixtures::sim(templates(), NoiseConfig::moderate());
  auto corpus = teacher_batch(make_teacher(student), sim, 20, 11, 0);
  std::vector<double> losses;
  for (int u = 0; u < 50; ++u) losses.push_back(imitation_update(student, corpus, 0.05).loss);
  const double after = imitation_eval(student, corpus).loss;
  CHECK(after < 0.9 * losses.front());
  int rises = 0;
  for (std::size_t k = 1; k < losses.size(); ++k) rises += losses[k] > losses[k - 1] + 1e-9;
  CHECK(rises <= 5);
}

TEST_CASE("train records one curve point per evaluation and keeps the best") {
  auto kb = generate_synthetic(KbSplitSpec{40, 3, 5, 0.2, 2});
  AgentConfig acfg;
  acfg.model.hidden_size = 8;
  auto model = AgentModel::create(AgentVariant::rl_soft, kb, acfg);
  auto sim = fixtures::sim(templates(), NoiseConfig::moderate());
  TrainConfig cfg;
  cfg.rl_updates = 20;
  cfg.batch_size = 16;
  cfg.eval_every = 5;
  cfg.eval_episodes = 60;
  cfg.final_eval_episodes = 50;
  std::ostringstream log;
  auto res = train(model, sim, cfg, &log);
  REQUIRE(res.curve.size() == 4);
  double best = -1e9;
  for (const auto& pt : res.curve) best = std::max(best, pt.avg_reward);
  CHECK(res.best_reward == best);
  CHECK(evaluate(model, sim, cfg.eval_episodes, cfg.eval_seed).avg_reward == res.best_reward);
  REQUIRE(res.final_report.has_value());
  CHECK(res.final_report->n_episodes == 50);
  CHECK(log.str().find("\"phase\":\"final\"") != std::string::npos);
  CHECK(res.il_curve.empty());
}

TEST_CASE("train runs imitation first for the end-to-end agent") {
  auto kb = generate_synthetic(KbSplitSpec{30, 2, 4, 0.2, 2});
  auto model = small_e2e(kb);
  auto sim = fixtures::sim(templates());
  TrainConfig cfg;
  cfg.il_updates = 3;
  cfg.il_batch_size = 4;
  cfg.rl_updates = 2;
  cfg.batch_size = 4;
  cfg.eval_every = 1;
  cfg.eval_episodes = 10;
  cfg.final_eval_episodes = 0;
  auto res = train(model, sim, cfg);
  CHECK(res.il_curve.size() == 3);
  CHECK(res.curve.size() == 2);
  CHECK_FALSE(res.final_report.has_value());
}

TEST_CASE("imitation with RMSProp falls faster than plain SGD") {
  auto kb = generate_synthetic(KbSplitSpec{30, 3, 5, 0.2, 8});
  auto sgd_student = small_e2e(kb, 8);
  auto rms_student = sgd_student;
  auto sim = fixtures::sim(templates(), NoiseConfig::moderate());
  auto corpus = teacher_batch(make_teacher(sgd_student), sim, 20, 11, 0);
  nn::RmsProp opt(rms_student.params);
  const double start = imitation_eval(sgd_student, corpus).loss;
  for (int u = 0; u < 50; ++u) {
    imitation_update(sgd_student, corpus, 0.05);
    imitation_update(rms_student, corpus, 0.005, &opt);
  }
  const double rms = imitation_eval(rms_student, corpus).loss;
  CHECK(rms < 0.5 * start);
  CHECK(rms < imitation_eval(sgd_student, corpus).loss);
}

TEST_CASE("train rejects rule agents and invalid configs") {
  auto kb = generate_synthetic(KbSplitSpec{30, 2, 4, 0.2, 2});
  auto rule = AgentModel::create(AgentVariant::rule_soft, kb, {});
  auto sim = fixtures::sim(templates());
  CHECK_THROWS(train(rule, sim, TrainConfig{}));
  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS(bad.validate());
  auto back = TrainConfig::from_json(TrainConfig{}.to_json());
  CHECK(back.batch_size == 128);
  CHECK(back.rl_learning_rate == TrainConfig{}.rl_learning_rate);
  CHECK(back.il_optimizer == "rmsprop");
  CHECK(TrainConfig::from_json({{"il_optimizer", "sgd"}}).il_optimizer == "sgd");
  CHECK_THROWS(TrainConfig::from_json({{"il_optimizer", "adam"}}));
}

TEST_CASE("non-finite losses abort training") {
  auto model = toy_model();
  model.params.tensor(model.params.id("policy.out.b")).data[0] = std::nan("");
  nn::RmsProp opt(model.params);
  ToyMdp mdp;
  CHECK_THROWS_AS(reinforce_update(model, mdp.trajectories(), opt, TrainConfig{}), TrainingError);
}
