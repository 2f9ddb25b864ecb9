#include "infobot/agent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "infobot/nn/math.hpp"

namespace infobot {

namespace {

struct VariantName {
  AgentVariant v;
  const char* name;
};

constexpr VariantName kNames[] = {
    {AgentVariant::rule_no_kb, "rule-no-kb"}, {AgentVariant::rule_hard, "rule-hard"},
    {AgentVariant::rule_soft, "rule-soft"},   {AgentVariant::rl_no_kb, "rl-no-kb"},
    {AgentVariant::rl_hard, "rl-hard"},       {AgentVariant::rl_soft, "rl-soft"},
    {AgentVariant::e2e, "e2e"},               {AgentVariant::max, "max"},
};

constexpr std::pair<const char*, AgentVariant> kAliases[] = {
    {"no-kb", AgentVariant::rl_no_kb},        {"hard-kb", AgentVariant::rl_hard},
    {"soft-kb", AgentVariant::rl_soft},       {"rl-no-kb", AgentVariant::rl_no_kb},
    {"rl-hard-kb", AgentVariant::rl_hard},    {"rl-soft-kb", AgentVariant::rl_soft},
    {"rule-hard-kb", AgentVariant::rule_hard}, {"rule-soft-kb", AgentVariant::rule_soft},
    {"e2e-soft", AgentVariant::e2e},          {"end-to-end", AgentVariant::e2e},
};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string to_string(AgentVariant v) {
  for (const auto& n : kNames)
    if (n.v == v) return n.name;
  return "unknown";
}

AgentVariant parse_variant(std::string_view name) {
  for (const auto& n : kNames)
    if (name == n.name) return n.v;
  for (const auto& [alias, v] : kAliases)
    if (name == alias) return v;
  throw std::invalid_argument("unknown agent variant '" + std::string(name) + "'");
}

const std::vector<AgentVariant>& all_variants() {
  static const std::vector<AgentVariant> v = [] {
    std::vector<AgentVariant> out;
    for (const auto& n : kNames) out.push_back(n.v);
    return out;
  }();
  return v;
}

KbAccess kb_access(AgentVariant v) {
  switch (v) {
    case AgentVariant::rule_no_kb:
    case AgentVariant::rl_no_kb: return KbAccess::none;
    case AgentVariant::rule_hard:
    case AgentVariant::rl_hard: return KbAccess::hard;
    default: return KbAccess::soft;
  }
}

bool uses_policy_net(AgentVariant v) {
  return v == AgentVariant::rl_no_kb || v == AgentVariant::rl_hard || v == AgentVariant::rl_soft ||
         v == AgentVariant::e2e;
}

bool uses_neural_tracker(AgentVariant v) { return v == AgentVariant::e2e; }

void AgentConfig::validate() const {
  hand.validate();
  rule.validate();
  reward.validate();
  model.validate();
  if (e2e_hidden_size < 1) throw std::invalid_argument("e2e_hidden_size must be >= 1");
}

nlohmann::json AgentConfig::to_json() const {
  return {{"hand", {{"c", hand.c}, {"gate_on_match", hand.gate_on_match}}},
          {"rule",
           {{"alpha_r", rule.alpha_r},
            {"alpha_t", rule.alpha_t},
            {"beta", rule.beta},
            {"q_max", rule.q_max},
            {"max_entropy_first", rule.max_entropy_first}}},
          {"reward", reward.to_json()},
          {"model",
           {{"hidden_size", model.hidden_size},
            {"il_learning_rate", model.il_learning_rate},
            {"rl_learning_rate", model.rl_learning_rate},
            {"batch_size", model.batch_size},
            {"init_scale", model.init_scale},
            {"init_seed", model.init_seed}}},
          {"e2e_hidden_size", e2e_hidden_size}};
}

AgentConfig AgentConfig::from_json(const nlohmann::json& j) {
  AgentConfig c;
  if (j.contains("hand")) {
    const auto& h = j.at("hand");
    c.hand.c = h.value("c", c.hand.c);
    c.hand.gate_on_match = h.value("gate_on_match", c.hand.gate_on_match);
  }
  if (j.contains("rule")) {
    const auto& r = j.at("rule");
    c.rule.alpha_r = r.value("alpha_r", c.rule.alpha_r);
    c.rule.alpha_t = r.value("alpha_t", c.rule.alpha_t);
    c.rule.beta = r.value("beta", c.rule.beta);
    c.rule.q_max = r.value("q_max", c.rule.q_max);
    c.rule.max_entropy_first = r.value("max_entropy_first", c.rule.max_entropy_first);
  }
  if (j.contains("reward")) c.reward = RewardConfig::from_json(j.at("reward"));
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.model.hidden_size = m.value("hidden_size", c.model.hidden_size);
    c.model.il_learning_rate = m.value("il_learning_rate", c.model.il_learning_rate);
    c.model.rl_learning_rate = m.value("rl_learning_rate", c.model.rl_learning_rate);
    c.model.batch_size = m.value("batch_size", c.model.batch_size);
    c.model.init_scale = m.value("init_scale", c.model.init_scale);
    c.model.init_seed = m.value("init_seed", c.model.init_seed);
  }
  c.e2e_hidden_size = j.value("e2e_hidden_size", c.e2e_hidden_size);
  c.validate();
  return c;
}

std::size_t policy_input_size(AgentVariant v, std::size_t m) {
  const std::size_t tail = m + (m + 1);  // q vector + previous action
  switch (kb_access(v)) {
    case KbAccess::none: return m + tail;
    case KbAccess::hard: return m + kHardKbBins + tail;
    case KbAccess::soft: return 2 * m + 1 + tail;
  }
  return 0;
}

AgentModel AgentModel::create(AgentVariant variant, const KbTable& kb, const AgentConfig& cfg,
                              const std::vector<std::string>& corpus) {
  cfg.validate();
  AgentModel m;
  m.variant = variant;
  m.kb = &kb;
  m.cfg = cfg;
  if (uses_neural_tracker(variant)) {
    m.vocab = build_vocab(corpus.empty() ? TemplatePack::builtin().corpus() : corpus, kb);
    NeuralTracker::register_params(m.params, kb, m.vocab.size(), cfg.e2e_hidden_size);
  }
  if (uses_policy_net(variant)) {
    const std::size_t d = variant == AgentVariant::e2e ? cfg.e2e_hidden_size : cfg.model.hidden_size;
    PolicyNet::register_params(m.params, infobot::policy_input_size(variant, kb.n_slots()), kb.n_slots() + 1, d);
  }
  m.params.init_uniform(cfg.model.init_scale, cfg.model.init_seed);
  return m;
}

std::size_t AgentModel::policy_input_size() const { return infobot::policy_input_size(variant, kb->n_slots()); }

// ---------------------------------------------------------------------------

std::vector<double> prev_action_one_hot(std::optional<std::size_t> prev, std::size_t m) {
  std::vector<double> v(m + 1, 0.0);
  if (prev) v.at(*prev) = 1.0;
  return v;
}

HardView hard_view(const KbTable& kb, const BeliefState& beliefs, const std::vector<bool>& evidence) {
  BeliefState query = beliefs;
  for (std::size_t j = 0; j < kb.n_slots(); ++j)
    if (!evidence.at(j)) query.know_probs[j] = 0.0;
  const HardKbResult res = hard_kb_lookup(kb, query);
  HardView view;
  view.bin = res.bin;
  view.matches = res.rows.size();
  std::vector<double> uniform(kb.n_rows(), 0.0);
  if (res.rows.empty()) {
    uniform.assign(kb.n_rows(), 1.0 / static_cast<double>(kb.n_rows()));
  } else {
    for (RowIndex i : res.rows) uniform[i] = 1.0 / static_cast<double>(res.rows.size());
  }
  for (std::size_t j = 0; j < kb.n_slots(); ++j)
    view.slot_entropies.push_back(nn::entropy(weighted_slot_dist(uniform, kb, j)));
  return view;
}

std::vector<double> policy_features(AgentVariant v, const KbTable& kb, const BeliefState& beliefs,
                                    const SummaryState& soft, std::optional<std::size_t> prev_action,
                                    const std::vector<bool>* evidence) {
  const std::size_t m = kb.n_slots();
  std::vector<double> x;
  switch (kb_access(v)) {
    case KbAccess::none:
      for (const auto& p : beliefs.slot_dists) x.push_back(nn::entropy(p));
      break;
    case KbAccess::hard: {
      if (!evidence) throw std::invalid_argument("policy_features: Hard-KB input needs evidence flags");
      const HardView hv = hard_view(kb, beliefs, *evidence);
      x = hv.slot_entropies;
      for (std::size_t b = 0; b < kHardKbBins; ++b) x.push_back(b == hv.bin ? 1.0 : 0.0);
      break;
    }
    case KbAccess::soft: x = soft.flatten(); break;
  }
  x.insert(x.end(), beliefs.know_probs.begin(), beliefs.know_probs.end());
  const auto prev = prev_action_one_hot(prev_action, m);
  x.insert(x.end(), prev.begin(), prev.end());
  return x;
}

E2eTurnVars e2e_turn(nn::Graph& g, const KbTable& kb, const NeuralTracker& tracker, NeuralTracker::State& tstate,
                     const PolicyNet& policy, nn::Var& h, const nn::SparseVec& x,
                     std::optional<std::size_t> prev_action) {
  E2eTurnVars out;
  out.tracker = tracker.step(g, tstate, x);
  out.posterior = posterior_op(g, kb, out.tracker.p, out.tracker.q);
  std::vector<nn::Var> parts{summary_op(g, kb, out.posterior, out.tracker.q)};
  for (const auto& q : out.tracker.q) parts.push_back(q);
  parts.push_back(g.constant(prev_action_one_hot(prev_action, kb.n_slots())));
  out.log_pi = policy.step(g, h, g.concat(parts));
  return out;
}

// ---------------------------------------------------------------------------

DialogueSession::DialogueSession(const AgentModel& model, std::optional<UserGoal> goal)
    : model_(&model), goal_(std::move(goal)), graph_(model.params) {
  const KbTable& kb = *model.kb;
  const std::size_t m = kb.n_slots();
  if (model.variant == AgentVariant::max && !goal_) throw std::invalid_argument("the Max agent needs the user goal");
  beliefs_ = reset_beliefs(kb);
  post_ = infobot::posterior(beliefs_, kb);
  request_counts_.assign(m, 0);
  evidence_.assign(m, false);
  switch (kb_access(model.variant)) {
    case KbAccess::none:
      for (const auto& p : beliefs_.slot_dists) initial_entropies_.push_back(nn::entropy(p));
      break;
    case KbAccess::hard: initial_entropies_ = hard_view(kb, beliefs_, evidence_).slot_entropies; break;
    case KbAccess::soft: initial_entropies_ = summarize(beliefs_, post_, kb).slot_entropies; break;
  }
  if (uses_neural_tracker(model.variant)) {
    tracker_.emplace(model.params, kb);
    tracker_state_ = tracker_->initial_state(graph_);
  }
  if (uses_policy_net(model.variant)) {
    policy_.emplace(model.params);
    policy_h_ = policy_->initial_state(graph_);
  }
}

BeliefState DialogueSession::max_beliefs(const Observation& obs) {
  const KbTable& kb = *model_->kb;
  BeliefState b = beliefs_;
  // The oracle learns the target's true value of every slot that comes up,
  // whether the user volunteered it, answered a request for it, or not.
  std::vector<std::size_t> seen;
  for (const auto& rv : obs.revealed) seen.push_back(rv.first);
  for (std::size_t j : obs.unknown) seen.push_back(j);
  if (last_request_) seen.push_back(*last_request_);
  const RowIndex target = goal_->target_row;
  for (std::size_t j : seen) {
    evidence_[j] = true;
    const ValueId v = kb.has_truth() ? kb.truth(target, j) : kb.cell(target, j);
    if (v == kMissing) {
      b.know_probs[j] = 0.0;
      continue;
    }
    b.slot_dists[j].assign(kb.vocab_size(j), 0.0);
    b.slot_dists[j][static_cast<std::size_t>(v)] = 1.0;
    b.know_probs[j] = 1.0;
  }
  // Slots not seen yet carry no information.
  for (std::size_t j = 0; j < kb.n_slots(); ++j)
    if (!evidence_[j]) b.know_probs[j] = 0.0;
  return b;
}

TurnRecord DialogueSession::step(const Observation& obs, ActMode mode, Rng& rng, bool force_inform) {
  const KbTable& kb = *model_->kb;
  const AgentConfig& cfg = model_->cfg;
  const std::size_t m = kb.n_slots();
  ++turn_;

  TurnRecord rec;
  rec.turn = turn_;
  rec.tokens = obs.tokens;

  std::optional<std::size_t> action_index;
  std::vector<double> log_pi;

  if (model_->variant == AgentVariant::e2e) {
    rec.features = featurize(obs.tokens, model_->vocab);
    auto vars = e2e_turn(graph_, kb, *tracker_, tracker_state_, *policy_, policy_h_, rec.features, prev_action_);
    beliefs_ = to_belief_state(graph_, vars.tracker, turn_);
    post_.probs = graph_.value(vars.posterior);
    post_.degenerate = false;
    log_pi = graph_.value(vars.log_pi);
  } else {
    if (model_->variant == AgentVariant::max) {
      beliefs_ = max_beliefs(obs);
    } else {
      const BeliefState before = beliefs_;
      beliefs_ = hand_update(beliefs_, obs.tokens, RequestFlag{last_request_}, kb, cfg.hand);
      for (std::size_t j = 0; j < m; ++j)
        if (beliefs_.slot_dists[j] != before.slot_dists[j]) evidence_[j] = true;
    }
    beliefs_.turn = turn_;
    post_ = infobot::posterior(beliefs_, kb);
  }
  const SummaryState soft = summarize(beliefs_, post_, kb);
  rec.beliefs = beliefs_;
  rec.summary = soft.flatten();

  if (uses_policy_net(model_->variant)) {
    if (model_->variant != AgentVariant::e2e) {
      rec.policy_input = policy_features(model_->variant, kb, beliefs_, soft, prev_action_, &evidence_);
      nn::Var lp = policy_->step(graph_, policy_h_, graph_.constant(rec.policy_input));
      log_pi = graph_.value(lp);
    }
    rec.action_probs.resize(log_pi.size());
    for (std::size_t a = 0; a < log_pi.size(); ++a) rec.action_probs[a] = std::exp(log_pi[a]);
    action_index = mode == ActMode::sample ? sample_categorical(rec.action_probs, rng) : argmax(rec.action_probs);
  } else {
    std::vector<double> entropies;
    double kb_entropy = 0.0;
    std::vector<int> counts = request_counts_;
    switch (kb_access(model_->variant)) {
      case KbAccess::none:
        for (const auto& p : beliefs_.slot_dists) entropies.push_back(nn::entropy(p));
        kb_entropy = kInf;
        break;
      case KbAccess::hard: {
        const HardView hv = hard_view(kb, beliefs_, evidence_);
        entropies = hv.slot_entropies;
        kb_entropy = std::log(static_cast<double>(hv.matches == 0 ? kb.n_rows() : hv.matches));
        break;
      }
      case KbAccess::soft:
        entropies = soft.slot_entropies;
        kb_entropy = soft.kb_entropy;
        break;
    }
    if (model_->variant == AgentVariant::max) {
      // Never ask twice for a value the oracle already has, and stop as soon
      // as the target tops the posterior.
      for (std::size_t j = 0; j < m; ++j)
        if (evidence_[j]) counts[j] = cfg.rule.q_max;
      const auto top = greedy_inform(post_.probs, 1);
      kb_entropy = top.front() == goal_->target_row ? 0.0 : kInf;
    }
    RulePolicyConfig rule = cfg.rule;
    if (model_->variant == AgentVariant::max) rule.alpha_t = rule.beta = 0.0;
    action_index = rule_select(entropies, kb_entropy, counts, initial_entropies_, rule).index(m);
  }

  if (force_inform) {
    action_index = m;
    rec.forced = true;
  }
  rec.action = Action::from_index(*action_index, m);
  if (!log_pi.empty()) rec.log_pi = log_pi[*action_index];

  if (rec.action.is_inform()) {
    const std::size_t r = std::min(cfg.reward.r, kb.n_rows());
    if (mode == ActMode::sample && model_->variant == AgentVariant::e2e) {
      InformSample s = sample_inform(post_.probs, r, rng);
      rec.action.results = std::move(s.rows);
      rec.log_mu = s.log_mu;
      rec.mu_prefix = s.sampled;
    } else {
      rec.action.results = greedy_inform(post_.probs, r);
      rec.mu_prefix = rec.action.results.size();
      rec.log_mu = log_mu(post_.probs, rec.action.results);
    }
    last_request_.reset();
  } else {
    ++request_counts_[rec.action.slot];
    last_request_ = rec.action.slot;
  }
  prev_action_ = *action_index;
  return rec;
}

}  // namespace infobot
