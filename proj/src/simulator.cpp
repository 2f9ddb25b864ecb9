#include "infobot/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace infobot {

namespace {

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
}

}  // namespace

std::vector<std::size_t> UserGoal::known_slots() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < known.size(); ++j)
    if (known[j]) out.push_back(j);
  return out;
}

void NoiseConfig::validate() const {
  check_prob(p_corrupt, "p_corrupt");
  check_prob(p_substitute, "p_substitute");
  check_prob(p_irrelevant, "p_irrelevant");
}

nlohmann::json NoiseConfig::to_json() const {
  return {{"p_corrupt", p_corrupt}, {"p_substitute", p_substitute}, {"p_irrelevant", p_irrelevant}};
}

NoiseConfig NoiseConfig::from_json(const nlohmann::json& j) {
  NoiseConfig n;
  n.p_corrupt = j.value("p_corrupt", n.p_corrupt);
  n.p_substitute = j.value("p_substitute", n.p_substitute);
  n.p_irrelevant = j.value("p_irrelevant", n.p_irrelevant);
  n.validate();
  return n;
}

void RewardConfig::validate() const {
  if (r < 1) throw std::invalid_argument("RewardConfig: R must be >= 1");
  if (max_turns < 1) throw std::invalid_argument("RewardConfig: max_turns must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("RewardConfig: gamma must be in (0, 1]");
}

nlohmann::json RewardConfig::to_json() const {
  return {{"r", r}, {"turn_penalty", turn_penalty}, {"fail_reward", fail_reward}, {"max_turns", max_turns},
          {"gamma", gamma}};
}

RewardConfig RewardConfig::from_json(const nlohmann::json& j) {
  RewardConfig c;
  c.r = j.value("r", c.r);
  c.turn_penalty = j.value("turn_penalty", c.turn_penalty);
  c.fail_reward = j.value("fail_reward", c.fail_reward);
  c.max_turns = j.value("max_turns", c.max_turns);
  c.gamma = j.value("gamma", c.gamma);
  c.validate();
  return c;
}

void UserConfig::validate() const { check_prob(p_know, "p_know"); }

// ---------------------------------------------------------------------------

const std::vector<std::string>& TemplatePack::act_names() {
  static const std::vector<std::string> names = {"open",      "open_empty", "constraint",    "inform",
                                                 "dont_know", "irrelevant", "agent_request", "agent_inform"};
  return names;
}

TemplatePack TemplatePack::builtin() {
  // Same content as data/templates.json.
  static const char* kText = R"({
    "open": ["i am looking for a movie with {constraints}", "which movie has {constraints}",
             "find me a movie where {constraints}", "can you find a film with {constraints}"],
    "open_empty": ["i am looking for a movie", "can you help me find a movie", "i want to watch a film"],
    "constraint": ["{slot} {value}", "{value} as the {slot}", "the {slot} is {value}"],
    "inform": ["{value}", "it is {value}", "the {slot} is {value}", "i think it is {value}"],
    "dont_know": ["i cannot remember", "i do not know", "no idea", "not sure about the {slot}"],
    "irrelevant": ["what time is it", "i really like popcorn", "the weather is nice today",
                   "sorry i got distracted", "can we talk about something else"],
    "agent_request": ["which {slot} do you have in mind?", "do you know the {slot}?", "what is the {slot}?"],
    "agent_inform": ["here are the movies i found: {results}", "these movies match best: {results}",
                     "you might be looking for one of these: {results}"]
  })";
  return from_json(nlohmann::json::parse(kText));
}

TemplatePack TemplatePack::from_json(const nlohmann::json& j) {
  TemplatePack t;
  for (const auto& act : act_names()) {
    if (!j.contains(act)) throw std::invalid_argument("template pack is missing act '" + act + "'");
    auto list = j.at(act).get<std::vector<std::string>>();
    if (list.size() < 3) throw std::invalid_argument("template pack needs at least 3 templates for '" + act + "'");
    t.acts_[act] = std::move(list);
  }
  return t;
}

TemplatePack TemplatePack::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open template pack " + path);
  return from_json(nlohmann::json::parse(in));
}

nlohmann::json TemplatePack::to_json() const { return acts_; }

const std::vector<std::string>& TemplatePack::get(const std::string& act) const {
  auto it = acts_.find(act);
  if (it == acts_.end()) throw std::invalid_argument("unknown dialogue act '" + act + "'");
  return it->second;
}

void TemplatePack::check_against(const KbTable& kb) const {
  std::set<std::string> value_tokens;
  for (std::size_t j = 0; j < kb.n_slots(); ++j)
    for (std::size_t v = 0; v < kb.vocab_size(j); ++v)
      for (const auto& t : kb.value_tokens(j, static_cast<ValueId>(v))) value_tokens.insert(t);
  for (const auto& tmpl : get("irrelevant"))
    for (const auto& t : tokenize(tmpl))
      if (value_tokens.count(t))
        throw std::invalid_argument("off-topic template '" + tmpl + "' contains KB value token '" + t + "'");
}

std::vector<std::string> TemplatePack::corpus() const {
  std::vector<std::string> out;
  for (const auto& [act, list] : acts_) {
    if (act.rfind("agent_", 0) == 0) continue;
    for (const auto& t : list)
      out.push_back(fill_template(t, {{"slot", " "}, {"value", " "}, {"constraints", " "}}));
  }
  return out;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close == std::string_view::npos) throw std::invalid_argument("unterminated placeholder in template");
      const std::string key(tmpl.substr(i + 1, close - i - 1));
      auto it = vars.find(key);
      if (it == vars.end()) throw std::invalid_argument("unknown placeholder {" + key + "}");
      out += it->second;
      i = close + 1;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

std::string to_string(UserActKind kind) {
  switch (kind) {
    case UserActKind::open: return "open";
    case UserActKind::inform: return "inform";
    case UserActKind::dont_know: return "dont_know";
    case UserActKind::irrelevant: return "irrelevant";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

UserGoal sample_goal(const KbTable& kb, Rng& rng, const UserConfig& cfg) {
  cfg.validate();
  UserGoal g;
  g.target_row = rng.below(kb.n_rows());
  g.known.resize(kb.n_slots());
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    const bool knows = rng.bernoulli(cfg.p_know);
    // Without ground truth a missing cell cannot be known.
    const ValueId v = kb.has_truth() ? kb.truth(g.target_row, j) : kb.cell(g.target_row, j);
    if (knows && v != kMissing) g.known[j] = v;
  }
  return g;
}

UserSimulator::UserSimulator(const KbTable& kb, const TemplatePack& templates, const NoiseConfig& noise, UserGoal goal)
    : kb_(&kb), templates_(&templates), noise_(noise), goal_(std::move(goal)) {
  noise_.validate();
  if (goal_.known.size() != kb.n_slots() || goal_.target_row >= kb.n_rows())
    throw std::invalid_argument("user goal does not fit the KB");
}

const std::string& UserSimulator::pick(const std::string& act, Rng& rng) const {
  const auto& list = templates_->get(act);
  return list[rng.below(list.size())];
}

std::string UserSimulator::mention(std::size_t j, ValueId v, Rng& rng) const {
  const std::size_t vocab = kb_->vocab_size(j);
  if (vocab > 1 && rng.bernoulli(noise_.p_substitute)) {
    auto other = static_cast<ValueId>(rng.below(vocab - 1));
    if (other >= v) ++other;
    v = other;
  }
  Tokens toks = kb_->value_tokens(j, v);
  if (toks.size() > 1 && rng.bernoulli(noise_.p_corrupt)) {
    // Drop each token with probability 1/2, keeping at least one.
    Tokens kept;
    for (const auto& t : toks)
      if (!rng.bernoulli(0.5)) kept.push_back(t);
    if (kept.empty()) kept.push_back(toks[rng.below(toks.size())]);
    toks = std::move(kept);
  }
  return join(toks);
}

UserTurn UserSimulator::open(Rng& rng) {
  UserTurn turn;
  turn.kind = UserActKind::open;
  auto known = goal_.known_slots();
  if (known.empty()) {
    turn.text = pick("open_empty", rng);
  } else {
    rng.shuffle(known.begin(), known.end());
    known.resize(1 + rng.below(known.size()));
    std::sort(known.begin(), known.end());
    std::string constraints;
    for (std::size_t k = 0; k < known.size(); ++k) {
      const std::size_t j = known[k];
      const ValueId v = *goal_.known[j];
      if (k > 0) constraints += k + 1 == known.size() ? " and " : " , ";
      constraints += fill_template(pick("constraint", rng),
                                   {{"slot", kb_->display_name(j)}, {"value", mention(j, v, rng)}});
      turn.revealed.emplace_back(j, v);
    }
    turn.text = fill_template(pick("open", rng), {{"constraints", constraints}});
  }
  turn.tokens = tokenize(turn.text);
  return turn;
}

UserTurn UserSimulator::respond(std::size_t slot, Rng& rng) {
  if (slot >= kb_->n_slots()) throw std::invalid_argument("request for unknown slot");
  UserTurn turn;
  if (rng.bernoulli(noise_.p_irrelevant)) {
    turn.kind = UserActKind::irrelevant;
    turn.text = pick("irrelevant", rng);
  } else if (goal_.knows(slot)) {
    turn.kind = UserActKind::inform;
    const ValueId v = *goal_.known[slot];
    turn.text = fill_template(pick("inform", rng),
                              {{"slot", kb_->display_name(slot)}, {"value", mention(slot, v, rng)}});
    turn.revealed.emplace_back(slot, v);
  } else {
    turn.kind = UserActKind::dont_know;
    turn.text = fill_template(pick("dont_know", rng), {{"slot", kb_->display_name(slot)}});
    turn.unknown.push_back(slot);
  }
  turn.tokens = tokenize(turn.text);
  return turn;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> target_rank(const UserGoal& goal, const std::vector<RowIndex>& inform) {
  for (std::size_t k = 0; k < inform.size(); ++k)
    if (inform[k] == goal.target_row) return k + 1;
  return std::nullopt;
}

double score_inform(const UserGoal& goal, const std::vector<RowIndex>& inform, const RewardConfig& cfg) {
  const auto rank = target_rank(goal, inform);
  if (!rank || *rank > cfg.r) return cfg.fail_reward;
  const double r = static_cast<double>(*rank);
  return std::max(0.0, 2.0 * (1.0 - (r - 1.0) / static_cast<double>(cfg.r)));
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  double g = 0.0, w = 1.0;
  for (double r : rewards) {
    g += w * r;
    w *= gamma;
  }
  return g;
}

std::string render_agent_action(const Action& action, const KbTable& kb, const TemplatePack& templates, int turn) {
  const std::size_t k = turn < 0 ? 0 : static_cast<std::size_t>(turn);
  if (!action.is_inform()) {
    const auto& list = templates.get("agent_request");
    return fill_template(list[k % list.size()], {{"slot", kb.display_name(action.slot)}});
  }
  std::string results;
  for (std::size_t r = 0; r < action.results.size(); ++r) {
    const RowIndex i = action.results[r];
    if (r > 0) results += "; ";
    results += std::to_string(r + 1) + ") ";
    bool first = true;
    for (std::size_t j = 0; j < kb.n_slots() && j < 3; ++j) {
      if (!first) results += ", ";
      first = false;
      results += kb.is_missing(i, j) ? std::string("?") : kb.value(j, kb.cell(i, j));
    }
  }
  const auto& list = templates.get("agent_inform");
  return fill_template(list[k % list.size()], {{"results", results}});
}

}  // namespace infobot
