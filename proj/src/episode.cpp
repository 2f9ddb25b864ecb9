#include "infobot/episode.hpp"

#include <stdexcept>

namespace infobot {

nlohmann::json Episode::transcript(const KbTable& kb, const TemplatePack& templates) const {
  nlohmann::json turns_json = nlohmann::json::array();
  for (std::size_t t = 0; t < turns.size(); ++t) {
    const auto& rec = turns[t];
    nlohmann::json agent = {{"act", rec.action.is_inform() ? "inform" : "request"},
                            {"text", render_agent_action(rec.action, kb, templates, rec.turn)}};
    if (rec.action.is_inform())
      agent["results"] = rec.action.results;
    else
      agent["slot"] = kb.slot_name(rec.action.slot);
    turns_json.push_back({{"turn", rec.turn},
                          {"user", {{"act", to_string(user_turns[t].kind)}, {"text", user_turns[t].text}}},
                          {"agent", agent},
                          {"reward", rewards[t]}});
  }
  nlohmann::json known = nlohmann::json::object();
  for (std::size_t j = 0; j < goal.known.size(); ++j)
    if (goal.known[j]) known[kb.slot_name(j)] = kb.value(j, *goal.known[j]);
  return {{"target_row", goal.target_row}, {"known", known},         {"turns", turns_json},
          {"total_reward", total_reward},  {"success", success},     {"timed_out", timed_out},
          {"rank", rank ? nlohmann::json(*rank) : nlohmann::json()}};
}

Episode rollout(const AgentModel& model, const SimSetup& sim, ActMode mode, Rng& rng) {
  if (!sim.templates) throw std::invalid_argument("rollout: no template pack");
  const KbTable& kb = *model.kb;
  const RewardConfig& rc = model.cfg.reward;

  Episode ep;
  ep.goal = sample_goal(kb, rng, sim.user);
  UserSimulator user(kb, *sim.templates, sim.noise, ep.goal);
  DialogueSession session(model, ep.goal);

  UserTurn obs = user.open(rng);
  for (int t = 1; t <= rc.max_turns; ++t) {
    ep.user_turns.push_back(obs);
    TurnRecord rec = session.step(Observation::from(obs), mode, rng);
    double r = rc.turn_penalty;
    const bool inform = rec.action.is_inform();
    if (inform) {
      r += score_inform(ep.goal, rec.action.results, rc);
      ep.rank = target_rank(ep.goal, rec.action.results);
      ep.success = ep.rank && *ep.rank <= rc.r;
    } else if (t == rc.max_turns) {
      r += rc.fail_reward;
      ep.timed_out = true;
    }
    const std::size_t slot = rec.action.slot;
    ep.turns.push_back(std::move(rec));
    ep.rewards.push_back(r);
    if (inform || ep.timed_out) break;
    obs = user.respond(slot, rng);
  }
  for (double r : ep.rewards) ep.total_reward += r;
  ep.discounted = discounted_return(ep.rewards, rc.gamma);
  return ep;
}

}  // namespace infobot
