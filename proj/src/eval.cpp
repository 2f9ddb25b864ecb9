#include "infobot/eval.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace infobot {

nlohmann::json EvalReport::to_json(bool with_episodes) const {
  nlohmann::json j = {{"agent", agent},
                      {"n_episodes", n_episodes},
                      {"avg_turns", avg_turns},
                      {"success_rate", success_rate},
                      {"avg_reward", avg_reward},
                      {"std_error", std_error}};
  if (with_episodes) {
    auto arr = nlohmann::json::array();
    for (const auto& e : episodes)
      arr.push_back({{"turns", e.turns}, {"reward", e.reward}, {"success", e.success}, {"rank", e.rank}});
    j["episodes"] = arr;
  }
  return j;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "episode,turns,reward,success,rank\n";
  out.precision(17);
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    out << i << ',' << e.turns << ',' << e.reward << ',' << (e.success ? 1 : 0) << ',' << e.rank << '\n';
  }
}

EvalReport evaluate(const AgentModel& model, const SimSetup& sim, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("evaluate: n must be >= 1");
  EvalReport rep;
  rep.agent = to_string(model.variant);
  rep.n_episodes = n;
  KahanSum turns, reward, success;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, i);
    const Episode ep = rollout(model, sim, ActMode::greedy, rng);
    EpisodeSummary s;
    s.turns = ep.n_turns();
    s.reward = ep.total_reward;
    s.success = ep.success;
    s.rank = ep.rank ? static_cast<int>(*ep.rank) : 0;
    turns.add(static_cast<double>(s.turns));
    reward.add(s.reward);
    success.add(s.success ? 1.0 : 0.0);
    rep.episodes.push_back(s);
  }
  const double nd = static_cast<double>(n);
  rep.avg_turns = turns.value() / nd;
  rep.success_rate = success.value() / nd;
  rep.avg_reward = reward.value() / nd;
  if (n > 1) {
    KahanSum sq;
    for (const auto& e : rep.episodes) sq.add((e.reward - rep.avg_reward) * (e.reward - rep.avg_reward));
    rep.std_error = std::sqrt(sq.value() / (nd - 1.0)) / std::sqrt(nd);
  }
  return rep;
}

std::vector<SweepRow> noise_sweep(const std::vector<const AgentModel*>& models, const SimSetup& sim,
                                  const std::vector<double>& grid, std::size_t n, std::uint64_t seed) {
  std::vector<SweepRow> rows;
  for (const AgentModel* m : models) {
    for (double p : grid) {
      SimSetup s = sim;
      s.noise.p_irrelevant = p;
      s.noise.validate();
      const EvalReport rep = evaluate(*m, s, n, seed);
      rows.push_back({rep.agent, p, rep.avg_reward, rep.std_error});
    }
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "agent,noise,avg_reward,std_err\n";
  out.precision(17);
  for (const auto& r : rows) out << r.agent << ',' << r.noise << ',' << r.avg_reward << ',' << r.std_err << '\n';
}

}  // namespace infobot
