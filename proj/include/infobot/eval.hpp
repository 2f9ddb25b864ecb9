#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "infobot/episode.hpp"

namespace infobot {

struct EpisodeSummary {
  std::size_t turns = 0;
  double reward = 0.0;  // undiscounted
  bool success = false;
  int rank = 0;         // 0 when the target was not informed
};

struct EvalReport {
  std::string agent;
  std::size_t n_episodes = 0;
  double avg_turns = 0.0;
  double success_rate = 0.0;
  double avg_reward = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n); 0 when n == 1
  std::vector<EpisodeSummary> episodes;

  nlohmann::json to_json(bool with_episodes = false) const;
  // Per-episode CSV: episode,turns,reward,success,rank
  void write_csv(std::ostream& out) const;
};

// n greedy rollouts; episode i draws from Rng::stream(seed, i).
EvalReport evaluate(const AgentModel& model, const SimSetup& sim, std::size_t n, std::uint64_t seed);

struct SweepRow {
  std::string agent;
  double noise = 0.0;
  double avg_reward = 0.0;
  double std_err = 0.0;
};

// Evaluates every model at each p_irrelevant value in `grid`; the other noise
// settings come from `sim`.
std::vector<SweepRow> noise_sweep(const std::vector<const AgentModel*>& models, const SimSetup& sim,
                                  const std::vector<double>& grid, std::size_t n, std::uint64_t seed);
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

// Compensated running sum.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace infobot
