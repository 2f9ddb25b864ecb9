#include "infobot/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace infobot {

void RulePolicyConfig::validate() const {
  if (!(alpha_r >= 0.0) || !(alpha_t >= 0.0) || !(beta >= 0.0))
    throw std::invalid_argument("rule policy thresholds must be >= 0");
  if (q_max < 1) throw std::invalid_argument("rule policy q_max must be >= 1");
}

Action rule_select(std::span<const double> slot_entropies, double kb_entropy, std::span<const int> request_counts,
                   std::span<const double> initial_entropies, const RulePolicyConfig& cfg) {
  const std::size_t m = slot_entropies.size();
  if (request_counts.size() != m || initial_entropies.size() != m)
    throw std::invalid_argument("rule_select: slot count mismatch");
  if (kb_entropy < cfg.alpha_r) return Action::inform();
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < m; ++j) {
    const double floor = std::min(cfg.alpha_t, cfg.beta * initial_entropies[j]);
    if (slot_entropies[j] < floor || request_counts[j] >= cfg.q_max) continue;
    if (!best) {
      best = j;
      continue;
    }
    const bool better = cfg.max_entropy_first ? slot_entropies[j] > slot_entropies[*best]
                                              : slot_entropies[j] < slot_entropies[*best];
    if (better) best = j;
  }
  return best ? Action::request(*best) : Action::inform();
}

Action rule_select(const SummaryState& summary, std::span<const int> request_counts,
                   std::span<const double> initial_entropies, const RulePolicyConfig& cfg) {
  return rule_select(summary.slot_entropies, summary.kb_entropy, request_counts, initial_entropies, cfg);
}

void PolicyNet::register_params(nn::ParamStore& params, std::size_t input_size, std::size_t n_actions,
                                std::size_t hidden_size, const std::string& prefix) {
  nn::GruLayer::create(params, prefix + ".gru", input_size, hidden_size);
  nn::AffineLayer::create(params, prefix + ".out", hidden_size, n_actions);
}

PolicyNet::PolicyNet(const nn::ParamStore& params, const std::string& prefix)
    : gru_(nn::GruLayer::bind(params, prefix + ".gru")), out_(nn::AffineLayer::bind(params, prefix + ".out")) {}

nn::Var PolicyNet::step(nn::Graph& g, nn::Var& h, nn::Var input) const {
  if (g.value(input).size() != gru_.input_size)
    throw std::invalid_argument("PolicyNet: input length " + std::to_string(g.value(input).size()) + ", expected " +
                                std::to_string(gru_.input_size));
  h = gru_.step(g, input, h);
  return g.log_softmax(out_.forward(g, h));
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  double total = 0.0;
  for (double p : probs) total += p;
  if (!(total > 0.0)) throw std::invalid_argument("sample_categorical: no probability mass");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

InformSample sample_inform(std::span<const double> posterior, std::size_t r, Rng& rng) {
  const std::size_t n = posterior.size();
  if (r > n) throw std::invalid_argument("sample_inform: R exceeds the number of rows");
  InformSample out;
  std::vector<double> mass(posterior.begin(), posterior.end());
  double used = 0.0;
  while (out.rows.size() < r) {
    double remaining = 0.0;
    for (double x : mass) remaining += x;
    if (!(remaining > 0.0)) break;
    const std::size_t i = sample_categorical(mass, rng);
    out.log_mu += std::log(posterior[i]) - std::log(1.0 - used);
    used += posterior[i];
    mass[i] = 0.0;
    out.rows.push_back(i);
  }
  out.sampled = out.rows.size();
  if (out.rows.size() < r) {
    std::vector<RowIndex> rest;
    for (std::size_t i = 0; i < n; ++i)
      if (std::find(out.rows.begin(), out.rows.end(), i) == out.rows.end()) rest.push_back(i);
    rng.shuffle(rest.begin(), rest.end());
    for (std::size_t k = 0; out.rows.size() < r; ++k) out.rows.push_back(rest[k]);
  }
  return out;
}

double log_mu(std::span<const double> posterior, std::span<const RowIndex> rows) {
  double lm = 0.0, used = 0.0;
  for (RowIndex i : rows) {
    lm += std::log(posterior[i]) - std::log(1.0 - used);
    used += posterior[i];
  }
  return lm;
}

std::vector<RowIndex> greedy_inform(std::span<const double> posterior, std::size_t r) {
  std::vector<RowIndex> idx(posterior.size());
  std::iota(idx.begin(), idx.end(), RowIndex{0});
  r = std::min(r, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(r), idx.end(),
                    [&](RowIndex a, RowIndex b) { return posterior[a] > posterior[b] || (posterior[a] == posterior[b] && a < b); });
  idx.resize(r);
  return idx;
}

}  // namespace infobot
