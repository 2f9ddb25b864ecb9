#include "infobot/belief_hand.hpp"

#include <stdexcept>
#include <string>
#include <unordered_set>

namespace infobot {

std::vector<double> RequestFlag::one_hot(std::size_t n_slots) const {
  std::vector<double> out(n_slots, 0.0);
  if (slot && *slot < n_slots) out[*slot] = 1.0;
  return out;
}

void HandTrackerConfig::validate() const {
  if (!(c >= 0.0)) throw std::invalid_argument("HandTrackerConfig: c must be >= 0");
}

namespace {

using TokenSet = std::unordered_set<std::string>;

double set_score(const TokenSet& utterance, const Tokens& value) {
  TokenSet uniq(value.begin(), value.end());
  if (uniq.empty()) throw std::invalid_argument("match_score: empty value");
  std::size_t hit = 0;
  for (const auto& w : uniq) hit += utterance.count(w);
  return static_cast<double>(hit) / static_cast<double>(uniq.size());
}

}  // namespace

double match_score(const Tokens& utterance, const Tokens& value) {
  return set_score(TokenSet(utterance.begin(), utterance.end()), value);
}

BeliefState reset_beliefs(const KbTable& kb) {
  BeliefState s;
  s.slot_dists.resize(kb.n_slots());
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    const auto prior = kb.prior(j);
    s.slot_dists[j].assign(prior.begin(), prior.end());
  }
  s.know_probs.assign(kb.n_slots(), 1.0);
  s.turn = 0;
  return s;
}

BeliefState hand_update(const BeliefState& state, const Tokens& utterance, const RequestFlag& req, const KbTable& kb,
                        const HandTrackerConfig& cfg) {
  BeliefState next = state;
  next.turn = state.turn + 1;
  const TokenSet words(utterance.begin(), utterance.end());
  std::vector<double> scores;
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    const std::size_t nv = kb.vocab_size(j);
    scores.assign(nv, 0.0);
    bool any_match = false;
    for (std::size_t v = 0; v < nv; ++v) {
      scores[v] = set_score(words, kb.value_tokens(j, static_cast<ValueId>(v)));
      any_match = any_match || scores[v] > 0.0;
    }
    const double slot_score = kb.display_tokens(j).empty() ? 0.0 : set_score(words, kb.display_tokens(j));
    const bool requested = req.slot && *req.slot == j;
    const double shared = slot_score + (requested ? 1.0 : 0.0);

    auto& p = next.slot_dists[j];
    double total = 0.0;
    for (std::size_t v = 0; v < nv; ++v) {
      const bool eligible = !cfg.gate_on_match || scores[v] > 0.0;
      p[v] += cfg.c * (scores[v] + (eligible ? shared : 0.0));
      total += p[v];
    }
    for (double& x : p) x /= total;

    if (requested && !any_match) {
      next.know_probs[j] = 0.0;
    } else if (any_match) {
      next.know_probs[j] = 1.0;
    }
  }
  return next;
}

}  // namespace infobot
