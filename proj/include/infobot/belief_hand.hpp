#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "infobot/belief_state.hpp"
#include "infobot/kb.hpp"
#include "infobot/text.hpp"

namespace infobot {

// Slot the agent requested on its previous turn, if any.
struct RequestFlag {
  std::optional<std::size_t> slot;

  std::vector<double> one_hot(std::size_t n_slots) const;
};

struct HandTrackerConfig {
  double c = 10.0;
  // When true the slot-name and request terms only add mass to values with a
  // nonzero match score; when false they are added to every value of the slot.
  bool gate_on_match = true;

  void validate() const;
};

// |tokens(u) ∩ tokens(v)| / |tokens(v)| over token sets. Throws
// std::invalid_argument for an empty value.
double match_score(const Tokens& utterance, const Tokens& value);

BeliefState reset_beliefs(const KbTable& kb);

// One turn of the keyword-matching tracker:
//   p_j[v] ∝ p_j[v] + C (s_j[v] + b_j + 1[req_j])
// where s is the value match score and b the slot-name match score. q_j drops
// to 0 when slot j was requested and no value of it was matched, returns to 1
// when a value of slot j is matched, and is otherwise carried over.
BeliefState hand_update(const BeliefState& state, const Tokens& utterance, const RequestFlag& req, const KbTable& kb,
                        const HandTrackerConfig& cfg);

}  // namespace infobot
