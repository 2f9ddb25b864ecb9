#pragma once

#include <cstddef>
#include <vector>

namespace infobot {

class KbTable;

// Per-slot multinomial over the slot vocabulary plus the probability that the
// user knows the slot's value.
struct BeliefState {
  std::vector<std::vector<double>> slot_dists;
  std::vector<double> know_probs;
  int turn = 0;

  std::size_t n_slots() const { return know_probs.size(); }

  // Throws std::invalid_argument if shapes disagree with `kb`, a distribution
  // does not sum to one within `tol`, or a know-probability leaves [0, 1].
  void validate(const KbTable& kb, double tol = 1e-9) const;
};

}  // namespace infobot
