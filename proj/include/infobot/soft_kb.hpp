#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "infobot/belief_state.hpp"
#include "infobot/kb.hpp"
#include "infobot/nn/graph.hpp"

namespace infobot {

struct KbPosterior {
  std::vector<double> probs;
  // Every row had zero score; probs fell back to uniform.
  bool degenerate = false;
};

struct SummaryState {
  std::vector<double> slot_entropies;  // H(w_j)
  std::vector<double> know_probs;      // q_j
  double kb_entropy = 0.0;             // H(p_T)

  // [H(w_1..M), q_1..M, H(p_T)], length 2M+1.
  std::vector<double> flatten() const;
};

// Pr(G = i) ∝ Π_j [ q_j Pr(G_j = i | Φ_j = 1) + (1 - q_j) / N ] where
//   Pr(G_j = i | Φ_j = 1) = 1/N                              if T_ij missing
//                         = p_j(v)/N_j(v) (1 - |M_j|/N)      if T_ij = v
KbPosterior posterior(const BeliefState& beliefs, const KbTable& kb);

// Brute-force version that sums over every assignment of (Φ_1..Φ_M). Limited
// to N <= 50 and M <= 6.
KbPosterior posterior_oracle(const BeliefState& beliefs, const KbTable& kb);

// w_j(v) ∝ Σ_{i: T_ij = v} p_T(i) + p_j^0(v) Σ_{i: T_ij missing} p_T(i)
std::vector<double> weighted_slot_dist(std::span<const double> posterior, const KbTable& kb, std::size_t j);

SummaryState summarize(const BeliefState& beliefs, const KbPosterior& post, const KbTable& kb);

// Differentiable counterparts. `p[j]` is the slot distribution and `q[j]` a
// size-1 know probability.
nn::Var posterior_op(nn::Graph& g, const KbTable& kb, std::span<const nn::Var> p, std::span<const nn::Var> q);
nn::Var slot_weights_op(nn::Graph& g, const KbTable& kb, nn::Var post, std::size_t j);
// Flattened 2M+1 summary vector.
nn::Var summary_op(nn::Graph& g, const KbTable& kb, nn::Var post, std::span<const nn::Var> q);
// log μ(I) for the first `prefix` entries of I (all of I by default).
nn::Var log_mu_op(nn::Graph& g, nn::Var post, const std::vector<RowIndex>& inform, std::size_t prefix = SIZE_MAX);

}  // namespace infobot
