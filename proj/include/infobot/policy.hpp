#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infobot/kb.hpp"
#include "infobot/nn/graph.hpp"
#include "infobot/nn/gru.hpp"
#include "infobot/rng.hpp"
#include "infobot/soft_kb.hpp"

namespace infobot {

// request(slot j) for j in [0, M), or inform(I). As an index into the M+1
// policy outputs, inform is M.
struct Action {
  enum class Kind { request, inform };
  Kind kind = Kind::inform;
  std::size_t slot = 0;
  std::vector<RowIndex> results;

  static Action request(std::size_t j) { return Action{Kind::request, j, {}}; }
  static Action inform(std::vector<RowIndex> rows = {}) { return Action{Kind::inform, 0, std::move(rows)}; }
  static Action from_index(std::size_t index, std::size_t n_slots) {
    return index < n_slots ? request(index) : inform();
  }

  bool is_inform() const { return kind == Kind::inform; }
  std::size_t index(std::size_t n_slots) const { return is_inform() ? n_slots : slot; }
};

struct RulePolicyConfig {
  double alpha_r = 1.0;  // inform once H(p_T) drops below this
  double alpha_t = 1.5;  // absolute slot-entropy floor
  double beta = 0.5;     // relative floor, fraction of the initial slot entropy
  int q_max = 1;         // requests allowed per slot
  // Request the highest-entropy candidate instead of the lowest.
  bool max_entropy_first = false;

  void validate() const;
};

// Entropy rule. `slot_entropies` and `initial_entropies` are H(w_j) now and at
// the start of the dialogue.
Action rule_select(std::span<const double> slot_entropies, double kb_entropy, std::span<const int> request_counts,
                   std::span<const double> initial_entropies, const RulePolicyConfig& cfg);
Action rule_select(const SummaryState& summary, std::span<const int> request_counts,
                   std::span<const double> initial_entropies, const RulePolicyConfig& cfg);

// GRU over the per-turn policy input followed by a softmax over M+1 actions.
// Parameters are "<prefix>.gru.*" and "<prefix>.out.*".
class PolicyNet {
 public:
  static void register_params(nn::ParamStore& params, std::size_t input_size, std::size_t n_actions,
                              std::size_t hidden_size, const std::string& prefix = "policy");
  explicit PolicyNet(const nn::ParamStore& params, const std::string& prefix = "policy");

  std::size_t input_size() const { return gru_.input_size; }
  std::size_t n_actions() const { return out_.output_size; }

  nn::Var initial_state(nn::Graph& g) const { return gru_.initial_state(g); }
  // Advances h and returns log π over actions.
  nn::Var step(nn::Graph& g, nn::Var& h, nn::Var input) const;

 private:
  nn::GruLayer gru_;
  nn::AffineLayer out_;
};

std::size_t argmax(std::span<const double> v);  // lowest index on ties
std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

struct InformSample {
  std::vector<RowIndex> rows;
  double log_mu = 0.0;
  // Number of rows drawn from μ. Rows beyond it were padded uniformly from
  // zero-mass rows and are not part of log_mu.
  std::size_t sampled = 0;
  bool padded() const { return sampled < rows.size(); }
};

// Sequential draws without replacement, each proportional to the remaining mass.
InformSample sample_inform(std::span<const double> posterior, std::size_t r, Rng& rng);
// log μ(I) = Σ_k [log p(i_k) - log(1 - Σ_{l<k} p(i_l))]
double log_mu(std::span<const double> posterior, std::span<const RowIndex> rows);
// Top-r rows by probability, ties to the lowest row index.
std::vector<RowIndex> greedy_inform(std::span<const double> posterior, std::size_t r);

}  // namespace infobot
