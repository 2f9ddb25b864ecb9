#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "infobot/belief_state.hpp"
#include "infobot/kb.hpp"
#include "infobot/nn/graph.hpp"
#include "infobot/nn/gru.hpp"
#include "infobot/text.hpp"

namespace infobot {

// Unigram + bigram index. Bigrams join adjacent tokens with a single space;
// no boundary padding.
class FeatureVocab {
 public:
  FeatureVocab() = default;
  explicit FeatureVocab(std::vector<std::string> entries);

  std::size_t size() const { return entries_.size(); }
  std::optional<std::uint32_t> index(std::string_view ngram) const;
  const std::vector<std::string>& entries() const { return entries_; }

  nlohmann::json to_json() const { return entries_; }
  static FeatureVocab from_json(const nlohmann::json& j) { return FeatureVocab(j.get<std::vector<std::string>>()); }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Unigrams and bigrams of a token sequence, in order of appearance.
std::vector<std::string> ngrams(const Tokens& tokens);

// Union of corpus n-grams and KB value / slot-name n-grams, in first-seen
// order (corpus first, then KB slots in order).
FeatureVocab build_vocab(const std::vector<std::string>& corpus, const KbTable& kb);

// Count vector over the vocabulary; out-of-vocabulary n-grams are dropped.
nn::SparseVec featurize(const Tokens& tokens, const FeatureVocab& vocab);

// One GRU plus softmax/sigmoid heads per slot, parameters named
// "<prefix>.<j>.gru.*", "<prefix>.<j>.p.*", "<prefix>.<j>.q.*".
class NeuralTracker {
 public:
  static void register_params(nn::ParamStore& params, const KbTable& kb, std::size_t vocab_size,
                              std::size_t hidden_size, const std::string& prefix = "tracker");

  NeuralTracker(const nn::ParamStore& params, const KbTable& kb, const std::string& prefix = "tracker");

  struct State {
    std::vector<nn::Var> hidden;
  };
  struct Output {
    std::vector<nn::Var> p_logits;
    std::vector<nn::Var> p;
    std::vector<nn::Var> q_logit;
    std::vector<nn::Var> q;
  };

  State initial_state(nn::Graph& g) const;
  Output step(nn::Graph& g, State& state, const nn::SparseVec& x) const;

  std::size_t n_slots() const { return slots_.size(); }
  std::size_t vocab_size() const { return slots_.empty() ? 0 : slots_[0].gru.input_size; }
  std::size_t hidden_size() const { return slots_.empty() ? 0 : slots_[0].gru.hidden_size; }

 private:
  struct SlotNet {
    nn::GruLayer gru;
    nn::AffineLayer p_head;
    nn::AffineLayer q_head;
  };
  std::vector<SlotNet> slots_;
};

BeliefState to_belief_state(const nn::Graph& g, const NeuralTracker::Output& out, int turn);

// Stateful convenience wrapper: one graph per dialogue, h_j^0 = 0.
class NeuralTrackerSession {
 public:
  NeuralTrackerSession(const nn::ParamStore& params, const KbTable& kb, const FeatureVocab& vocab);
  BeliefState step(const Tokens& utterance);
  BeliefState step(const nn::SparseVec& x);

 private:
  nn::Graph graph_;
  NeuralTracker tracker_;
  const FeatureVocab* vocab_;
  NeuralTracker::State state_;
  int turn_ = 0;
};

}  // namespace infobot
