#include "infobot/belief_neural.hpp"

#include <map>
#include <stdexcept>
#include <unordered_set>

namespace infobot {

FeatureVocab::FeatureVocab(std::vector<std::string> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i], static_cast<std::uint32_t>(i)).second)
      throw std::invalid_argument("duplicate vocabulary entry: " + entries_[i]);
  }
}

std::optional<std::uint32_t> FeatureVocab::index(std::string_view ngram) const {
  auto it = index_.find(std::string(ngram));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ngrams(const Tokens& tokens) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.push_back(tokens[i]);
    if (i + 1 < tokens.size()) out.push_back(tokens[i] + " " + tokens[i + 1]);
  }
  return out;
}

FeatureVocab build_vocab(const std::vector<std::string>& corpus, const KbTable& kb) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::vector<std::string> entries;
  std::unordered_set<std::string> seen;
  auto add = [&](const Tokens& toks) {
    for (auto& g : ngrams(toks))
      if (seen.insert(g).second) entries.push_back(std::move(g));
  };
  for (const auto& line : corpus) add(tokenize(line));
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    add(kb.display_tokens(j));
    for (std::size_t v = 0; v < kb.vocab_size(j); ++v) add(kb.value_tokens(j, static_cast<ValueId>(v)));
  }
  return FeatureVocab(std::move(entries));
}

nn::SparseVec featurize(const Tokens& tokens, const FeatureVocab& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& g : ngrams(tokens))
    if (auto i = vocab.index(g)) counts[*i] += 1.0;
  nn::SparseVec x;
  x.dim = vocab.size();
  x.entries.assign(counts.begin(), counts.end());
  return x;
}

void NeuralTracker::register_params(nn::ParamStore& params, const KbTable& kb, std::size_t vocab_size,
                                    std::size_t hidden_size, const std::string& prefix) {
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    const std::string p = prefix + "." + std::to_string(j);
    nn::GruLayer::create(params, p + ".gru", vocab_size, hidden_size);
    nn::AffineLayer::create(params, p + ".p", hidden_size, kb.vocab_size(j));
    nn::AffineLayer::create(params, p + ".q", hidden_size, 1);
  }
}

NeuralTracker::NeuralTracker(const nn::ParamStore& params, const KbTable& kb, const std::string& prefix) {
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    const std::string p = prefix + "." + std::to_string(j);
    SlotNet s{nn::GruLayer::bind(params, p + ".gru"), nn::AffineLayer::bind(params, p + ".p"),
              nn::AffineLayer::bind(params, p + ".q")};
    if (s.p_head.output_size != kb.vocab_size(j))
      throw std::invalid_argument("NeuralTracker: head size does not match slot vocabulary");
    slots_.push_back(s);
  }
}

NeuralTracker::State NeuralTracker::initial_state(nn::Graph& g) const {
  State s;
  for (const auto& slot : slots_) s.hidden.push_back(slot.gru.initial_state(g));
  return s;
}

NeuralTracker::Output NeuralTracker::step(nn::Graph& g, State& state, const nn::SparseVec& x) const {
  Output out;
  for (std::size_t j = 0; j < slots_.size(); ++j) {
    const auto& s = slots_[j];
    state.hidden[j] = s.gru.step(g, x, state.hidden[j]);
    nn::Var logits = s.p_head.forward(g, state.hidden[j]);
    nn::Var q_logit = s.q_head.forward(g, state.hidden[j]);
    out.p_logits.push_back(logits);
    out.p.push_back(g.softmax(logits));
    out.q_logit.push_back(q_logit);
    out.q.push_back(g.sigmoid(q_logit));
  }
  return out;
}

BeliefState to_belief_state(const nn::Graph& g, const NeuralTracker::Output& out, int turn) {
  BeliefState b;
  b.turn = turn;
  for (std::size_t j = 0; j < out.p.size(); ++j) {
    b.slot_dists.push_back(g.value(out.p[j]));
    b.know_probs.push_back(g.value(out.q[j])[0]);
  }
  return b;
}

NeuralTrackerSession::NeuralTrackerSession(const nn::ParamStore& params, const KbTable& kb, const FeatureVocab& vocab)
    : graph_(params), tracker_(params, kb), vocab_(&vocab), state_(tracker_.initial_state(graph_)) {}

BeliefState NeuralTrackerSession::step(const Tokens& utterance) { return step(featurize(utterance, *vocab_)); }

BeliefState NeuralTrackerSession::step(const nn::SparseVec& x) {
  auto out = tracker_.step(graph_, state_, x);
  return to_belief_state(graph_, out, ++turn_);
}

}  // namespace infobot
