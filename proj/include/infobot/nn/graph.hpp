#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "infobot/nn/param_store.hpp"

namespace infobot::nn {

// Sparse constant input, e.g. a bag-of-n-grams count vector.
struct SparseVec {
  std::size_t dim = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;

  Vec dense() const;
};

struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

// Reverse-mode tape over vector-valued nodes. Forward values are computed
// eagerly as ops are recorded; backward() propagates d(loss)/d(node) and
// accumulates parameter gradients into the attached Gradients (if any).
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::uint32_t self)>;

  explicit Graph(const ParamStore& params, Gradients* grads = nullptr) : params_(&params), grads_(grads) {}

  Var constant(Vec value);
  Var param(ParamId id);

  Var matvec(ParamId w, Var x);
  Var matvec(ParamId w, const SparseVec& x);
  Var bias_add(Var a, ParamId b);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var one_minus(Var a);

  Var sigmoid(Var a);
  Var tanh(Var a);
  Var log(Var a);
  Var softmax(Var a);
  Var log_softmax(Var a);

  Var sum(Var a);
  Var element(Var a, std::size_t i);
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

  // -Σ p log p over a probability vector (0 log 0 := 0).
  Var entropy(Var p);
  // Σ t (log t - logq) for a fixed target distribution t.
  Var kl_to(const Vec& target, Var log_q);
  // Binary cross-entropy H(t, σ(z)) written in terms of the logit z (size 1).
  Var bce_with_logit(double target, Var z);

  // Adds an op whose value is supplied by the caller; `fn` reads
  // grad(self) and adds into the grads of its inputs.
  Var emit(Vec value, Backward fn);

  const Vec& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value.at(0); }
  Vec& grad(Var v) { return nodes_[v.id].grad; }
  Vec& grad(std::uint32_t id) { return nodes_[id].grad; }
  const Vec& value(std::uint32_t id) const { return nodes_[id].value; }

  const ParamStore& params() const { return *params_; }
  // nullptr when no gradients are attached or the parameter is frozen.
  Vec* param_grad(ParamId id) { return grads_ ? grads_->accumulator(id) : nullptr; }

  void backward(Var loss);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Vec value;
    Vec grad;
    Backward backward;
  };

  Var push(Vec value, Backward fn);

  const ParamStore* params_;
  Gradients* grads_;
  std::vector<Node> nodes_;
};

}  // namespace infobot::nn
