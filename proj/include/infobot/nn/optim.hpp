#pragma once

#include "infobot/nn/param_store.hpp"

namespace infobot::nn {

// θ -= lr * g
void sgd_step(ParamStore& params, const Gradients& grads, double lr);

// Mean-square normalized step:
//   a = decay * a + (1 - decay) * g^2
//   θ -= lr * g / sqrt(a + eps)
class RmsProp {
 public:
  explicit RmsProp(const ParamStore& params, double decay = 0.9, double eps = 1e-8);

  void step(ParamStore& params, const Gradients& grads, double lr);
  const Vec& accumulator(ParamId id) const { return acc_.at(id.index); }

 private:
  double decay_;
  double eps_;
  std::vector<Vec> acc_;
};

}  // namespace infobot::nn
