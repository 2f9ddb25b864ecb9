#include "infobot/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace infobot::nn {

void sgd_step(ParamStore& params, const Gradients& grads, double lr) {
  if (grads.size() != params.size()) throw std::invalid_argument("sgd_step: gradient layout mismatch");
  for (std::uint32_t i = 0; i < params.size(); ++i) {
    auto& data = params.tensor(ParamId{i}).data;
    const auto& g = grads[ParamId{i}];
    for (std::size_t k = 0; k < data.size(); ++k) data[k] -= lr * g[k];
  }
}

RmsProp::RmsProp(const ParamStore& params, double decay, double eps) : decay_(decay), eps_(eps) {
  for (const auto& t : params.tensors()) acc_.emplace_back(t.data.size(), 0.0);
}

void RmsProp::step(ParamStore& params, const Gradients& grads, double lr) {
  if (grads.size() != params.size() || acc_.size() != params.size())
    throw std::invalid_argument("RmsProp: gradient layout mismatch");
  for (std::uint32_t i = 0; i < params.size(); ++i) {
    auto& data = params.tensor(ParamId{i}).data;
    const auto& g = grads[ParamId{i}];
    auto& a = acc_[i];
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (g[k] == 0.0 && a[k] == 0.0) continue;
      a[k] = decay_ * a[k] + (1.0 - decay_) * g[k] * g[k];
      data[k] -= lr * g[k] / std::sqrt(a[k] + eps_);
    }
  }
}

}  // namespace infobot::nn
