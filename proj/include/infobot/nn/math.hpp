#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace infobot::nn {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Max-subtracted softmax; -inf entries get probability 0.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> x);

// Shannon entropy in nats with 0 log 0 = 0.
double entropy(std::span<const double> p);

}  // namespace infobot::nn
