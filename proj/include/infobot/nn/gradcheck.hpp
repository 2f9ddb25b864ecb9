#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "infobot/nn/graph.hpp"

namespace infobot::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Entries per tensor to probe; 0 checks every entry.
  std::size_t max_per_tensor = 0;
  std::uint64_t seed = 0;
  // Relative error denominator floor: |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

// Compares backward() against central differences (f(θ+ε) - f(θ-ε)) / 2ε for
// the scalar loss built by `loss_fn`. `params` is perturbed in place and
// restored before returning. Parameters frozen in `frozen` are skipped.
GradCheckResult finite_diff_check(ParamStore& params, const std::function<Var(Graph&)>& loss_fn,
                                  const GradCheckOptions& opts = {}, const Gradients* frozen = nullptr);

}  // namespace infobot::nn
