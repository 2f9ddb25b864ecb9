#include "infobot/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "infobot/rng.hpp"

namespace infobot::nn {

GradCheckResult finite_diff_check(ParamStore& params, const std::function<Var(Graph&)>& loss_fn,
                                  const GradCheckOptions& opts, const Gradients* frozen) {
  Gradients analytic(params);
  {
    Graph g(params, &analytic);
    g.backward(loss_fn(g));
  }
  auto eval = [&] {
    Graph g(params);
    return g.scalar(loss_fn(g));
  };

  GradCheckResult res;
  Rng rng(opts.seed);
  for (std::uint32_t t = 0; t < params.size(); ++t) {
    const ParamId id{t};
    if (frozen && frozen->frozen(id)) continue;
    auto& data = params.tensor(id).data;
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (opts.max_per_tensor && idx.size() > opts.max_per_tensor) {
      rng.shuffle(idx.begin(), idx.end());
      idx.resize(opts.max_per_tensor);
    }
    for (std::size_t k : idx) {
      const double orig = data[k];
      data[k] = orig + opts.eps;
      const double up = eval();
      data[k] = orig - opts.eps;
      const double down = eval();
      data[k] = orig;
      const double numeric = (up - down) / (2.0 * opts.eps);
      const double a = analytic[id][k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opts.floor});
      ++res.checked;
      if (!(rel <= res.max_rel_error)) {
        res.max_rel_error = std::isnan(rel) ? INFINITY : rel;
        res.worst_param = params.tensor(id).name;
        res.worst_index = k;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace infobot::nn
