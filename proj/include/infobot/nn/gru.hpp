#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "infobot/nn/graph.hpp"
#include "infobot/nn/param_store.hpp"

namespace infobot::nn {

// r = σ(W_r x + U_r h + b_r)
// z = σ(W_z x + U_z h + b_z)
// h~ = tanh(W_h x + U_h (r ⊙ h) + b_h)
// h' = (1 - z) ⊙ h + z ⊙ h~
struct GruLayer {
  ParamId w_r, u_r, b_r;
  ParamId w_z, u_z, b_z;
  ParamId w_h, u_h, b_h;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;

  static GruLayer create(ParamStore& params, const std::string& prefix, std::size_t input_size,
                         std::size_t hidden_size);
  static GruLayer bind(const ParamStore& params, const std::string& prefix);

  Var step(Graph& g, Var x, Var h) const;
  Var step(Graph& g, const SparseVec& x, Var h) const;
  Var initial_state(Graph& g) const { return g.constant(Vec(hidden_size, 0.0)); }

 private:
  Var combine(Graph& g, Var wx_r, Var wx_z, Var wx_h, Var h) const;
};

// y = W h + b
struct AffineLayer {
  ParamId w, b;
  std::size_t input_size = 0;
  std::size_t output_size = 0;

  static AffineLayer create(ParamStore& params, const std::string& prefix, std::size_t input_size,
                            std::size_t output_size);
  static AffineLayer bind(const ParamStore& params, const std::string& prefix);

  Var forward(Graph& g, Var h) const { return g.bias_add(g.matvec(w, h), b); }
};

// Plain evaluation helpers (no gradient tracking).
Vec gru_step(const ParamStore& params, const GruLayer& gru, std::span<const double> x, std::span<const double> h);
Vec affine_softmax(const ParamStore& params, const AffineLayer& layer, std::span<const double> h);
double affine_sigmoid(const ParamStore& params, const AffineLayer& layer, std::span<const double> h);

}  // namespace infobot::nn
