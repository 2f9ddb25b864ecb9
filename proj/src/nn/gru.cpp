#include "infobot/nn/gru.hpp"

#include <stdexcept>

#include "infobot/nn/math.hpp"

namespace infobot::nn {

GruLayer GruLayer::create(ParamStore& params, const std::string& prefix, std::size_t input_size,
                          std::size_t hidden_size) {
  if (input_size == 0 || hidden_size == 0) throw std::invalid_argument("GruLayer: empty shape");
  GruLayer g;
  g.input_size = input_size;
  g.hidden_size = hidden_size;
  g.w_r = params.add(prefix + ".W_r", hidden_size, input_size);
  g.u_r = params.add(prefix + ".U_r", hidden_size, hidden_size);
  g.b_r = params.add(prefix + ".b_r", hidden_size, 1);
  g.w_z = params.add(prefix + ".W_z", hidden_size, input_size);
  g.u_z = params.add(prefix + ".U_z", hidden_size, hidden_size);
  g.b_z = params.add(prefix + ".b_z", hidden_size, 1);
  g.w_h = params.add(prefix + ".W_h", hidden_size, input_size);
  g.u_h = params.add(prefix + ".U_h", hidden_size, hidden_size);
  g.b_h = params.add(prefix + ".b_h", hidden_size, 1);
  return g;
}

GruLayer GruLayer::bind(const ParamStore& params, const std::string& prefix) {
  GruLayer g;
  g.w_r = params.id(prefix + ".W_r");
  g.u_r = params.id(prefix + ".U_r");
  g.b_r = params.id(prefix + ".b_r");
  g.w_z = params.id(prefix + ".W_z");
  g.u_z = params.id(prefix + ".U_z");
  g.b_z = params.id(prefix + ".b_z");
  g.w_h = params.id(prefix + ".W_h");
  g.u_h = params.id(prefix + ".U_h");
  g.b_h = params.id(prefix + ".b_h");
  g.hidden_size = params.tensor(g.w_r).rows;
  g.input_size = params.tensor(g.w_r).cols;
  return g;
}

Var GruLayer::combine(Graph& g, Var wx_r, Var wx_z, Var wx_h, Var h) const {
  if (g.value(h).size() != hidden_size) throw std::invalid_argument("GruLayer: hidden state size mismatch");
  Var r = g.sigmoid(g.bias_add(g.add(wx_r, g.matvec(u_r, h)), b_r));
  Var z = g.sigmoid(g.bias_add(g.add(wx_z, g.matvec(u_z, h)), b_z));
  Var cand = g.tanh(g.bias_add(g.add(wx_h, g.matvec(u_h, g.mul(r, h))), b_h));
  return g.add(g.mul(g.one_minus(z), h), g.mul(z, cand));
}

Var GruLayer::step(Graph& g, Var x, Var h) const {
  return combine(g, g.matvec(w_r, x), g.matvec(w_z, x), g.matvec(w_h, x), h);
}

Var GruLayer::step(Graph& g, const SparseVec& x, Var h) const {
  return combine(g, g.matvec(w_r, x), g.matvec(w_z, x), g.matvec(w_h, x), h);
}

AffineLayer AffineLayer::create(ParamStore& params, const std::string& prefix, std::size_t input_size,
                                std::size_t output_size) {
  AffineLayer a;
  a.input_size = input_size;
  a.output_size = output_size;
  a.w = params.add(prefix + ".W", output_size, input_size);
  a.b = params.add(prefix + ".b", output_size, 1);
  return a;
}

AffineLayer AffineLayer::bind(const ParamStore& params, const std::string& prefix) {
  AffineLayer a;
  a.w = params.id(prefix + ".W");
  a.b = params.id(prefix + ".b");
  a.output_size = params.tensor(a.w).rows;
  a.input_size = params.tensor(a.w).cols;
  return a;
}

Vec gru_step(const ParamStore& params, const GruLayer& gru, std::span<const double> x, std::span<const double> h) {
  if (x.size() != gru.input_size || h.size() != gru.hidden_size) throw std::invalid_argument("gru_step: shape mismatch");
  Graph g(params);
  Var out = gru.step(g, g.constant(Vec(x.begin(), x.end())), g.constant(Vec(h.begin(), h.end())));
  return g.value(out);
}

Vec affine_softmax(const ParamStore& params, const AffineLayer& layer, std::span<const double> h) {
  if (h.size() != layer.input_size) throw std::invalid_argument("affine_softmax: shape mismatch");
  Graph g(params);
  return g.value(g.softmax(layer.forward(g, g.constant(Vec(h.begin(), h.end())))));
}

double affine_sigmoid(const ParamStore& params, const AffineLayer& layer, std::span<const double> h) {
  if (h.size() != layer.input_size || layer.output_size != 1) throw std::invalid_argument("affine_sigmoid: shape mismatch");
  Graph g(params);
  return g.scalar(g.sigmoid(layer.forward(g, g.constant(Vec(h.begin(), h.end())))));
}

}  // namespace infobot::nn
