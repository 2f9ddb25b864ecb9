#include "infobot/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "infobot/nn/math.hpp"

namespace infobot::nn {

// ---------------------------------------------------------------------------
// math helpers

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size(), 0.0);
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  if (mx == -std::numeric_limits<double>::infinity()) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (double& x : out) x /= z;
  return out;
}

double log_sum_exp(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> out(logits.begin(), logits.end());
  for (double& x : out) x -= lse;
  return out;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

Vec SparseVec::dense() const {
  Vec out(dim, 0.0);
  for (const auto& [i, c] : entries) out.at(i) += c;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_same(const Vec& a, const Vec& b, const char* op) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var Graph::push(Vec value, Backward fn) {
  nodes_.push_back(Node{std::move(value), {}, std::move(fn)});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::emit(Vec value, Backward fn) { return push(std::move(value), std::move(fn)); }

Var Graph::constant(Vec value) { return push(std::move(value), nullptr); }

Var Graph::param(ParamId id) {
  return push(params_->tensor(id).data, [id](Graph& g, std::uint32_t self) {
    Vec* acc = g.param_grad(id);
    if (!acc) return;
    const Vec& gy = g.grad(self);
    for (std::size_t i = 0; i < gy.size(); ++i) (*acc)[i] += gy[i];
  });
}

Var Graph::matvec(ParamId w, Var x) {
  const Tensor& W = params_->tensor(w);
  const Vec& xv = value(x);
  if (xv.size() != W.cols) throw std::invalid_argument("matvec: shape mismatch for " + W.name);
  Vec y(W.rows, 0.0);
  for (std::size_t r = 0; r < W.rows; ++r) {
    const double* row = &W.data[r * W.cols];
    double s = 0.0;
    for (std::size_t c = 0; c < W.cols; ++c) s += row[c] * xv[c];
    y[r] = s;
  }
  const std::uint32_t xi = x.id;
  return push(std::move(y), [w, xi](Graph& g, std::uint32_t self) {
    const Tensor& W = g.params().tensor(w);
    const Vec& gy = g.grad(self);
    const Vec& xv = g.value(xi);
    Vec& gx = g.grad(xi);
    Vec* gw = g.param_grad(w);
    for (std::size_t r = 0; r < W.rows; ++r) {
      const double gr = gy[r];
      if (gr == 0.0) continue;
      const double* row = &W.data[r * W.cols];
      for (std::size_t c = 0; c < W.cols; ++c) gx[c] += row[c] * gr;
      if (gw) {
        double* grow = &(*gw)[r * W.cols];
        for (std::size_t c = 0; c < W.cols; ++c) grow[c] += gr * xv[c];
      }
    }
  });
}

Var Graph::matvec(ParamId w, const SparseVec& x) {
  const Tensor& W = params_->tensor(w);
  if (x.dim != W.cols) throw std::invalid_argument("sparse matvec: shape mismatch for " + W.name);
  Vec y(W.rows, 0.0);
  for (const auto& [c, v] : x.entries)
    for (std::size_t r = 0; r < W.rows; ++r) y[r] += W.data[r * W.cols + c] * v;
  return push(std::move(y), [w, entries = x.entries](Graph& g, std::uint32_t self) {
    Vec* gw = g.param_grad(w);
    if (!gw) return;
    const std::size_t cols = g.params().tensor(w).cols;
    const Vec& gy = g.grad(self);
    for (const auto& [c, v] : entries)
      for (std::size_t r = 0; r < gy.size(); ++r) (*gw)[r * cols + c] += gy[r] * v;
  });
}

Var Graph::bias_add(Var a, ParamId b) {
  const Tensor& B = params_->tensor(b);
  Vec y = value(a);
  check_same(y, B.data, "bias_add");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += B.data[i];
  const std::uint32_t ai = a.id;
  return push(std::move(y), [ai, b](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    if (Vec* gb = g.param_grad(b))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i];
  });
}

Var Graph::add(Var a, Var b) {
  Vec y = value(a);
  const Vec& bv = value(b);
  check_same(y, bv, "add");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const std::uint32_t ai = a.id, bi = b.id;
  return push(std::move(y), [ai, bi](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    Vec& gb = g.grad(bi);
    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
  });
}

Var Graph::sub(Var a, Var b) {
  Vec y = value(a);
  const Vec& bv = value(b);
  check_same(y, bv, "sub");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const std::uint32_t ai = a.id, bi = b.id;
  return push(std::move(y), [ai, bi](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    Vec& gb = g.grad(bi);
    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
  });
}

Var Graph::mul(Var a, Var b) {
  const Vec& av = value(a);
  const Vec& bv = value(b);
  check_same(av, bv, "mul");
  Vec y(av.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  const std::uint32_t ai = a.id, bi = b.id;
  return push(std::move(y), [ai, bi](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    const Vec& av = g.value(ai);
    const Vec& bv = g.value(bi);
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    Vec& gb = g.grad(bi);
    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
  });
}

Var Graph::scale(Var a, double c) {
  Vec y = value(a);
  for (double& x : y) x *= c;
  const std::uint32_t ai = a.id;
  return push(std::move(y), [ai, c](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += c * gy[i];
  });
}

Var Graph::one_minus(Var a) {
  Vec y = value(a);
  for (double& x : y) x = 1.0 - x;
  const std::uint32_t ai = a.id;
  return push(std::move(y), [ai](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] -= gy[i];
  });
}

Var Graph::sigmoid(Var a) {
  Vec y = value(a);
  for (double& x : y) x = nn::sigmoid(x);
  const std::uint32_t ai = a.id;
  return push(std::move(y), [ai](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    const Vec& y = g.value(self);
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * y[i] * (1.0 - y[i]);
  });
}

Var Graph::tanh(Var a) {
  Vec y = value(a);
  for (double& x : y) x = std::tanh(x);
  const std::uint32_t ai = a.id;
  return push(std::move(y), [ai](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    const Vec& y = g.value(self);
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * (1.0 - y[i] * y[i]);
  });
}

Var Graph::log(Var a) {
  Vec y = value(a);
  for (double& x : y) x = std::log(x);
  const std::uint32_t ai = a.id;
  return push(std::move(y), [ai](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    const Vec& av = g.value(ai);
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i)
      if (gy[i] != 0.0) ga[i] += gy[i] / av[i];
  });
}

Var Graph::softmax(Var a) {
  Vec y = nn::softmax(value(a));
  const std::uint32_t ai = a.id;
  return push(std::move(y), [ai](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    const Vec& y = g.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += gy[i] * y[i];
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += y[i] * (gy[i] - dot);
  });
}

Var Graph::log_softmax(Var a) {
  Vec y = nn::log_softmax(value(a));
  const std::uint32_t ai = a.id;
  return push(std::move(y), [ai](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    const Vec& y = g.value(self);
    double total = 0.0;
    for (double x : gy) total += x;
    Vec& ga = g.grad(ai);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += gy[i] - std::exp(y[i]) * total;
  });
}

Var Graph::sum(Var a) {
  double s = 0.0;
  for (double x : value(a)) s += x;
  const std::uint32_t ai = a.id;
  return push(Vec{s}, [ai](Graph& g, std::uint32_t self) {
    const double gy = g.grad(self)[0];
    for (double& x : g.grad(ai)) x += gy;
  });
}

Var Graph::element(Var a, std::size_t i) {
  const Vec& av = value(a);
  if (i >= av.size()) throw std::out_of_range("element: index out of range");
  const std::uint32_t ai = a.id;
  return push(Vec{av[i]}, [ai, i](Graph& g, std::uint32_t self) { g.grad(ai)[i] += g.grad(self)[0]; });
}

Var Graph::concat(std::span<const Var> parts) {
  Vec y;
  std::vector<std::uint32_t> ids;
  for (Var p : parts) {
    const Vec& v = value(p);
    y.insert(y.end(), v.begin(), v.end());
    ids.push_back(p.id);
  }
  return push(std::move(y), [ids](Graph& g, std::uint32_t self) {
    const Vec& gy = g.grad(self);
    std::size_t off = 0;
    for (std::uint32_t id : ids) {
      Vec& ga = g.grad(id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[off + i];
      off += ga.size();
    }
  });
}

Var Graph::entropy(Var p) {
  const double h = nn::entropy(value(p));
  const std::uint32_t pi = p.id;
  return push(Vec{h}, [pi](Graph& g, std::uint32_t self) {
    const double gy = g.grad(self)[0];
    const Vec& pv = g.value(pi);
    Vec& gp = g.grad(pi);
    for (std::size_t i = 0; i < pv.size(); ++i)
      if (pv[i] > 0.0) gp[i] -= gy * (std::log(pv[i]) + 1.0);
  });
}

Var Graph::kl_to(const Vec& target, Var log_q) {
  const Vec& lq = value(log_q);
  check_same(target, lq, "kl_to");
  double kl = 0.0;
  for (std::size_t i = 0; i < lq.size(); ++i)
    if (target[i] > 0.0) kl += target[i] * (std::log(target[i]) - lq[i]);
  const std::uint32_t qi = log_q.id;
  return push(Vec{kl}, [qi, target](Graph& g, std::uint32_t self) {
    const double gy = g.grad(self)[0];
    Vec& gq = g.grad(qi);
    for (std::size_t i = 0; i < target.size(); ++i) gq[i] -= gy * target[i];
  });
}

Var Graph::bce_with_logit(double target, Var z) {
  const double zv = value(z).at(0);
  const double loss = softplus(zv) - target * zv;
  const std::uint32_t zi = z.id;
  return push(Vec{loss}, [zi, target](Graph& g, std::uint32_t self) {
    const double gy = g.grad(self)[0];
    g.grad(zi)[0] += gy * (nn::sigmoid(g.value(zi)[0]) - target);
  });
}

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  nodes_[loss.id].grad[0] = 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward) continue;
    bool any = false;
    for (double x : n.grad)
      if (x != 0.0) {
        any = true;
        break;
      }
    if (any) n.backward(*this, i);
  }
}

}  // namespace infobot::nn
