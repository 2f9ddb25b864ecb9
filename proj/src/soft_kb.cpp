#include "infobot/soft_kb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "infobot/nn/math.hpp"

namespace infobot {

namespace {

void check_shapes(const BeliefState& b, const KbTable& kb) {
  if (b.slot_dists.size() != kb.n_slots() || b.know_probs.size() != kb.n_slots())
    throw std::invalid_argument("belief state does not match KB slot count");
  for (std::size_t j = 0; j < kb.n_slots(); ++j)
    if (b.slot_dists[j].size() != kb.vocab_size(j))
      throw std::invalid_argument("belief state does not match KB vocabulary of slot " + kb.slot_name(j));
}

// Pr(G_j = i | Φ_j = 1) for each value of slot j; the missing case is 1/N.
std::vector<double> known_term(const KbTable& kb, std::size_t j, std::span<const double> p) {
  const double n = static_cast<double>(kb.n_rows());
  const double observed = 1.0 - static_cast<double>(kb.missing_count(j)) / n;
  std::vector<double> a(kb.vocab_size(j), 0.0);
  for (std::size_t v = 0; v < a.size(); ++v) {
    const auto c = kb.count(j, static_cast<ValueId>(v));
    a[v] = c == 0 ? 0.0 : p[v] / static_cast<double>(c) * observed;
  }
  return a;
}

// Per-row factor table g[i*M + j] = q_j a_j(i) + (1 - q_j)/N.
std::vector<double> row_factors(const KbTable& kb, const std::vector<std::vector<double>>& p,
                                const std::vector<double>& q) {
  const std::size_t n = kb.n_rows(), m = kb.n_slots();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> g(n * m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto a = known_term(kb, j, p[j]);
    for (std::size_t i = 0; i < n; ++i) {
      const ValueId v = kb.cell(i, j);
      const double aij = v == kMissing ? inv_n : a[static_cast<std::size_t>(v)];
      g[i * m + j] = q[j] * aij + (1.0 - q[j]) * inv_n;
    }
  }
  return g;
}

// Normalizes row products of g. Uses plain products when they stay well away
// from underflow and log-space accumulation otherwise.
KbPosterior normalize_rows(const std::vector<double>& g, std::size_t n, std::size_t m) {
  KbPosterior out;
  out.probs.assign(n, 0.0);
  double max_prod = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double prod = 1.0;
    for (std::size_t j = 0; j < m; ++j) prod *= g[i * m + j];
    out.probs[i] = prod;
    max_prod = std::max(max_prod, prod);
  }
  if (max_prod >= 1e-280) {
    double z = 0.0;
    for (double x : out.probs) z += x;
    for (double& x : out.probs) x /= z;
    return out;
  }
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += std::log(g[i * m + j]);
    logs[i] = s;
  }
  const double mx = *std::max_element(logs.begin(), logs.end());
  if (mx == -std::numeric_limits<double>::infinity()) {
    out.probs.assign(n, 1.0 / static_cast<double>(n));
    out.degenerate = true;
    return out;
  }
  out.probs = nn::softmax(logs);
  return out;
}

}  // namespace

std::vector<double> SummaryState::flatten() const {
  std::vector<double> v;
  v.reserve(2 * slot_entropies.size() + 1);
  v.insert(v.end(), slot_entropies.begin(), slot_entropies.end());
  v.insert(v.end(), know_probs.begin(), know_probs.end());
  v.push_back(kb_entropy);
  return v;
}

KbPosterior posterior(const BeliefState& beliefs, const KbTable& kb) {
  check_shapes(beliefs, kb);
  const auto g = row_factors(kb, beliefs.slot_dists, beliefs.know_probs);
  return normalize_rows(g, kb.n_rows(), kb.n_slots());
}

KbPosterior posterior_oracle(const BeliefState& beliefs, const KbTable& kb) {
  check_shapes(beliefs, kb);
  const std::size_t n = kb.n_rows(), m = kb.n_slots();
  if (n > 50 || m > 6) throw std::invalid_argument("posterior_oracle: limited to N <= 50 and M <= 6");
  const double nd = static_cast<double>(n);

  // Pr(G_j = i, Φ_j = 1) and Pr(G_j = i, Φ_j = 0), straight from the definitions.
  auto joint = [&](std::size_t i, std::size_t j, bool knows) {
    const double q = beliefs.know_probs[j];
    if (!knows) return (1.0 - q) / nd;
    const ValueId v = kb.cell(i, j);
    if (v == kMissing) return q / nd;
    const double pv = beliefs.slot_dists[j][static_cast<std::size_t>(v)];
    const double nv = static_cast<double>(kb.count(j, v));
    const double missing = static_cast<double>(kb.missing_count(j));
    return q * pv / nv * (nd - missing) / nd;
  };

  KbPosterior out;
  out.probs.assign(n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t phi = 0; phi < (std::size_t{1} << m); ++phi) {
      double prod = 1.0;
      for (std::size_t j = 0; j < m; ++j) prod *= joint(i, j, (phi >> j) & 1u);
      total += prod;
    }
    out.probs[i] = total;
    z += total;
  }
  if (!(z > 0.0)) {
    out.probs.assign(n, 1.0 / nd);
    out.degenerate = true;
    return out;
  }
  for (double& x : out.probs) x /= z;
  return out;
}

std::vector<double> weighted_slot_dist(std::span<const double> post, const KbTable& kb, std::size_t j) {
  if (post.size() != kb.n_rows()) throw std::invalid_argument("weighted_slot_dist: posterior length mismatch");
  const auto prior = kb.prior(j);
  std::vector<double> w(kb.vocab_size(j), 0.0);
  double missing_mass = 0.0;
  for (std::size_t i = 0; i < kb.n_rows(); ++i) {
    const ValueId v = kb.cell(i, j);
    if (v == kMissing)
      missing_mass += post[i];
    else
      w[static_cast<std::size_t>(v)] += post[i];
  }
  double z = 0.0;
  for (std::size_t v = 0; v < w.size(); ++v) {
    w[v] += prior[v] * missing_mass;
    z += w[v];
  }
  if (z > 0.0)
    for (double& x : w) x /= z;
  return w;
}

SummaryState summarize(const BeliefState& beliefs, const KbPosterior& post, const KbTable& kb) {
  check_shapes(beliefs, kb);
  SummaryState s;
  for (std::size_t j = 0; j < kb.n_slots(); ++j)
    s.slot_entropies.push_back(nn::entropy(weighted_slot_dist(post.probs, kb, j)));
  s.know_probs = beliefs.know_probs;
  s.kb_entropy = nn::entropy(post.probs);
  return s;
}

// ---------------------------------------------------------------------------

nn::Var posterior_op(nn::Graph& g, const KbTable& kb, std::span<const nn::Var> p, std::span<const nn::Var> q) {
  const std::size_t n = kb.n_rows(), m = kb.n_slots();
  if (p.size() != m || q.size() != m) throw std::invalid_argument("posterior_op: slot count mismatch");
  std::vector<std::vector<double>> pv(m);
  std::vector<double> qv(m);
  for (std::size_t j = 0; j < m; ++j) {
    pv[j] = g.value(p[j]);
    if (pv[j].size() != kb.vocab_size(j)) throw std::invalid_argument("posterior_op: vocabulary size mismatch");
    qv[j] = g.value(q[j]).at(0);
  }
  auto factors = row_factors(kb, pv, qv);
  KbPosterior post = normalize_rows(factors, n, m);

  std::vector<std::uint32_t> p_ids(m), q_ids(m);
  for (std::size_t j = 0; j < m; ++j) {
    p_ids[j] = p[j].id;
    q_ids[j] = q[j].id;
  }
  const bool degenerate = post.degenerate;
  const KbTable* kbp = &kb;
  return g.emit(post.probs, [kbp, p_ids, q_ids, factors = std::move(factors), degenerate](nn::Graph& g,
                                                                                          std::uint32_t self) {
    if (degenerate) return;
    const KbTable& kb = *kbp;
    const std::size_t n = kb.n_rows(), m = kb.n_slots();
    const double inv_n = 1.0 / static_cast<double>(n);
    const auto& P = g.value(self);
    const auto& gP = g.grad(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += P[i] * gP[i];
    // d loss / d log score_i
    std::vector<double> gl(n);
    for (std::size_t i = 0; i < n; ++i) gl[i] = P[i] * (gP[i] - dot);

    for (std::size_t j = 0; j < m; ++j) {
      const double q = g.value(q_ids[j])[0];
      const auto& pj = g.value(p_ids[j]);
      const double observed = 1.0 - static_cast<double>(kb.missing_count(j)) * inv_n;
      auto& gp = g.grad(p_ids[j]);
      double gq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (P[i] == 0.0) continue;
        const double gij = factors[i * m + j];
        const double d = gl[i] / gij;
        const ValueId v = kb.cell(i, j);
        if (v == kMissing) continue;  // factor is 1/N whatever q is
        const auto vi = static_cast<std::size_t>(v);
        const double scale = observed / static_cast<double>(kb.count(j, v));
        gq += d * (pj[vi] * scale - inv_n);
        gp[vi] += d * q * scale;
      }
      g.grad(q_ids[j])[0] += gq;
    }
  });
}

nn::Var slot_weights_op(nn::Graph& g, const KbTable& kb, nn::Var post, std::size_t j) {
  const auto& P = g.value(post);
  if (P.size() != kb.n_rows()) throw std::invalid_argument("slot_weights_op: posterior length mismatch");
  const auto prior = kb.prior(j);
  std::vector<double> u(kb.vocab_size(j), 0.0);
  double missing_mass = 0.0;
  for (std::size_t i = 0; i < kb.n_rows(); ++i) {
    const ValueId v = kb.cell(i, j);
    if (v == kMissing)
      missing_mass += P[i];
    else
      u[static_cast<std::size_t>(v)] += P[i];
  }
  double z = 0.0;
  for (std::size_t v = 0; v < u.size(); ++v) {
    u[v] += prior[v] * missing_mass;
    z += u[v];
  }
  std::vector<double> w = u;
  for (double& x : w) x /= z;
  const KbTable* kbp = &kb;
  const std::uint32_t pi = post.id;
  return g.emit(std::move(w), [kbp, pi, j, z](nn::Graph& g, std::uint32_t self) {
    const KbTable& kb = *kbp;
    const auto& w = g.value(self);
    const auto& gw = g.grad(self);
    double dot = 0.0;
    for (std::size_t v = 0; v < w.size(); ++v) dot += w[v] * gw[v];
    std::vector<double> gu(w.size());
    for (std::size_t v = 0; v < w.size(); ++v) gu[v] = (gw[v] - dot) / z;
    double g_missing = 0.0;
    const auto prior = kb.prior(j);
    for (std::size_t v = 0; v < w.size(); ++v) g_missing += prior[v] * gu[v];
    auto& gP = g.grad(pi);
    for (std::size_t i = 0; i < kb.n_rows(); ++i) {
      const ValueId v = kb.cell(i, j);
      gP[i] += v == kMissing ? g_missing : gu[static_cast<std::size_t>(v)];
    }
  });
}

nn::Var summary_op(nn::Graph& g, const KbTable& kb, nn::Var post, std::span<const nn::Var> q) {
  std::vector<nn::Var> parts;
  for (std::size_t j = 0; j < kb.n_slots(); ++j) parts.push_back(g.entropy(slot_weights_op(g, kb, post, j)));
  for (const auto& qj : q) parts.push_back(qj);
  parts.push_back(g.entropy(post));
  return g.concat(parts);
}

nn::Var log_mu_op(nn::Graph& g, nn::Var post, const std::vector<RowIndex>& inform, std::size_t prefix) {
  const auto& P = g.value(post);
  const std::size_t k_max = std::min(prefix, inform.size());
  double lm = 0.0, used = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    lm += std::log(P.at(inform[k])) - std::log(1.0 - used);
    used += P[inform[k]];
  }
  std::vector<RowIndex> rows(inform.begin(), inform.begin() + static_cast<std::ptrdiff_t>(k_max));
  const std::uint32_t pi = post.id;
  return g.emit({lm}, [pi, rows](nn::Graph& g, std::uint32_t self) {
    const double gy = g.grad(self)[0];
    const auto& P = g.value(pi);
    auto& gP = g.grad(pi);
    double used = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      gP[rows[k]] += gy / P[rows[k]];
      const double c = gy / (1.0 - used);
      for (std::size_t l = 0; l < k; ++l) gP[rows[l]] += c;
      used += P[rows[k]];
    }
  });
}

}  // namespace infobot
