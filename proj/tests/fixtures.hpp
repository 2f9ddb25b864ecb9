#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "infobot/agent.hpp"
#include "infobot/belief_state.hpp"
#include "infobot/episode.hpp"
#include "infobot/kb.hpp"
#include "infobot/rng.hpp"
#include "infobot/simulator.hpp"

namespace fixtures {

using Cells = std::vector<std::vector<std::optional<std::string>>>;

inline infobot::KbTable table(std::vector<std::string> slots, const Cells& cells) {
  return infobot::KbTable(std::move(slots), cells);
}

inline infobot::KbTable from_csv(const std::string& text) {
  std::istringstream in(text);
  return infobot::load_csv(in);
}

inline std::string data_path(const std::string& name) { return std::string(INFOBOT_TEST_DATA) + "/" + name; }

// Random KB with values drawn from small vocabularies and some missing cells.
inline infobot::KbTable random_kb(std::size_t n, std::size_t m, std::size_t vocab, double p_missing,
                                  infobot::Rng& rng) {
  std::vector<std::string> slots;
  for (std::size_t j = 0; j < m; ++j) slots.push_back("s" + std::to_string(j));
  Cells cells(n, std::vector<std::optional<std::string>>(m));
  for (std::size_t j = 0; j < m; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.bernoulli(p_missing)) continue;
      cells[i][j] = "v" + std::to_string(j) + "x" + std::to_string(rng.below(vocab));
      any = true;
    }
    if (!any) cells[0][j] = "v" + std::to_string(j) + "x0";
  }
  return infobot::KbTable(slots, cells);
}

// Random but valid beliefs; q in [0,1] with the occasional exact 0 or 1.
inline infobot::BeliefState random_beliefs(const infobot::KbTable& kb, infobot::Rng& rng) {
  infobot::BeliefState b;
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    std::vector<double> p(kb.vocab_size(j));
    double s = 0.0;
    for (auto& x : p) {
      x = rng.uniform() + 1e-3;
      s += x;
    }
    for (auto& x : p) x /= s;
    b.slot_dists.push_back(p);
    const double u = rng.uniform();
    b.know_probs.push_back(u < 0.1 ? 0.0 : u > 0.9 ? 1.0 : rng.uniform());
  }
  return b;
}

inline infobot::BeliefState beliefs(std::vector<std::vector<double>> p, std::vector<double> q) {
  infobot::BeliefState b;
  b.slot_dists = std::move(p);
  b.know_probs = std::move(q);
  return b;
}

inline infobot::SimSetup sim(const infobot::TemplatePack& templates, infobot::NoiseConfig noise = {}) {
  infobot::SimSetup s;
  s.templates = &templates;
  s.noise = noise;
  return s;
}

}  // namespace fixtures
