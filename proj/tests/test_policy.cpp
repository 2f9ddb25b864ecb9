#include <doctest.h>

#include <cmath>
#include <functional>

#include "fixtures.hpp"
#include "infobot/nn/gradcheck.hpp"
#include "infobot/policy.hpp"

using namespace infobot;

namespace {

RulePolicyConfig loose() {
  RulePolicyConfig cfg;
  cfg.alpha_r = 0.5;
  cfg.alpha_t = 0.1;
  cfg.beta = 0.1;
  cfg.q_max = 2;
  return cfg;
}

// Calls fn on every ordered selection of r distinct indices from [0, n).
void for_each_ordered(std::size_t n, std::size_t r, const std::function<void(const std::vector<RowIndex>&)>& fn) {
  std::vector<RowIndex> cur;
  std::vector<bool> used(n, false);
  std::function<void()> rec = [&] {
    if (cur.size() == r) {
      fn(cur);
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      used[i] = true;
      cur.push_back(i);
      rec();
      cur.pop_back();
      used[i] = false;
    }
  };
  rec();
}

}  // namespace

TEST_CASE("rule informs once the posterior is resolved") {
  const std::vector<double> h{0.9, 0.9}, h0{1.0, 1.0};
  const std::vector<int> counts{0, 0};
  CHECK(rule_select(h, 0.0, counts, h0, loose()).is_inform());
}

TEST_CASE("rule requests the lowest-entropy candidate") {
  const std::vector<double> h{0.2, 0.9}, h0{1.0, 1.0};
  const std::vector<int> counts{0, 0};
  auto a = rule_select(h, 3.0, counts, h0, loose());
  REQUIRE_FALSE(a.is_inform());
  CHECK(a.slot == 0);
  auto cfg = loose();
  cfg.max_entropy_first = true;
  CHECK(rule_select(h, 3.0, counts, h0, cfg).slot == 1);
}

TEST_CASE("rule drops slots at the request cap") {
  const std::vector<double> h{0.2, 0.9}, h0{1.0, 1.0};
  auto a = rule_select(h, 3.0, std::vector<int>{2, 0}, h0, loose());
  REQUIRE_FALSE(a.is_inform());
  CHECK(a.slot == 1);
  CHECK(rule_select(h, 3.0, std::vector<int>{2, 2}, h0, loose()).is_inform());
}

TEST_CASE("rule entropy floors") {
  RulePolicyConfig cfg = loose();
  cfg.alpha_t = 0.5;
  cfg.beta = 0.5;
  const std::vector<int> counts{0, 0, 0};
  // floors: min(0.5, 0.5 * 2) = 0.5, min(0.5, 0.5 * 0.6) = 0.3, min(0.5, 0.5 * 0.1) = 0.05
  const std::vector<double> h0{2.0, 0.6, 0.1};
  auto a = rule_select(std::vector<double>{0.4, 0.35, 0.06}, 3.0, counts, h0, cfg);
  REQUIRE_FALSE(a.is_inform());
  CHECK(a.slot == 2);
  a = rule_select(std::vector<double>{0.4, 0.35, 0.04}, 3.0, counts, h0, cfg);
  CHECK(a.slot == 1);
  a = rule_select(std::vector<double>{0.4, 0.29, 0.04}, 3.0, counts, h0, cfg);
  CHECK(a.is_inform());
}

TEST_CASE("rule ties go to the lowest slot and the rule is deterministic") {
  const std::vector<double> h{0.7, 0.7, 0.7}, h0{1.0, 1.0, 1.0};
  const std::vector<int> counts{0, 0, 0};
  for (int k = 0; k < 5; ++k) CHECK(rule_select(h, 3.0, counts, h0, loose()).slot == 0);
  SummaryState s{{0.7, 0.4, 0.9}, {1, 1, 1}, 2.0};
  CHECK(rule_select(s, counts, h0, loose()).slot == 1);
  CHECK_THROWS(rule_select(h, 3.0, std::vector<int>{0}, h0, loose()));
}

TEST_CASE("rule config validation") {
  RulePolicyConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.q_max = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.alpha_r = -1.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("action indexing") {
  CHECK(Action::request(2).index(4) == 2);
  CHECK(Action::inform().index(4) == 4);
  CHECK(Action::from_index(4, 4).is_inform());
  CHECK(Action::from_index(1, 4).slot == 1);
}

TEST_CASE("policy net with zero parameters is uniform") {
  nn::ParamStore ps;
  PolicyNet::register_params(ps, 7, 4, 5);
  PolicyNet net(ps);
  nn::Graph g(ps);
  nn::Var h = net.initial_state(g);
  for (int t = 0; t < 3; ++t) {
    auto lp = g.value(net.step(g, h, g.constant(nn::Vec(7, 0.3 * t))));
    for (double x : lp) CHECK(std::exp(x) == doctest::Approx(0.25).epsilon(1e-15));
  }
  CHECK_THROWS(net.step(g, h, g.constant(nn::Vec(6, 0.0))));
  CHECK(ps.contains("policy.gru.W_r"));
  CHECK(ps.contains("policy.out.W"));
}

TEST_CASE("policy net output is a distribution") {
  nn::ParamStore ps;
  PolicyNet::register_params(ps, 3, 5, 4);
  ps.init_uniform(3.0, 6);
  PolicyNet net(ps);
  nn::Graph g(ps);
  nn::Var h = net.initial_state(g);
  auto lp = g.value(net.step(g, h, g.constant(nn::Vec{1.0, -2.0, 0.5})));
  double s = 0.0;
  for (double x : lp) s += std::exp(x);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("finite differences: policy over a three-turn unroll") {
  nn::ParamStore ps;
  PolicyNet::register_params(ps, 6, 4, 5);
  ps.init_uniform(0.7, 13);
  Rng rng(1);
  std::vector<nn::Vec> inputs;
  for (int t = 0; t < 3; ++t) {
    nn::Vec x(6);
    for (auto& v : x) v = rng.uniform() * 2.0;
    inputs.push_back(x);
  }
  const std::size_t actions[] = {1, 0, 3};
  auto res = nn::finite_diff_check(ps, [&](nn::Graph& g) {
    PolicyNet net(ps);
    nn::Var h = net.initial_state(g);
    std::vector<nn::Var> terms;
    for (int t = 0; t < 3; ++t) terms.push_back(g.element(net.step(g, h, g.constant(inputs[t])), actions[t]));
    return g.scale(g.sum(g.concat(terms)), -1.0);
  });
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("argmax and categorical sampling") {
  CHECK(argmax(std::vector<double>{0.2, 0.5, 0.5}) == 1);
  CHECK_THROWS(argmax(std::vector<double>{}));
  Rng rng(3);
  const std::vector<double> p{0.1, 0.0, 0.6, 0.3};
  std::vector<int> hits(4, 0);
  const int n = 100000;
  for (int k = 0; k < n; ++k) ++hits[sample_categorical(p, rng)];
  CHECK(hits[1] == 0);
  for (std::size_t i = 0; i < 4; ++i) {
    const double sd = std::sqrt(p[i] * (1 - p[i]) / n);
    CHECK(std::abs(hits[i] / double(n) - p[i]) <= 3 * sd + 1e-12);
  }
}

TEST_CASE("log mu worked example") {
  const std::vector<double> p{0.5, 0.3, 0.2};
  CHECK(std::exp(log_mu(p, std::vector<RowIndex>{0, 1})) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("point-mass posterior always informs that row") {
  Rng rng(2);
  const std::vector<double> p{0.0, 1.0, 0.0};
  for (int k = 0; k < 20; ++k) {
    auto s = sample_inform(p, 1, rng);
    CHECK(s.rows == std::vector<RowIndex>{1});
    CHECK(s.log_mu == 0.0);
    CHECK_FALSE(s.padded());
  }
}

TEST_CASE("mu sums to one over all ordered selections") {
  Rng rng(5);
  for (std::size_t n = 1; n <= 6; ++n)
    for (std::size_t r = 1; r <= std::min<std::size_t>(3, n); ++r) {
      std::vector<double> p(n);
      double z = 0.0;
      for (auto& x : p) z += (x = rng.uniform() + 0.01);
      for (auto& x : p) x /= z;
      double total = 0.0;
      for_each_ordered(n, r, [&](const std::vector<RowIndex>& rows) { total += std::exp(log_mu(p, rows)); });
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("sampled inform sets follow mu") {
  Rng rng(8);
  const std::vector<double> p{0.4, 0.25, 0.2, 0.15};
  std::vector<int> first(4, 0);
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    auto s = sample_inform(p, 2, rng);
    CHECK(s.rows[0] != s.rows[1]);
    ++first[s.rows[0]];
    if (k < 100) CHECK(s.log_mu == doctest::Approx(log_mu(p, s.rows)).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double sd = std::sqrt(p[i] * (1 - p[i]) / n);
    CHECK(std::abs(first[i] / double(n) - p[i]) <= 3 * sd);
  }
}

TEST_CASE("sampling pads when too few rows carry mass") {
  Rng rng(4);
  const std::vector<double> p{0.0, 0.7, 0.3, 0.0};
  auto s = sample_inform(p, 3, rng);
  CHECK(s.rows.size() == 3);
  CHECK(s.sampled == 2);
  CHECK(s.padded());
  CHECK(s.log_mu == doctest::Approx(log_mu(p, std::vector<RowIndex>(s.rows.begin(), s.rows.begin() + 2))));
  CHECK_THROWS(sample_inform(p, 5, rng));
}

TEST_CASE("greedy inform ordering") {
  CHECK(greedy_inform(std::vector<double>{0.0, 1.0, 0.0}, 1) == std::vector<RowIndex>{1});
  CHECK(greedy_inform(std::vector<double>(6, 1.0 / 6), 3) == std::vector<RowIndex>{0, 1, 2});
  CHECK(greedy_inform(std::vector<double>{0.2, 0.5, 0.3}, 2) == std::vector<RowIndex>{1, 2});
  CHECK(greedy_inform(std::vector<double>{0.3, 0.2, 0.3, 0.2}, 4) == std::vector<RowIndex>{0, 2, 1, 3});
}
