#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "infobot/belief_hand.hpp"

using namespace infobot;

TEST_CASE("match_score examples") {
  const Tokens u = tokenize("i like bill murray movies");
  CHECK(match_score(u, tokenize("bill murray")) == 1.0);
  CHECK(match_score(u, tokenize("tom cruise")) == 0.0);
  CHECK(match_score(tokenize("directed by bill"), tokenize("bill murray")) == 0.5);
  CHECK_THROWS_AS(match_score(u, Tokens{}), std::invalid_argument);
}

TEST_CASE("match_score ignores multiplicity and order") {
  const Tokens v = tokenize("bill murray");
  CHECK(match_score(tokenize("murray bill murray murray"), v) == match_score(tokenize("bill murray"), v));
  CHECK(match_score(tokenize("murray x"), v) == match_score(tokenize("x murray murray"), v));
}

TEST_CASE("reset uses count priors and q = 1") {
  auto kb = fixtures::table({"s"}, {{"a"}, {"a"}, {"a"}, {"b"}});
  auto b = reset_beliefs(kb);
  CHECK(b.slot_dists[0] == std::vector<double>{0.75, 0.25});
  CHECK(b.know_probs == std::vector<double>{1.0});
  CHECK(b.turn == 0);
  auto uniform = reset_beliefs(fixtures::table({"s"}, {{"a"}, {"b"}, {"c"}}));
  for (double p : uniform.slot_dists[0]) CHECK(p == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("update from an even prior with one matched value") {
  auto kb = fixtures::table({"genre"}, {{"a"}, {"b"}});
  HandTrackerConfig cfg;
  cfg.c = 1.0;
  auto next = hand_update(reset_beliefs(kb), tokenize("a"), {}, kb, cfg);
  CHECK(next.slot_dists[0][0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(next.slot_dists[0][1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(next.know_probs[0] == 1.0);
  CHECK(next.turn == 1);
}

TEST_CASE("requested slot with no matched value sets q to 0") {
  auto kb = fixtures::table({"genre", "actor"}, {{"a", "x"}, {"b", "y"}});
  auto next = hand_update(reset_beliefs(kb), tokenize("i do not know"), RequestFlag{0}, kb, {});
  CHECK(next.know_probs[0] == 0.0);
  CHECK(next.know_probs[1] == 1.0);
  // A later match restores it.
  auto again = hand_update(next, tokenize("it was b"), {}, kb, {});
  CHECK(again.know_probs[0] == 1.0);
}

TEST_CASE("C = 0 freezes the distributions") {
  auto kb = fixtures::table({"genre"}, {{"a"}, {"b"}, {"b"}});
  HandTrackerConfig cfg;
  cfg.c = 0.0;
  auto start = reset_beliefs(kb);
  auto next = hand_update(start, tokenize("a"), RequestFlag{0}, kb, cfg);
  CHECK(next.slot_dists == start.slot_dists);
  CHECK(next.know_probs[0] == 1.0);
  auto miss = hand_update(start, tokenize("nothing"), RequestFlag{0}, kb, cfg);
  CHECK(miss.slot_dists == start.slot_dists);
  CHECK(miss.know_probs[0] == 0.0);
}

TEST_CASE("slot-name and request terms") {
  auto kb = fixtures::table({"genre"}, {{"a b"}, {"b c"}, {"d"}});
  HandTrackerConfig cfg;
  cfg.c = 1.0;
  const auto start = reset_beliefs(kb);  // uniform thirds
  SUBCASE("gated: only matched values receive the shared terms") {
    cfg.gate_on_match = true;
    auto next = hand_update(start, tokenize("genre a"), RequestFlag{0}, kb, cfg);
    // scores (0.5, 0, 0), shared 1 + 1
    const double a = 1.0 / 3 + 2.5, b = 1.0 / 3, d = 1.0 / 3;
    CHECK(next.slot_dists[0][0] == doctest::Approx(a / (a + b + d)));
    CHECK(next.slot_dists[0][1] == doctest::Approx(b / (a + b + d)));
  }
  SUBCASE("ungated: every value receives the shared terms") {
    cfg.gate_on_match = false;
    auto next = hand_update(start, tokenize("genre a"), RequestFlag{0}, kb, cfg);
    const double a = 1.0 / 3 + 2.5, b = 1.0 / 3 + 2.0, d = 1.0 / 3 + 2.0;
    CHECK(next.slot_dists[0][0] == doctest::Approx(a / (a + b + d)));
    CHECK(next.slot_dists[0][2] == doctest::Approx(d / (a + b + d)));
  }
}

TEST_CASE("update keeps every distribution on the simplex") {
  Rng rng(11);
  const Tokens words{"v0x0", "v1x1", "s2", "v2x2", "zzz"};
  for (int trial = 0; trial < 200; ++trial) {
    auto kb = fixtures::random_kb(12, 3, 4, 0.2, rng);
    auto b = fixtures::random_beliefs(kb, rng);
    Tokens u;
    for (const auto& w : words)
      if (rng.bernoulli(0.5)) u.push_back(w);
    HandTrackerConfig cfg;
    cfg.c = rng.uniform() * 20.0;
    cfg.gate_on_match = rng.bernoulli(0.5);
    RequestFlag req;
    if (rng.bernoulli(0.5)) req.slot = rng.below(3);
    auto next = hand_update(b, u, req, kb, cfg);
    CHECK_NOTHROW(next.validate(kb));
  }
}

TEST_CASE("raising a match score never lowers that value's belief") {
  auto kb = fixtures::table({"s"}, {{"red apple"}, {"green pear"}, {"blue"}});
  const auto start = reset_beliefs(kb);
  const ValueId red = *kb.find_value(0, "red apple");
  const double none = hand_update(start, tokenize("x"), {}, kb, {}).slot_dists[0][red];
  const double half = hand_update(start, tokenize("red"), {}, kb, {}).slot_dists[0][red];
  const double full = hand_update(start, tokenize("red apple"), {}, kb, {}).slot_dists[0][red];
  CHECK(none <= half);
  CHECK(half <= full);
}

TEST_CASE("request flag one-hot and config validation") {
  CHECK(RequestFlag{}.one_hot(3) == std::vector<double>{0, 0, 0});
  CHECK(RequestFlag{1}.one_hot(3) == std::vector<double>{0, 1, 0});
  HandTrackerConfig cfg;
  cfg.c = -1.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("belief validation rejects bad shapes") {
  auto kb = fixtures::table({"s"}, {{"a"}, {"b"}});
  CHECK_THROWS(fixtures::beliefs({{0.5, 0.6}}, {1.0}).validate(kb));
  CHECK_THROWS(fixtures::beliefs({{0.5, 0.5}}, {1.5}).validate(kb));
  CHECK_THROWS(fixtures::beliefs({{1.0}}, {1.0}).validate(kb));
  CHECK_NOTHROW(fixtures::beliefs({{0.5, 0.5}}, {0.0}).validate(kb));
}
