#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "markov_qre/errors.hpp"
#include "markov_qre/game.hpp"
#include "oracles.hpp"

using namespace markov_qre;

TEST_CASE("payoff matrix defaults form a prisoner's dilemma") {
  const Payoffs m = Payoffs::standard();
  CHECK(m.reward_cc() == 5);
  CHECK(m.sucker_cd() == 0);
  CHECK(m.temptation_dc() == 10);
  CHECK(m.punishment_dd() == 1);
  CHECK(m.is_prisoners_dilemma());
  CHECK_FALSE(Payoffs(5, 0, 3, 1).is_prisoners_dilemma());
}

TEST_CASE("strategy construction rejects values outside the unit interval") {
  CHECK_THROWS_AS(Strategy(-0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(Strategy(0.5, 1.0001), std::invalid_argument);
  CHECK_THROWS_AS(Strategy(std::nan(""), 0.5), std::invalid_argument);
  CHECK_NOTHROW(Strategy(0, 1));
}

TEST_CASE("dynamics step examples") {
  const auto tft = Strategy(0, 1);
  auto s = dynamics_step(tft, tft, 1.0, 1.0);
  CHECK(s.p1 == 1.0);
  CHECK(s.p2 == 1.0);

  const auto flat = Strategy(0.5, 0.5);
  s = dynamics_step(flat, flat, 0.9, 0.1);
  CHECK(s.p1 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.p2 == doctest::Approx(0.5).epsilon(1e-15));

  const auto mixed = Strategy(0.2, 0.5);
  s = dynamics_step(mixed, mixed, 0.0, 0.0);
  CHECK(s.p1 == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(s.p2 == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("stationary state examples") {
  const auto c = Strategy(0.3, 0.3);
  auto st = stationary_state(c, c);
  CHECK(std::abs(st.p1 - 0.3) < 1e-15);
  CHECK(std::abs(st.p2 - 0.3) < 1e-15);

  const auto s = Strategy(0.2, 0.5);
  st = stationary_state(s, s);
  const auto [i1, i2] = oracle::stationary_by_iteration(0.2, 0.5, 0.2, 0.5);
  CHECK(std::abs(st.p1 - i1) < 1e-12);
  CHECK(std::abs(st.p2 - i2) < 1e-12);
  CHECK(std::abs(st.p1 - 0.2 / 0.7) < 1e-12);

  const auto tft = Strategy(0, 1);
  CHECK_THROWS_AS(stationary_state(tft, tft), DegenerateChain);
  try {
    stationary_state(tft, tft);
  } catch (const Error& e) {
    CHECK(e.kind() == "DegenerateChain");
  }
}

TEST_CASE("expected payoff examples") {
  const Payoffs m = Payoffs::standard();
  CHECK(expected_payoff(m, 1.0, 1.0) == 5);
  CHECK(expected_payoff(m, 0.0, 0.0) == 1);
  CHECK(expected_payoff(m, 0.0, 1.0) == 10);
  CHECK(expected_payoff(m, 1.0, 0.0) == 0);
  CHECK(std::abs(expected_payoff(m, 0.25, 0.5) - 4.75) < 1e-15);
}

TEST_CASE("property: bilinear form equals the expanded payoff polynomial") {
  oracle::Sampler rng(101);
  const Payoffs m = Payoffs::standard();
  for (int i = 0; i < 1000; ++i) {
    const double p1 = rng.uniform(), p2 = rng.uniform();
    CHECK(std::abs(expected_payoff(m, p1, p2) - oracle::payoff(p1, p2)) < 1e-12);
  }
  // A non-default matrix against the written-out bilinear oracle.
  const Payoffs other(3, -1, 4, 0.5);
  for (int i = 0; i < 1000; ++i) {
    const double p1 = rng.uniform(), p2 = rng.uniform();
    CHECK(std::abs(expected_payoff(other, p1, p2) - oracle::bilinear(3, -1, 4, 0.5, p1, p2)) < 1e-12);
  }
}

TEST_CASE("property: payoff partials match finite differences") {
  oracle::Sampler rng(102);
  const Payoffs m = Payoffs::standard();
  for (int i = 0; i < 1000; ++i) {
    const double p1 = rng.uniform(0.01, 0.99), p2 = rng.uniform(0.01, 0.99);
    const auto g = expected_payoff_partials(m, p1, p2);
    const double h = 1e-6;
    CHECK(std::abs(g(0) - (oracle::payoff(p1 + h, p2) - oracle::payoff(p1 - h, p2)) / (2 * h)) < 1e-6);
    CHECK(std::abs(g(1) - (oracle::payoff(p1, p2 + h) - oracle::payoff(p1, p2 - h)) / (2 * h)) < 1e-6);
  }
}

TEST_CASE("property: closed-form stationary state agrees with iteration") {
  oracle::Sampler rng(103);
  int checked = 0;
  while (checked < 1000) {
    const double a1 = rng.uniform(), g1 = rng.uniform(), a2 = rng.uniform(), g2 = rng.uniform();
    // Keep the contraction factor away from 1 so 10,000 steps converge.
    if (std::abs((a1 - g1) * (a2 - g2)) > 0.99) continue;
    const auto st = stationary_state(Strategy(a1, g1), Strategy(a2, g2));
    const auto [i1, i2] = oracle::stationary_by_iteration(a1, g1, a2, g2);
    CHECK(std::abs(st.p1 - i1) < 1e-9);
    CHECK(std::abs(st.p2 - i2) < 1e-9);
    CHECK(st.p1 >= 0.0);
    CHECK(st.p1 <= 1.0);
    CHECK(st.p2 >= 0.0);
    CHECK(st.p2 <= 1.0);
    ++checked;
  }
}

TEST_CASE("property: symmetric stationary state reduces to alpha / (1 + alpha - gamma)") {
  oracle::Sampler rng(104);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(), g = rng.uniform();
    if (a - g <= -1 + 1e-6) continue;
    const auto st = stationary_state(Strategy(a, g), Strategy(a, g));
    CHECK(std::abs(st.p1 - oracle::symmetric_cooperation(a, g)) < 1e-12);
    CHECK(std::abs(st.p2 - st.p1) < 1e-15);
  }
}

TEST_CASE("property: dynamics step maps the unit square into itself") {
  oracle::Sampler rng(105);
  for (int i = 0; i < 1000; ++i) {
    const Strategy s1(rng.uniform(), rng.uniform()), s2(rng.uniform(), rng.uniform());
    const auto st = dynamics_step(s1, s2, rng.uniform(), rng.uniform());
    CHECK(st.p1 >= 0.0);
    CHECK(st.p1 <= 1.0);
    CHECK(st.p2 >= 0.0);
    CHECK(st.p2 <= 1.0);
  }
}

TEST_CASE("only the opposite corners of the square are degenerate") {
  CHECK_THROWS_AS(stationary_state(Strategy(1, 0), Strategy(1, 0)), DegenerateChain);
  CHECK_THROWS_AS(stationary_state(Strategy(0, 1), Strategy(0, 1)), DegenerateChain);
  CHECK_NOTHROW(stationary_state(Strategy(1, 0), Strategy(0, 1)));
  CHECK_NOTHROW(stationary_state(Strategy(0, 0.999), Strategy(0, 0.999)));
}

TEST_CASE("stationary payoff composes the chain and the bilinear form") {
  const Strategy own(0.3, 0.7), opp(0.6, 0.2);
  CHECK(std::abs(stationary_payoff(Payoffs::standard(), own, opp) -
                 oracle::stationary_payoff(0.3, 0.7, 0.6, 0.2)) < 1e-13);
}

TEST_CASE("types work with long double") {
  using L = long double;
  const MarkovStrategy<L> s(0.2L, 0.5L);
  const auto st = stationary_state(s, s);
  CHECK(std::abs(static_cast<double>(st.p1 - 0.2L / 0.7L)) < 1e-18);
  CHECK(expected_payoff(PayoffMatrix<L>::standard(), 1.0L, 1.0L) == 5.0L);
}
