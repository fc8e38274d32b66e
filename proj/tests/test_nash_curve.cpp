#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "markov_qre/errors.hpp"
#include "markov_qre/nash_curve.hpp"
#include "oracles.hpp"

using namespace markov_qre;

namespace {

std::vector<double> grid(double step) {
  std::vector<double> g;
  const int n = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= n; ++i) g.push_back(i == n ? 1.0 : i * step);
  return g;
}

}  // namespace

TEST_CASE("quadratic residual examples") {
  CHECK(std::abs(quadratic_curve_residual(0.0, 1.0 / 9.0)) < 1e-15);
  CHECK(quadratic_curve_residual(0.0, 1.0) == 0.0);
  CHECK(std::abs(quadratic_curve_residual(0.2, 0.5) - (-2.95)) < 1e-12);
}

TEST_CASE("quadratic curve: single gamma values") {
  const double one[] = {1.0};
  auto pts = trace_quadratic_curve(one);
  REQUIRE(pts.size() == 1);  // the other root, 2.8, is outside the square
  CHECK(pts[0].alpha == 0.0);
  CHECK(pts[0].branch == CurveBranch::Low);

  const double small[] = {0.05};
  CHECK(trace_quadratic_curve(small).empty());
  const double zero[] = {0.0};
  CHECK(trace_quadratic_curve(zero).empty());
}

TEST_CASE("quadratic curve: every returned point lies on the zero set") {
  const auto g = grid(1e-3);
  const auto pts = trace_quadratic_curve(g);
  REQUIRE(!pts.empty());
  for (const auto& p : pts) {
    CHECK(std::abs(quadratic_curve_residual(p.alpha, p.gamma)) < 1e-10);
    CHECK(p.alpha >= 0.0);
    CHECK(p.alpha <= 1.0);
  }
  // Below the first root at gamma = 1/9 the polynomial is positive on the square.
  for (const auto& p : pts) CHECK(p.gamma >= 0.099);
  // Low and high branch points appear in ascending alpha at a shared gamma.
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].gamma == pts[i - 1].gamma) CHECK(pts[i].alpha > pts[i - 1].alpha);
}

TEST_CASE("quadratic curve endpoints on the alpha = 0 edge") {
  const auto edges = edge_gammas(CurveChoice::Quadratic);
  REQUIRE(edges.size() == 2);
  CHECK(std::abs(edges[0] - 1.0 / 9.0) < 1e-15);
  CHECK(edges[1] == 1.0);
  for (double g : edges) CHECK(std::abs(quadratic_curve_residual(0.0, g)) < 1e-12);
}

TEST_CASE("grid values outside the unit interval are rejected") {
  const double bad[] = {0.5, 1.5};
  CHECK_THROWS_AS(trace_quadratic_curve(bad), std::invalid_argument);
  CHECK_THROWS_AS(trace_stationarity_curve(bad), std::invalid_argument);
}

TEST_CASE("own payoff gradient examples") {
  const Strategy half(0.5, 0.5);
  const auto g = own_payoff_gradient(half, half);
  const auto [fa, fg] = oracle::own_gradient_fd(0.5, 0.5, 0.5, 0.5);
  CHECK(std::abs(g(0) - fa) < 1e-6);
  CHECK(std::abs(g(1) - fg) < 1e-6);

  const Strategy edge(0.0, 1.0 / 9.0);
  const auto ge = own_payoff_gradient(edge, edge);
  CHECK(std::abs(ge(1)) < 1e-8);
  CHECK(std::abs(ge(0)) < 1e-8);

  for (double c : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const Strategy s(c, c);
    const auto gc = own_payoff_gradient(s, s);
    const auto [da, dg] = oracle::own_gradient_fd(c, c, c, c);
    CHECK(std::isfinite(gc(0)));
    CHECK(std::isfinite(gc(1)));
    CHECK(std::abs(gc(0) - da) < 1e-6);
    CHECK(std::abs(gc(1) - dg) < 1e-6);
  }
}

TEST_CASE("property: analytic own gradient matches central differences") {
  oracle::Sampler rng(201);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto [oa, og] = rng.interior(0.02);
    const auto [wa, wg] = rng.interior(0.02);
    const auto g = own_payoff_gradient(Strategy(oa, og), Strategy(wa, wg));
    const auto [da, dg] = oracle::own_gradient_fd(oa, og, wa, wg);
    worst = std::max({worst, std::abs(g(0) - da), std::abs(g(1) - dg)});
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("property: stationarity residual equals the factored rational form") {
  oracle::Sampler rng(202);
  for (int i = 0; i < 1000; ++i) {
    const auto [a, g] = rng.interior();
    const double lib = stationarity_curve_residual(a, g);
    const double ref = oracle::stationarity_residual(a, g);
    CHECK(std::abs(lib - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("property: gamma component is alpha / (1 - gamma) times the alpha component") {
  oracle::Sampler rng(203);
  for (int i = 0; i < 1000; ++i) {
    const auto [a, g] = rng.interior();
    const Strategy s(a, g);
    const auto grad = own_payoff_gradient(s, s);
    CHECK(std::abs(grad(1) - grad(0) * a / (1 - g)) <= 1e-10 * std::max(1.0, std::abs(grad(1))));
  }
}

TEST_CASE("stationarity residual examples") {
  CHECK(std::abs(stationarity_curve_residual(0.0, 1.0 / 9.0)) < 1e-8);
  CHECK_THROWS_AS(stationarity_curve_residual(0.0, 1.0), DegenerateChain);
  CHECK_FALSE(nash_residual(CurveChoice::Stationarity, 0.0, 1.0).has_value());
  CHECK(nash_residual(CurveChoice::Quadratic, 0.0, 1.0).value() == 0.0);

  // Zero crossing along alpha = 0.2, bracketed in [0.4, 0.6].
  const auto roots = bracket_roots([](double g) { return stationarity_curve_residual(0.2, g); }, 0.4, 0.6);
  REQUIRE(roots.size() == 1);
  const double expected = (12.8 - std::sqrt(12.8 * 12.8 - 144.0)) / 18.0;  // 9g^2 - 12.8g + 4 = 0
  CHECK(std::abs(roots[0] - expected) < 1e-9);
}

TEST_CASE("both curves vanish at gamma = 1/9 on the alpha = 0 edge") {
  const auto quad = bracket_roots([](double g) { return quadratic_curve_residual(0.0, g); }, 0.0, 0.5,
                                  RootSearch{1e-3, 1e-8, 1e-14});
  const auto stat = bracket_roots([](double g) { return stationarity_curve_residual(0.0, g); }, 0.0, 0.5,
                                  RootSearch{1e-3, 1e-8, 1e-14});
  REQUIRE(quad.size() == 1);
  REQUIRE(stat.size() == 1);
  CHECK(std::abs(quad[0] - 1.0 / 9.0) < 1e-8);
  CHECK(std::abs(stat[0] - 1.0 / 9.0) < 1e-8);
  const auto edges = edge_gammas(CurveChoice::Stationarity);
  REQUIRE(edges.size() == 1);
  CHECK(std::abs(edges[0] - 1.0 / 9.0) < 1e-14);
}

TEST_CASE("stationarity curve tracing agrees with the polynomial factor") {
  const auto g = grid(1e-2);
  const auto pts = trace_stationarity_curve(g);
  REQUIRE(!pts.empty());
  for (const auto& p : pts) {
    REQUIRE(p.stationarity_residual.has_value());
    CHECK(std::abs(*p.stationarity_residual) < 1e-8);
    CHECK(std::abs(oracle::stationarity_polynomial(p.alpha, p.gamma)) < 1e-8);
  }
  // The curve is absent below gamma = 1/9 and undefined-or-flat on gamma = 1.
  for (const auto& p : pts) {
    CHECK(p.gamma > 0.11);
    CHECK(p.gamma < 1.0);
  }
}

TEST_CASE("curves disagree away from the alpha = 0 edge") {
  // At gamma = 0.2 the printed quadratic and the stationarity polynomial
  // differ by exactly 14 alpha.
  const double g[] = {0.2};
  const auto quad = trace_quadratic_curve(g);
  const auto stat = trace_stationarity_curve(g);
  REQUIRE(!quad.empty());
  REQUIRE(!stat.empty());
  CHECK(std::abs(quad.front().alpha - stat.front().alpha) > 0.05);
  for (const auto& p : quad)
    CHECK(std::abs(oracle::stationarity_polynomial(p.alpha, p.gamma) - quadratic_curve_residual(p.alpha, p.gamma) -
                   14 * p.alpha) < 1e-12);
}

TEST_CASE("bracket_roots skips flat runs and counts isolated zero nodes") {
  auto flat = [](double x) { return x > 0.5 ? 0.0 : x - 0.25; };
  const auto roots = bracket_roots(flat, 0.0, 1.0);
  REQUIRE(roots.size() == 1);
  CHECK(std::abs(roots[0] - 0.25) < 1e-10);

  auto node = [](double x) { return (x - 0.5) * (x - 0.5); };  // touches zero at a node
  const auto touch = bracket_roots(node, 0.0, 1.0);
  REQUIRE(touch.size() == 1);
  CHECK(std::abs(touch[0] - 0.5) < 1e-12);
}

TEST_CASE("curve choice round trip") {
  CHECK(parse_curve_choice(to_string(CurveChoice::Stationarity)) == CurveChoice::Stationarity);
  CHECK(parse_curve_choice(to_string(CurveChoice::Quadratic)) == CurveChoice::Quadratic);
  CHECK_THROWS_AS(parse_curve_choice("eq4"), std::invalid_argument);
}
