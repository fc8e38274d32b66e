#include "markov_qre/nash_curve.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace markov_qre {

std::string_view to_string(CurveChoice choice) {
  switch (choice) {
    case CurveChoice::Stationarity: return "stationarity";
    case CurveChoice::Quadratic: return "quadratic";
  }
  return "unknown";
}

CurveChoice parse_curve_choice(std::string_view text) {
  if (text == "stationarity") return CurveChoice::Stationarity;
  if (text == "quadratic") return CurveChoice::Quadratic;
  throw std::invalid_argument("unknown curve choice: " + std::string(text));
}

namespace {

std::optional<double> safe_stationarity_residual(double alpha, double gamma) {
  try {
    return stationarity_curve_residual(alpha, gamma);
  } catch (const DegenerateChain&) {
    return std::nullopt;
  }
}

void check_grid(std::span<const double> grid) {
  for (double g : grid)
    if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("gamma grid values must lie in [0, 1]");
}

CurvePoint make_point(double alpha, double gamma, CurveBranch branch) {
  return {alpha, gamma, quadratic_curve_residual(alpha, gamma),
          safe_stationarity_residual(alpha, gamma), branch};
}

}  // namespace

std::optional<double> nash_residual(CurveChoice choice, double alpha, double gamma) {
  if (choice == CurveChoice::Quadratic) return quadratic_curve_residual(alpha, gamma);
  return safe_stationarity_residual(alpha, gamma);
}

std::vector<CurvePoint> trace_quadratic_curve(std::span<const double> gamma_grid) {
  check_grid(gamma_grid);
  std::vector<CurvePoint> points;
  for (double gamma : gamma_grid) {
    // 5 a^2 - 14 g a + (9 g^2 - 10 g + 1) = 0
    const double b = -14.0 * gamma;
    const double c = 9.0 * gamma * gamma - 10.0 * gamma + 1.0;
    const double disc = b * b - 20.0 * c;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    // Cancellation-free pair: q = -(b + sign(b) sqrt(disc)) / 2.
    const double q = -0.5 * (b + std::copysign(root, b));
    double lo, hi;
    if (q == 0.0) {
      lo = hi = 0.0;
    } else {
      lo = c / q;
      hi = q / 5.0;
      if (lo > hi) std::swap(lo, hi);
    }
    const bool double_root = disc == 0.0;
    if (lo >= 0.0 && lo <= 1.0) points.push_back(make_point(lo, gamma, CurveBranch::Low));
    if (!double_root && hi >= 0.0 && hi <= 1.0)
      points.push_back(make_point(hi, gamma, CurveBranch::High));
  }
  return points;
}

std::vector<CurvePoint> trace_stationarity_curve(std::span<const double> gamma_grid) {
  check_grid(gamma_grid);
  std::vector<CurvePoint> points;
  for (double gamma : gamma_grid) {
    const auto roots = bracket_roots(
        [gamma](double alpha) { return safe_stationarity_residual(alpha, gamma); }, 0.0, 1.0);
    for (std::size_t i = 0; i < roots.size(); ++i)
      points.push_back(make_point(roots[i], gamma, i == 0 ? CurveBranch::Low : CurveBranch::High));
  }
  return points;
}

std::vector<double> edge_gammas(CurveChoice choice) {
  if (choice == CurveChoice::Quadratic) {
    // 9 g^2 - 10 g + 1 = (9 g - 1)(g - 1)
    return {1.0 / 9.0, 1.0};
  }
  RootSearch search;
  search.tolerance = 1e-15;
  return bracket_roots([](double gamma) { return safe_stationarity_residual(0.0, gamma); }, 0.0, 1.0, search);
}

}  // namespace markov_qre
