#pragma once

// Symmetric totally mixed Nash locus in Markov strategies. Two descriptions
// are carried side by side: the closed-form quadratic
//   5a^2 + 9g^2 - 14ag - 10g + 1 = 0
// and the locus re-derived numerically from own-payoff stationarity. They
// agree on the alpha = 0 edge and nowhere else in the interior.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "markov_qre/game.hpp"

namespace markov_qre {

enum class CurveChoice { Stationarity, Quadratic };

std::string_view to_string(CurveChoice choice);
CurveChoice parse_curve_choice(std::string_view text);

template <typename Scalar>
Scalar quadratic_curve_residual(Scalar alpha, Scalar gamma) {
  return Scalar(5) * alpha * alpha + Scalar(9) * gamma * gamma - Scalar(14) * alpha * gamma -
         Scalar(10) * gamma + Scalar(1);
}

/// (dU/d alpha_own, dU/d gamma_own) of the stationary payoff of `own` against
/// a fixed `opponent`, by the quotient rule on the closed-form stationary
/// state. Throws DegenerateChain.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> own_payoff_gradient(const MarkovStrategy<Scalar>& opponent,
                                                const MarkovStrategy<Scalar>& own,
                                                const PayoffMatrix<Scalar>& matrix) {
  const auto state = stationary_state(own, opponent);
  const Scalar d_own = own.drift();
  const Scalar d_opp = opponent.drift();
  const Scalar denominator = Scalar(1) - d_own * d_opp;
  const Scalar n1 = own.alpha - opponent.alpha * d_own;
  const Scalar n2 = opponent.alpha - own.alpha * d_opp;

  // Rows: derivative w.r.t. alpha_own, gamma_own. Columns: N1', N2', D'.
  Eigen::Matrix<Scalar, 2, 3> parts;
  parts << Scalar(1) - opponent.alpha, -d_opp, -d_opp,  //
      opponent.alpha, Scalar(0), d_opp;

  const Scalar d2 = denominator * denominator;
  Eigen::Matrix<Scalar, 2, 2> state_jacobian;  // rows: own parameter, cols: p1, p2
  for (int k = 0; k < 2; ++k) {
    state_jacobian(k, 0) = (parts(k, 0) * denominator - n1 * parts(k, 2)) / d2;
    state_jacobian(k, 1) = (parts(k, 1) * denominator - n2 * parts(k, 2)) / d2;
  }
  return state_jacobian * expected_payoff_partials(matrix, state.p1, state.p2);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> own_payoff_gradient(const MarkovStrategy<Scalar>& opponent,
                                                const MarkovStrategy<Scalar>& own) {
  return own_payoff_gradient(opponent, own, PayoffMatrix<Scalar>::standard());
}

/// dU/d alpha_own at the symmetric profile (alpha, gamma) vs (alpha, gamma).
///
/// The gamma component equals this one times alpha / (1 - gamma), so both
/// vanish on the same interior curve; the gamma component is also identically
/// zero on the alpha = 0 edge, where it cannot bracket a root.
template <typename Scalar>
Scalar stationarity_curve_residual(Scalar alpha, Scalar gamma,
                                   const PayoffMatrix<Scalar>& matrix =
                                       PayoffMatrix<Scalar>::standard()) {
  const MarkovStrategy<Scalar> s(alpha, gamma);
  return own_payoff_gradient(s, s, matrix)(0);
}

/// Residual of the selected curve; nullopt where the stationarity residual is
/// undefined (degenerate corner).
std::optional<double> nash_residual(CurveChoice choice, double alpha, double gamma);

enum class CurveBranch { Low, High };

struct CurvePoint {
  double alpha;
  double gamma;
  double quadratic_residual;
  /// nullopt at degenerate corners.
  std::optional<double> stationarity_residual;
  CurveBranch branch;
};

/// Roots in alpha of the quadratic at each gamma that fall inside the unit
/// square, labelled by the smaller/larger root.
std::vector<CurvePoint> trace_quadratic_curve(std::span<const double> gamma_grid);

/// Zero set in alpha of `stationarity_curve_residual` at each gamma, found by
/// sign-change bracketing on a 1e-3 grid and bisection to 1e-10.
std::vector<CurvePoint> trace_stationarity_curve(std::span<const double> gamma_grid);

/// Gammas at which the curve meets the alpha = 0 edge, ascending. Points
/// where the residual is undefined are excluded.
std::vector<double> edge_gammas(CurveChoice choice);

struct RootSearch {
  double grid_step = 1e-3;
  double tolerance = 1e-10;
  /// Grid nodes with |f| below this count as roots on their own.
  double zero_tolerance = 1e-14;
};

/// All sign changes of `f` on [lo, hi], refined by bisection. Nodes where `f`
/// is undefined (nullopt) break the bracket.
template <typename F>
std::vector<double> bracket_roots(F&& f, double lo, double hi, const RootSearch& search = {});

}  // namespace markov_qre

#include "markov_qre/detail/bracket_roots.hpp"
