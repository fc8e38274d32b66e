#pragma once

// Logit quantal response equilibrium of the symmetric Markov-strategy game.
//
// Each coordinate of the strategy (alpha, gamma) is a binary choice. Its
// logit response compares the stationary payoff of the two pure settings of
// that coordinate (0 or 1) while the other own coordinate and both opponent
// coordinates stay at (alpha, gamma). The pure value is substituted into the
// asymmetric chain first and the profile is symmetrized afterwards; doing it
// the other way round only ever produces the corner cases.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "markov_qre/game.hpp"

namespace markov_qre {

/// Stationary payoff of a player who fixes one coordinate to a pure value
/// against the symmetric profile (alpha, gamma).
template <typename Scalar>
struct ConditionalPayoffs {
  Scalar u_alpha0;  ///< own alpha = 0
  Scalar u_alpha1;  ///< own alpha = 1
  Scalar u_gamma0;  ///< own gamma = 0
  Scalar u_gamma1;  ///< own gamma = 1
};

/// Denominators of the four chains behind `conditional_payoffs`, in the order
/// alpha=0, alpha=1, gamma=0, gamma=1. They vanish only at (0,1) and (1,0).
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> conditional_denominators(Scalar alpha, Scalar gamma) {
  const Scalar drift = alpha - gamma;
  return {Scalar(1) + gamma * drift, Scalar(1) - (Scalar(1) - gamma) * drift,
          Scalar(1) - alpha * drift, Scalar(1) + (Scalar(1) - alpha) * drift};
}

template <typename Scalar>
Scalar min_conditional_denominator(Scalar alpha, Scalar gamma) {
  return conditional_denominators(alpha, gamma).cwiseAbs().minCoeff();
}

/// Closed-form conditional payoffs. Throws DegenerateChain when one of the
/// four chains has no unique stationary state.
template <typename Scalar>
ConditionalPayoffs<Scalar> conditional_payoffs(Scalar alpha, Scalar gamma,
                                               const PayoffMatrix<Scalar>& matrix) {
  const auto den = conditional_denominators(alpha, gamma);
  using std::abs;
  if (!(den.cwiseAbs().minCoeff() >= Scalar(kDegeneracyThreshold)))
    throw DegenerateChain("conditional payoff chain is degenerate at a corner of the square");

  const Scalar a = alpha, g = gamma;
  const Scalar a2 = a * a;
  // Opponent cooperation under a gamma deviation is the same for both pure values.
  const Scalar opp_gamma_dev = a - a2 + a * g;
  return {
      expected_payoff(matrix, a * g / den(0), a / den(0)),
      expected_payoff(matrix, (Scalar(1) - a + a * g) / den(1), g / den(1)),
      expected_payoff(matrix, (a - a2) / den(2), opp_gamma_dev / den(2)),
      expected_payoff(matrix, (Scalar(2) * a - a2) / den(3), opp_gamma_dev / den(3)),
  };
}

template <typename Scalar>
ConditionalPayoffs<Scalar> conditional_payoffs(Scalar alpha, Scalar gamma) {
  return conditional_payoffs(alpha, gamma, PayoffMatrix<Scalar>::standard());
}

/// Probability of choosing option 1 under logit precision `lambda`:
/// exp(l u1) / (exp(l u0) + exp(l u1)), evaluated without overflow. The
/// exact value is strictly inside (0, 1); where it rounds to an endpoint the
/// nearest interior double is returned instead.
template <typename Scalar>
Scalar logit_response(Scalar lambda, Scalar u_choice1, Scalar u_choice0) {
  using std::exp;
  const Scalar p = Scalar(1) / (Scalar(1) + exp(lambda * (u_choice0 - u_choice1)));
  constexpr Scalar lowest = std::numeric_limits<Scalar>::min();
  constexpr Scalar highest = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / Scalar(2);
  return p < lowest ? lowest : p > highest ? highest : p;
}

/// Logit responses (sigma_alpha, sigma_gamma) at the symmetric profile.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> logit_responses(Scalar lambda, Scalar alpha, Scalar gamma,
                                            const PayoffMatrix<Scalar>& matrix) {
  const auto u = conditional_payoffs(alpha, gamma, matrix);
  return {logit_response(lambda, u.u_alpha1, u.u_alpha0),
          logit_response(lambda, u.u_gamma1, u.u_gamma0)};
}

/// Fixed-point residual (sigma_alpha - alpha, sigma_gamma - gamma).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> qre_residual(Scalar lambda, Scalar alpha, Scalar gamma,
                                         const PayoffMatrix<Scalar>& matrix) {
  return logit_responses(lambda, alpha, gamma, matrix) - Eigen::Matrix<Scalar, 2, 1>(alpha, gamma);
}

/// Sum of squared fixed-point residuals; zero exactly at a QRE.
template <typename Scalar>
Scalar qre_objective(Scalar lambda, Scalar alpha, Scalar gamma,
                     const PayoffMatrix<Scalar>& matrix = PayoffMatrix<Scalar>::standard()) {
  return qre_residual(lambda, alpha, gamma, matrix).squaredNorm();
}

}  // namespace markov_qre
