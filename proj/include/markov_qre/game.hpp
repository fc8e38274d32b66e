#pragma once

// Stage game, memory-one (Markov) strategy dynamics and the stationary
// cooperation probabilities of the two-player chain.

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "markov_qre/errors.hpp"

namespace markov_qre {

/// Chains with |1 - (alpha1 - gamma1)(alpha2 - gamma2)| below this value are
/// rejected as degenerate. Only the corners of the strategy square reach it.
inline constexpr double kDegeneracyThreshold = 1e-9;

/// 2x2 stage game seen from the row player. Row/column index 0 is
/// cooperation, index 1 is defection.
template <typename Scalar>
class PayoffMatrix {
 public:
  using Matrix = Eigen::Matrix<Scalar, 2, 2>;

  PayoffMatrix(Scalar reward_cc, Scalar sucker_cd, Scalar temptation_dc, Scalar punishment_dd) {
    values_ << reward_cc, sucker_cd, temptation_dc, punishment_dd;
    if (!values_.allFinite()) throw std::invalid_argument("payoff entries must be finite");
  }

  /// Prisoner's Dilemma used throughout: (5,5) / (0,10) / (10,0) / (1,1).
  static PayoffMatrix standard() { return PayoffMatrix(5, 0, 10, 1); }

  Scalar reward_cc() const { return values_(0, 0); }
  Scalar sucker_cd() const { return values_(0, 1); }
  Scalar temptation_dc() const { return values_(1, 0); }
  Scalar punishment_dd() const { return values_(1, 1); }

  const Matrix& matrix() const { return values_; }

  bool is_prisoners_dilemma() const {
    return temptation_dc() > reward_cc() && reward_cc() > punishment_dd() &&
           punishment_dd() > sucker_cd();
  }

 private:
  Matrix values_;
};

/// Memory-one strategy: `alpha` is the probability of cooperating after the
/// opponent defected (tolerance to defection), `gamma` after the opponent
/// cooperated (mutual cooperation).
template <typename Scalar>
struct MarkovStrategy {
  Scalar alpha;
  Scalar gamma;

  MarkovStrategy(Scalar alpha_, Scalar gamma_) : alpha(alpha_), gamma(gamma_) {
    if (!(alpha >= Scalar(0) && alpha <= Scalar(1)) || !(gamma >= Scalar(0) && gamma <= Scalar(1)))
      throw std::invalid_argument("Markov strategy parameters must lie in [0, 1]");
  }

  /// alpha - gamma, the slope of the response to the opponent's defection rate.
  Scalar drift() const { return alpha - gamma; }
};

/// Cooperation probabilities of the two players.
template <typename Scalar>
struct StationaryState {
  Scalar p1;
  Scalar p2;
};

/// One round of the coupled dynamics: each player cooperates with gamma if the
/// opponent cooperated last round and with alpha otherwise.
template <typename Scalar>
StationaryState<Scalar> dynamics_step(const MarkovStrategy<Scalar>& s1,
                                      const MarkovStrategy<Scalar>& s2, Scalar p1_prev,
                                      Scalar p2_prev) {
  return {s1.gamma * p2_prev + s1.alpha * (Scalar(1) - p2_prev),
          s2.gamma * p1_prev + s2.alpha * (Scalar(1) - p1_prev)};
}

template <typename Scalar>
Scalar chain_denominator(const MarkovStrategy<Scalar>& s1, const MarkovStrategy<Scalar>& s2) {
  return Scalar(1) - s1.drift() * s2.drift();
}

/// Fixed point of `dynamics_step`, in closed form. Throws DegenerateChain when
/// the fixed point is not unique.
template <typename Scalar>
StationaryState<Scalar> stationary_state(const MarkovStrategy<Scalar>& s1,
                                         const MarkovStrategy<Scalar>& s2) {
  using std::abs;
  const Scalar denominator = chain_denominator(s1, s2);
  if (!(abs(denominator) >= Scalar(kDegeneracyThreshold)))
    throw DegenerateChain("stationary state is not unique: (alpha1-gamma1)(alpha2-gamma2) = 1");
  return {(s1.alpha - s2.alpha * s1.drift()) / denominator,
          (s2.alpha - s1.alpha * s2.drift()) / denominator};
}

/// Row player's expected payoff when the players cooperate independently with
/// probabilities p1 (row) and p2 (column): the bilinear form x' M y.
template <typename Scalar>
Scalar expected_payoff(const PayoffMatrix<Scalar>& matrix, Scalar p1, Scalar p2) {
  const Eigen::Matrix<Scalar, 2, 1> row(p1, Scalar(1) - p1);
  const Eigen::Matrix<Scalar, 2, 1> column(p2, Scalar(1) - p2);
  return row.dot(matrix.matrix() * column);
}

/// (dU/dp1, dU/dp2) of `expected_payoff`.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> expected_payoff_partials(const PayoffMatrix<Scalar>& matrix, Scalar p1,
                                                     Scalar p2) {
  const Scalar interaction = matrix.reward_cc() - matrix.sucker_cd() - matrix.temptation_dc() +
                             matrix.punishment_dd();
  return {interaction * p2 + matrix.sucker_cd() - matrix.punishment_dd(),
          interaction * p1 + matrix.temptation_dc() - matrix.punishment_dd()};
}

/// Stationary payoff of player 1 under (own, opponent).
template <typename Scalar>
Scalar stationary_payoff(const PayoffMatrix<Scalar>& matrix, const MarkovStrategy<Scalar>& own,
                         const MarkovStrategy<Scalar>& opponent) {
  const auto state = stationary_state(own, opponent);
  return expected_payoff(matrix, state.p1, state.p2);
}

using Payoffs = PayoffMatrix<double>;
using Strategy = MarkovStrategy<double>;

}  // namespace markov_qre
