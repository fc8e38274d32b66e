#pragma once

// Seeded Monte Carlo play of the iterated game between Markov strategies.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "markov_qre/game.hpp"

namespace markov_qre {

enum class Move : std::uint8_t { Defect = 0, Cooperate = 1 };

inline constexpr const char* kGeneratorName = "mt19937_64";

struct SimulationConfig {
  std::uint64_t rounds = 1000;
  std::uint64_t seed = 1;
  /// First-round cooperation probabilities; there is no previous round to react to.
  std::array<double, 2> initial_coop_prob{0.5, 0.5};
};

/// Moves of one player and of whoever it faced in the same round.
struct PlayerHistory {
  std::vector<Move> own;
  std::vector<Move> opponent;

  double cooperation_rate(std::size_t burn_in = 0) const;
  /// Mean per-round payoff of this player.
  double mean_payoff(const Payoffs& payoffs, std::size_t burn_in = 0) const;
};

struct GameLog {
  std::uint64_t seed = 0;
  std::string generator = kGeneratorName;
  std::array<Strategy, 2> strategies{Strategy(0, 0), Strategy(0, 0)};
  std::array<double, 2> initial_coop_prob{0.5, 0.5};
  std::array<PlayerHistory, 2> players;

  std::size_t rounds() const { return players[0].own.size(); }
  double cooperation_rate(int player, std::size_t burn_in = 0) const {
    return players[static_cast<std::size_t>(player)].cooperation_rate(burn_in);
  }
};

GameLog simulate(const Strategy& s1, const Strategy& s2, const SimulationConfig& config);

/// Conditional response frequencies. `alpha` is nullopt when the opponent
/// never defected in a conditioning round, `gamma` likewise for cooperation.
struct MarkovEstimate {
  std::optional<double> alpha;
  std::optional<double> gamma;
  std::uint64_t alpha_events = 0;        ///< rounds t >= 2 with opponent D at t-1
  std::uint64_t alpha_cooperations = 0;  ///< ... in which the player cooperated at t
  std::uint64_t gamma_events = 0;
  std::uint64_t gamma_cooperations = 0;
};

/// Round 1 is skipped: it has no previous opponent move to condition on.
MarkovEstimate estimate_markov(const PlayerHistory& history);
std::array<MarkovEstimate, 2> estimate_markov(const GameLog& log);

enum class Aggregation {
  Pooled,         ///< sum the event counts over players, then divide
  PerPlayerMean,  ///< average the per-player estimates that are available
};

MarkovEstimate aggregate_estimates(std::span<const MarkovEstimate> estimates, Aggregation mode);

/// Group variant: each round the players are split into random pairs, and a
/// player reacts to the move its previous partner made in the previous round.
/// The player count must be even.
std::vector<PlayerHistory> simulate_group(std::span<const Strategy> strategies,
                                          std::uint64_t rounds, std::uint64_t seed,
                                          double initial_coop_prob = 0.5);

/// CSV with `# key: value` metadata lines, then
/// round,choice1,choice2,payoff1,payoff2 rows.
void write_log_csv(std::ostream& out, const GameLog& log, const Payoffs& payoffs);

}  // namespace markov_qre
