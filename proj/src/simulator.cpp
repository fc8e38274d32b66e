#include "markov_qre/simulator.hpp"

#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "markov_qre/report.hpp"

namespace markov_qre {

namespace {

// 53 random bits mapped to [0, 1); the mapping is fixed here rather than left
// to the standard library distributions so logs are bit-reproducible.
bool draw(std::mt19937_64& engine, double probability) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53 < probability;
}

std::mt19937_64 player_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Move to_move(bool cooperate) { return cooperate ? Move::Cooperate : Move::Defect; }

double respond(const Strategy& s, Move opponent_last) {
  return opponent_last == Move::Cooperate ? s.gamma : s.alpha;
}

double payoff(const Payoffs& payoffs, Move own, Move opponent) {
  const int r = own == Move::Cooperate ? 0 : 1;
  const int c = opponent == Move::Cooperate ? 0 : 1;
  return payoffs.matrix()(r, c);
}

}  // namespace

double PlayerHistory::cooperation_rate(std::size_t burn_in) const {
  if (burn_in >= own.size()) throw std::invalid_argument("burn-in covers the whole history");
  std::size_t coop = 0;
  for (std::size_t t = burn_in; t < own.size(); ++t) coop += own[t] == Move::Cooperate;
  return static_cast<double>(coop) / static_cast<double>(own.size() - burn_in);
}

double PlayerHistory::mean_payoff(const Payoffs& payoffs, std::size_t burn_in) const {
  if (burn_in >= own.size()) throw std::invalid_argument("burn-in covers the whole history");
  double total = 0.0;
  for (std::size_t t = burn_in; t < own.size(); ++t) total += payoff(payoffs, own[t], opponent[t]);
  return total / static_cast<double>(own.size() - burn_in);
}

GameLog simulate(const Strategy& s1, const Strategy& s2, const SimulationConfig& config) {
  if (config.rounds < 1) throw std::invalid_argument("simulation needs at least one round");
  for (double p : config.initial_coop_prob)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("initial cooperation must lie in [0, 1]");

  GameLog log;
  log.seed = config.seed;
  log.strategies = {s1, s2};
  log.initial_coop_prob = config.initial_coop_prob;
  std::array<std::mt19937_64, 2> engines{player_stream(config.seed, 0), player_stream(config.seed, 1)};
  auto& a = log.players[0];
  auto& b = log.players[1];
  a.own.reserve(config.rounds);
  b.own.reserve(config.rounds);

  Move m1 = to_move(draw(engines[0], config.initial_coop_prob[0]));
  Move m2 = to_move(draw(engines[1], config.initial_coop_prob[1]));
  a.own.push_back(m1);
  b.own.push_back(m2);
  for (std::uint64_t t = 1; t < config.rounds; ++t) {
    const Move next1 = to_move(draw(engines[0], respond(s1, m2)));
    const Move next2 = to_move(draw(engines[1], respond(s2, m1)));
    m1 = next1;
    m2 = next2;
    a.own.push_back(m1);
    b.own.push_back(m2);
  }
  a.opponent = b.own;
  b.opponent = a.own;
  return log;
}

MarkovEstimate estimate_markov(const PlayerHistory& history) {
  if (history.own.size() != history.opponent.size())
    throw std::invalid_argument("history sequences differ in length");
  if (history.own.size() < 2) throw std::invalid_argument("estimation needs at least two rounds");
  MarkovEstimate e;
  for (std::size_t t = 1; t < history.own.size(); ++t) {
    const bool coop = history.own[t] == Move::Cooperate;
    if (history.opponent[t - 1] == Move::Cooperate) {
      ++e.gamma_events;
      e.gamma_cooperations += coop;
    } else {
      ++e.alpha_events;
      e.alpha_cooperations += coop;
    }
  }
  if (e.alpha_events) e.alpha = static_cast<double>(e.alpha_cooperations) / e.alpha_events;
  if (e.gamma_events) e.gamma = static_cast<double>(e.gamma_cooperations) / e.gamma_events;
  return e;
}

std::array<MarkovEstimate, 2> estimate_markov(const GameLog& log) {
  return {estimate_markov(log.players[0]), estimate_markov(log.players[1])};
}

MarkovEstimate aggregate_estimates(std::span<const MarkovEstimate> estimates, Aggregation mode) {
  MarkovEstimate out;
  for (const auto& e : estimates) {
    out.alpha_events += e.alpha_events;
    out.alpha_cooperations += e.alpha_cooperations;
    out.gamma_events += e.gamma_events;
    out.gamma_cooperations += e.gamma_cooperations;
  }
  if (mode == Aggregation::Pooled) {
    if (out.alpha_events) out.alpha = static_cast<double>(out.alpha_cooperations) / out.alpha_events;
    if (out.gamma_events) out.gamma = static_cast<double>(out.gamma_cooperations) / out.gamma_events;
    return out;
  }
  double alpha_sum = 0, gamma_sum = 0;
  int alpha_n = 0, gamma_n = 0;
  for (const auto& e : estimates) {
    if (e.alpha) alpha_sum += *e.alpha, ++alpha_n;
    if (e.gamma) gamma_sum += *e.gamma, ++gamma_n;
  }
  if (alpha_n) out.alpha = alpha_sum / alpha_n;
  if (gamma_n) out.gamma = gamma_sum / gamma_n;
  return out;
}

std::vector<PlayerHistory> simulate_group(std::span<const Strategy> strategies, std::uint64_t rounds,
                                          std::uint64_t seed, double initial_coop_prob) {
  const std::size_t n = strategies.size();
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("group play needs an even number of players");
  if (rounds < 1) throw std::invalid_argument("simulation needs at least one round");

  std::vector<std::mt19937_64> engines;
  for (std::size_t i = 0; i < n; ++i) engines.push_back(player_stream(seed, i));
  std::mt19937_64 pairing = player_stream(seed, n);

  std::vector<PlayerHistory> histories(n);
  std::vector<std::size_t> order(n);
  std::vector<Move> moves(n);
  for (std::uint64_t t = 0; t < rounds; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = t == 0 ? initial_coop_prob
                              : respond(strategies[i], histories[i].opponent.back());
      moves[i] = to_move(draw(engines[i], p));
    }
    // Fisher-Yates with an explicit bounded draw, for the same reason as draw().
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::uint64_t bound = i + 1;
      const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
      std::uint64_t r;
      do r = pairing(); while (r >= limit);
      std::swap(order[i], order[r % bound]);
    }
    for (std::size_t k = 0; k < n; k += 2) {
      const std::size_t x = order[k], y = order[k + 1];
      histories[x].own.push_back(moves[x]);
      histories[x].opponent.push_back(moves[y]);
      histories[y].own.push_back(moves[y]);
      histories[y].opponent.push_back(moves[x]);
    }
  }
  return histories;
}

void write_log_csv(std::ostream& out, const GameLog& log, const Payoffs& payoffs) {
  out << "# generator: " << log.generator << '\n';
  out << "# seed: " << log.seed << '\n';
  for (int i = 0; i < 2; ++i)
    out << "# strategy" << i + 1 << ": alpha=" << format_number(log.strategies[i].alpha)
        << " gamma=" << format_number(log.strategies[i].gamma) << '\n';
  out << "# initial_coop_prob: " << format_number(log.initial_coop_prob[0]) << ' '
      << format_number(log.initial_coop_prob[1]) << '\n';
  out << "# rounds: " << log.rounds() << '\n';
  out << "round,choice1,choice2,payoff1,payoff2\n";
  const auto& a = log.players[0].own;
  const auto& b = log.players[1].own;
  for (std::size_t t = 0; t < a.size(); ++t) {
    out << t + 1 << ',' << (a[t] == Move::Cooperate ? 'C' : 'D') << ','
        << (b[t] == Move::Cooperate ? 'C' : 'D') << ',' << format_number(payoff(payoffs, a[t], b[t]))
        << ',' << format_number(payoff(payoffs, b[t], a[t])) << '\n';
  }
}

}  // namespace markov_qre
