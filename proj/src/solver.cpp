#include "markov_qre/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>

#include <Eigen/LU>

#include "markov_qre/qre.hpp"

namespace markov_qre {

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::Smooth: return "smooth";
    case Branch::NearNash: return "near_nash";
    case Branch::Defect: return "defect";
    case Branch::Unclassified: return "unclassified";
  }
  return "unclassified";
}

Branch parse_branch(std::string_view text) {
  if (text == "smooth") return Branch::Smooth;
  if (text == "near_nash") return Branch::NearNash;
  if (text == "defect") return Branch::Defect;
  if (text == "unclassified") return Branch::Unclassified;
  throw std::invalid_argument("unknown branch label: " + std::string(text));
}

namespace {

constexpr double kConverged = 1e-30;

struct Evaluation {
  Eigen::Vector2d x;
  Eigen::Vector2d residual;
  double objective;
  bool clamped;
};

Eigen::Vector2d project(const Eigen::Vector2d& x) { return x.cwiseMax(0.0).cwiseMin(1.0); }

Evaluation evaluate(double lambda, const Eigen::Vector2d& point, const SolverConfig& config) {
  Evaluation e{project(point), Eigen::Vector2d::Zero(), 0.0, false};
  if (min_conditional_denominator(e.x(0), e.x(1)) < kDegeneracyThreshold) {
    e.x = e.x.cwiseMax(config.clamp_epsilon).cwiseMin(1.0 - config.clamp_epsilon);
    e.clamped = true;
  }
  e.residual = qre_residual(lambda, e.x(0), e.x(1), config.payoffs);
  e.objective = e.residual.allFinite() ? e.residual.squaredNorm()
                                       : std::numeric_limits<double>::infinity();
  return e;
}

Evaluation damped_iteration(double lambda, const Eigen::Vector2d& start, const SolverConfig& config,
                            bool& clamped) {
  Evaluation e = evaluate(lambda, start, config);
  clamped |= e.clamped;
  for (int it = 0; it < config.max_damped_iterations && e.objective > kConverged; ++it) {
    const Eigen::Vector2d next = project(e.x + config.damping * e.residual);
    if ((next - e.x).lpNorm<Eigen::Infinity>() < 1e-17) break;
    e = evaluate(lambda, next, config);
    clamped |= e.clamped;
  }
  return e;
}

Evaluation nelder_mead(double lambda, const Evaluation& from, const SolverConfig& config,
                       bool& clamped) {
  constexpr double kStep = 0.05;
  std::array<Evaluation, 3> simplex{from, from, from};
  for (int k = 0; k < 2; ++k) {
    Eigen::Vector2d vertex = from.x;
    vertex(k) += vertex(k) + kStep <= 1.0 ? kStep : -kStep;
    simplex[static_cast<std::size_t>(k) + 1] = evaluate(lambda, vertex, config);
  }
  auto eval = [&](const Eigen::Vector2d& x) {
    Evaluation e = evaluate(lambda, x, config);
    clamped |= e.clamped;
    return e;
  };
  auto by_objective = [](const Evaluation& a, const Evaluation& b) { return a.objective < b.objective; };

  for (int it = 0; it < config.max_simplex_iterations; ++it) {
    std::sort(simplex.begin(), simplex.end(), by_objective);
    const double spread = simplex[2].objective - simplex[0].objective;
    const double size = std::max((simplex[1].x - simplex[0].x).lpNorm<Eigen::Infinity>(),
                                 (simplex[2].x - simplex[0].x).lpNorm<Eigen::Infinity>());
    if (simplex[0].objective <= kConverged || (spread <= 1e-30 && size <= 1e-13)) break;

    const Eigen::Vector2d centroid = 0.5 * (simplex[0].x + simplex[1].x);
    const Evaluation reflected = eval(centroid + (centroid - simplex[2].x));
    if (reflected.objective < simplex[0].objective) {
      const Evaluation expanded = eval(centroid + 2.0 * (centroid - simplex[2].x));
      simplex[2] = expanded.objective < reflected.objective ? expanded : reflected;
    } else if (reflected.objective < simplex[1].objective) {
      simplex[2] = reflected;
    } else {
      const bool outside = reflected.objective < simplex[2].objective;
      const Eigen::Vector2d target = outside ? reflected.x : simplex[2].x;
      const Evaluation contracted = eval(centroid + 0.5 * (target - centroid));
      if (contracted.objective < std::min(reflected.objective, simplex[2].objective)) {
        simplex[2] = contracted;
      } else {
        for (std::size_t k = 1; k < 3; ++k)
          simplex[k] = eval(simplex[0].x + 0.5 * (simplex[k].x - simplex[0].x));
      }
    }
  }
  return *std::min_element(simplex.begin(), simplex.end(), by_objective);
}

// NaN where the chain is degenerate, so the caller sees a non-finite Jacobian.
Eigen::Vector2d safe_residual(double lambda, const Eigen::Vector2d& x, const SolverConfig& config) {
  if (min_conditional_denominator(x(0), x(1)) < kDegeneracyThreshold)
    return Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN());
  return qre_residual(lambda, x(0), x(1), config.payoffs);
}

Evaluation newton(double lambda, const Evaluation& from, const SolverConfig& config, bool& clamped) {
  Evaluation best = from;
  for (int it = 0; it < config.max_newton_iterations && best.objective > kConverged; ++it) {
    Eigen::Matrix2d jacobian;
    for (int k = 0; k < 2; ++k) {
      constexpr double h = 1e-7;
      Eigen::Vector2d plus = best.x, minus = best.x;
      plus(k) = std::min(1.0, plus(k) + h);
      minus(k) = std::max(0.0, minus(k) - h);
      const double width = plus(k) - minus(k);
      if (width <= 0.0) return best;
      jacobian.col(k) = (safe_residual(lambda, plus, config) - safe_residual(lambda, minus, config)) / width;
    }
    if (!jacobian.allFinite() || std::abs(jacobian.determinant()) < 1e-14) break;
    const Eigen::Vector2d step = -jacobian.partialPivLu().solve(best.residual);

    bool improved = false;
    for (double t = 1.0; t > 1e-6; t *= 0.5) {
      const Evaluation trial = evaluate(lambda, best.x + t * step, config);
      if (trial.objective < best.objective) {
        clamped |= trial.clamped;
        best = trial;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return best;
}

double max_dist(double a1, double g1, double a2, double g2) {
  return std::max(std::abs(a1 - a2), std::abs(g1 - g2));
}

unsigned worker_count(const SolverConfig& config, std::size_t jobs) {
  unsigned n = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

}  // namespace

LocalSolution local_solve(double lambda, const Eigen::Vector2d& start, const SolverConfig& config) {
  bool clamped = false;
  Evaluation e = damped_iteration(lambda, start, config, clamped);
  // A converging damped map ends far below 1e-20; anything else has cycled or
  // stalled near a fold.
  if (e.objective > 1e-20) e = nelder_mead(lambda, e, config, clamped);
  e = newton(lambda, e, config, clamped);
  return {e.x, e.objective, clamped};
}

LocalSolution descent_solve(double lambda, const Eigen::Vector2d& start, const SolverConfig& config) {
  bool clamped = false;
  Evaluation e = evaluate(lambda, start, config);
  clamped |= e.clamped;
  e = nelder_mead(lambda, e, config, clamped);
  e = newton(lambda, e, config, clamped);
  return {e.x, e.objective, clamped};
}

LocalSolution newton_polish(double lambda, const Eigen::Vector2d& start, const SolverConfig& config) {
  bool clamped = false;
  Evaluation e = evaluate(lambda, start, config);
  clamped |= e.clamped;
  e = newton(lambda, e, config, clamped);
  return {e.x, e.objective, clamped};
}

Branch classify_branch(const QrePoint& point, const SolverConfig& config) {
  if (point.lambda < config.smooth_lambda) return Branch::Smooth;
  if (std::max(point.alpha, point.gamma) < config.defect_tol) return Branch::Defect;
  if (point.nash_residual && std::abs(*point.nash_residual) < config.near_nash_tol)
    return Branch::NearNash;
  return Branch::Unclassified;
}

SolveResult solve_qre_detailed(double lambda, const SolverConfig& config,
                               std::span<const Eigen::Vector2d> seeds) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("rationality must be a finite non-negative number");
  if (config.start_grid < 2) throw std::invalid_argument("start grid needs at least 2 points per axis");

  std::vector<Eigen::Vector2d> starts;
  const int n = config.start_grid;
  starts.reserve(static_cast<std::size_t>(n * n) + seeds.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      starts.emplace_back(static_cast<double>(i) / (n - 1), static_cast<double>(j) / (n - 1));
  starts.insert(starts.end(), seeds.begin(), seeds.end());

  // Two runs per start: the damped map finds the attracting equilibria, the
  // plain descent on the objective also reaches the repelling ones.
  std::vector<LocalSolution> runs(2 * starts.size());
  auto work = [&](std::size_t i) {
    runs[2 * i] = local_solve(lambda, starts[i], config);
    runs[2 * i + 1] = descent_solve(lambda, starts[i], config);
  };
  const unsigned workers = worker_count(config, starts.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) work(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < starts.size(); i += workers) work(i);
      });
  }
  std::vector<LocalSolution> local;
  local.reserve(runs.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto& a = runs[2 * i];
    const auto& b = runs[2 * i + 1];
    local.push_back(a);
    // A start that reaches the same point both ways counts once.
    const bool same = (a.x - b.x).lpNorm<Eigen::Infinity>() < config.merge_tol &&
                      (a.objective < config.accept_tol) == (b.objective < config.accept_tol);
    if (!same) local.push_back(b);
  }

  // Merge in a fixed order so the result does not depend on scheduling.
  std::sort(local.begin(), local.end(), [](const LocalSolution& a, const LocalSolution& b) {
    if (a.x(0) != b.x(0)) return a.x(0) < b.x(0);
    if (a.x(1) != b.x(1)) return a.x(1) < b.x(1);
    return a.objective < b.objective;
  });

  SolveResult result;
  result.lambda = lambda;
  for (const auto& s : local) {
    if (!std::isfinite(s.objective)) continue;
    if (s.objective < config.accept_tol) {
      auto it = std::find_if(result.points.begin(), result.points.end(), [&](const QrePoint& p) {
        return max_dist(p.alpha, p.gamma, s.x(0), s.x(1)) < config.merge_tol;
      });
      if (it == result.points.end()) {
        QrePoint p;
        p.lambda = lambda;
        p.alpha = s.x(0);
        p.gamma = s.x(1);
        p.objective = s.objective;
        p.start_count = 1;
        p.clamped = s.clamped;
        result.points.push_back(p);
      } else {
        ++it->start_count;
        it->clamped |= s.clamped;
        if (s.objective < it->objective) {
          it->alpha = s.x(0);
          it->gamma = s.x(1);
          it->objective = s.objective;
        }
      }
    } else {
      auto it = std::find_if(result.rejected.begin(), result.rejected.end(), [&](const RejectedMinimum& r) {
        return max_dist(r.alpha, r.gamma, s.x(0), s.x(1)) < 1e-3;
      });
      if (it == result.rejected.end()) {
        result.rejected.push_back({s.x(0), s.x(1), s.objective, 1});
      } else {
        ++it->start_count;
        if (s.objective < it->objective) *it = {s.x(0), s.x(1), s.objective, it->start_count};
      }
    }
  }

  auto lexicographic = [](const auto& a, const auto& b) {
    return a.alpha != b.alpha ? a.alpha < b.alpha : a.gamma < b.gamma;
  };
  std::sort(result.points.begin(), result.points.end(), lexicographic);
  std::sort(result.rejected.begin(), result.rejected.end(),
            [](const RejectedMinimum& a, const RejectedMinimum& b) { return a.objective < b.objective; });
  for (auto& p : result.points) {
    p.nash_residual = nash_residual(config.curve, p.alpha, p.gamma);
    p.branch = classify_branch(p, config);
  }
  return result;
}

std::vector<QrePoint> solve_qre(double lambda, const SolverConfig& config,
                                std::span<const Eigen::Vector2d> seeds) {
  auto result = solve_qre_detailed(lambda, config, seeds);
  if (result.points.empty()) {
    std::string message = "no start reached the acceptance tolerance at lambda=" + std::to_string(lambda);
    if (!result.rejected.empty())
      message += "; best local minimum objective " + std::to_string(result.rejected.front().objective);
    throw NoSolution(message);
  }
  return std::move(result.points);
}

std::vector<double> lambda_range(double first, double last, double step) {
  if (!(step > 0.0) || !(last >= first) || !(first >= 0.0))
    throw std::invalid_argument("lambda range needs 0 <= first <= last and step > 0");
  const auto n = static_cast<long>(std::llround((last - first) / step));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i < n; ++i) grid.push_back(first + static_cast<double>(i) * step);
  grid.push_back(last);
  if (grid.size() >= 2 && grid[grid.size() - 2] >= last) grid.pop_back();
  return grid;
}

std::vector<QrePoint> SweepResult::track(int id) const {
  std::vector<QrePoint> out;
  for (const auto& p : points)
    if (p.track == id) out.push_back(p);
  return out;
}

std::vector<QrePoint> SweepResult::primary_track() const {
  if (points.empty()) return {};
  return track(points.front().track);
}

SweepResult sweep_lambda(std::span<const double> lambda_grid, const SolverConfig& config) {
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0)) throw std::invalid_argument("lambda grid values must be >= 0");
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))
      throw std::invalid_argument("lambda grid must be strictly ascending");
  }

  SweepResult sweep;
  std::vector<QrePoint> previous;
  int next_track = 0;
  for (double lambda : lambda_grid) {
    std::vector<Eigen::Vector2d> seeds;
    for (const auto& p : previous) seeds.emplace_back(p.alpha, p.gamma);
    auto level = solve_qre_detailed(lambda, config, seeds);
    if (level.points.empty()) {
      sweep.unsolved_lambdas.push_back(lambda);
      continue;
    }

    // Greedy nearest matching against the last solved level.
    struct Pair {
      double distance;
      std::size_t current, prior;
    };
    std::vector<Pair> pairs;
    for (std::size_t c = 0; c < level.points.size(); ++c)
      for (std::size_t q = 0; q < previous.size(); ++q) {
        const double d = max_dist(level.points[c].alpha, level.points[c].gamma, previous[q].alpha,
                                  previous[q].gamma);
        if (d < config.continuity_tol) pairs.push_back({d, c, q});
      }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      return a.distance != b.distance ? a.distance < b.distance
                                      : (a.current != b.current ? a.current < b.current : a.prior < b.prior);
    });
    std::vector<bool> prior_used(previous.size(), false);
    for (const auto& pr : pairs) {
      auto& point = level.points[pr.current];
      if (point.track >= 0 || prior_used[pr.prior]) continue;
      point.track = previous[pr.prior].track;
      prior_used[pr.prior] = true;
      if (previous[pr.prior].branch != point.branch)
        sweep.transitions.push_back({lambda, point.track, previous[pr.prior].branch, point.branch});
    }
    for (auto& point : level.points)
      if (point.track < 0) point.track = next_track++;

    sweep.points.insert(sweep.points.end(), level.points.begin(), level.points.end());
    previous = std::move(level.points);
  }
  return sweep;
}

SweepSummary summarize_sweep(const SweepResult& sweep) {
  SweepSummary summary;
  const auto primary = sweep.primary_track();
  if (!primary.empty()) summary.primary_track_end_lambda = primary.back().lambda;
  // First NearNash run on the primary track; the transition is the first
  // level after it.
  for (const auto& p : primary) {
    if (p.branch == Branch::NearNash) {
      if (summary.transition_lambda) break;
      if (!summary.near_nash_entry_lambda) summary.near_nash_entry_lambda = p.lambda;
      summary.near_nash_exit_lambda = p.lambda;
    } else if (summary.near_nash_entry_lambda && !summary.transition_lambda) {
      summary.transition_lambda = p.lambda;
      break;
    }
  }

  std::map<double, bool> has_defect;
  for (const auto& p : sweep.points) has_defect[p.lambda] |= p.branch == Branch::Defect;
  for (auto it = has_defect.rbegin(); it != has_defect.rend() && it->second; ++it)
    summary.defect_onset_lambda = it->first;
  return summary;
}

std::vector<Intersection> find_intersections(std::span<const QrePoint> sweep, CurveChoice curve,
                                             const SolverConfig& config) {
  std::map<int, std::vector<QrePoint>> tracks;
  for (const auto& p : sweep) tracks[p.track].push_back(p);

  auto residual_at = [&](double alpha, double gamma) { return nash_residual(curve, alpha, gamma); };

  std::vector<Intersection> found;
  for (auto& [id, track] : tracks) {
    std::stable_sort(track.begin(), track.end(),
                     [](const QrePoint& a, const QrePoint& b) { return a.lambda < b.lambda; });
    std::optional<double> prev_r;
    for (std::size_t i = 0; i < track.size(); ++i) {
      const auto r = residual_at(track[i].alpha, track[i].gamma);
      if (r && std::abs(*r) <= config.intersection_tol) {
        found.push_back({track[i].lambda, track[i].alpha, track[i].gamma, *r, id, false, true});
      } else if (i > 0 && r && prev_r && std::abs(*prev_r) > config.intersection_tol &&
                 std::signbit(*r) != std::signbit(*prev_r)) {
        struct End {
          double lambda;
          Eigen::Vector2d x;
          double r;
        };
        End lo{track[i - 1].lambda, {track[i - 1].alpha, track[i - 1].gamma}, *prev_r};
        End hi{track[i].lambda, {track[i].alpha, track[i].gamma}, *r};
        bool refined = true;
        while (hi.lambda - lo.lambda > config.bisection_tol) {
          const double mid = 0.5 * (lo.lambda + hi.lambda);
          const double t = (mid - lo.lambda) / (hi.lambda - lo.lambda);
          const Eigen::Vector2d guess = lo.x + t * (hi.x - lo.x);
          const auto sol = newton_polish(mid, guess, config);
          const auto rm = residual_at(sol.x(0), sol.x(1));
          if (sol.objective >= config.accept_tol || !rm ||
              (sol.x - guess).lpNorm<Eigen::Infinity>() > config.continuity_tol) {
            refined = false;
            break;
          }
          End m{mid, sol.x, *rm};
          if (*rm == 0.0) {
            lo = hi = m;
            break;
          }
          (std::signbit(*rm) == std::signbit(lo.r) ? lo : hi) = m;
        }
        const End& best = std::abs(lo.r) <= std::abs(hi.r) ? lo : hi;
        found.push_back({best.lambda, best.x(0), best.x(1), best.r, id, false, refined});
      }
      prev_r = r;
    }
  }
  std::sort(found.begin(), found.end(), [](const Intersection& a, const Intersection& b) {
    return a.lambda != b.lambda ? a.lambda < b.lambda : a.track < b.track;
  });
  if (!found.empty()) found.front().first = true;
  return found;
}

std::vector<GridNode> objective_grid(double lambda, const Mesh& mesh, const SolverConfig& config) {
  if (mesh.alpha_samples < 1 || mesh.gamma_samples < 1)
    throw std::invalid_argument("mesh needs at least one sample per axis");
  auto inside = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!inside(mesh.alpha_min) || !inside(mesh.alpha_max) || !inside(mesh.gamma_min) ||
      !inside(mesh.gamma_max) || mesh.alpha_min > mesh.alpha_max || mesh.gamma_min > mesh.gamma_max)
    throw std::invalid_argument("mesh must lie within the unit square");
  if (!(lambda >= 0.0)) throw std::invalid_argument("rationality must be >= 0");

  auto axis = [](double lo, double hi, int n, int i) {
    return n == 1 ? lo : (i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1));
  };
  std::vector<GridNode> nodes;
  nodes.reserve(static_cast<std::size_t>(mesh.alpha_samples) * mesh.gamma_samples);
  for (int j = 0; j < mesh.gamma_samples; ++j) {
    const double gamma = axis(mesh.gamma_min, mesh.gamma_max, mesh.gamma_samples, j);
    for (int i = 0; i < mesh.alpha_samples; ++i) {
      const double alpha = axis(mesh.alpha_min, mesh.alpha_max, mesh.alpha_samples, i);
      const auto e = evaluate(lambda, {alpha, gamma}, config);
      nodes.push_back({alpha, gamma, e.objective, e.clamped});
    }
  }
  return nodes;
}

}  // namespace markov_qre
