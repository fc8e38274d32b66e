#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "markov_qre/game.hpp"
#include "markov_qre/nash_curve.hpp"

namespace markov_qre {

/// Regime of a solved point along the rationality axis.
enum class Branch { Smooth, NearNash, Defect, Unclassified };

std::string_view to_string(Branch branch);
Branch parse_branch(std::string_view text);

struct SolverConfig {
  Payoffs payoffs = Payoffs::standard();

  int start_grid = 21;  ///< starts per axis, uniform over [0,1]^2 inclusive
  double accept_tol = 1e-12;
  double merge_tol = 1e-4;  ///< max-norm
  double damping = 0.5;
  int max_damped_iterations = 2000;
  int max_simplex_iterations = 2000;
  int max_newton_iterations = 40;
  double clamp_epsilon = 1e-9;

  double continuity_tol = 0.05;  ///< max-norm jump allowed within one track
  double smooth_lambda = 5.0;    ///< points below this rationality are Smooth
  double defect_tol = 0.05;      ///< Defect when max(alpha, gamma) is below this
  double near_nash_tol = 0.05;   ///< NearNash when |curve residual| is below this
  CurveChoice curve = CurveChoice::Stationarity;

  double bisection_tol = 1e-8;      ///< in lambda
  double intersection_tol = 1e-6;   ///< |curve residual| counted as touching

  unsigned threads = 0;  ///< 0: hardware concurrency
};

struct QrePoint {
  double lambda = 0;
  double alpha = 0;
  double gamma = 0;
  double objective = 0;
  Branch branch = Branch::Unclassified;
  int start_count = 0;
  bool clamped = false;  ///< an iterate had to be pulled off a degenerate corner
  int track = -1;        ///< continuation track id, assigned by sweep_lambda
  std::optional<double> nash_residual;
};

/// Local minimum of the objective that is not an equilibrium.
struct RejectedMinimum {
  double alpha = 0;
  double gamma = 0;
  double objective = 0;
  int start_count = 0;
};

struct LocalSolution {
  Eigen::Vector2d x;
  double objective = 0;
  bool clamped = false;
};

/// Damped fixed-point iteration from `start`, Nelder-Mead when that stalls,
/// and a Newton polish on the residual. Iterates are projected onto [0,1]^2.
LocalSolution local_solve(double lambda, const Eigen::Vector2d& start, const SolverConfig& config);

/// Nelder-Mead on the objective from `start`, then the Newton polish.
LocalSolution descent_solve(double lambda, const Eigen::Vector2d& start, const SolverConfig& config);

/// Newton iteration on the fixed-point residual only; used when the target
/// branch may be unstable under the damped map.
LocalSolution newton_polish(double lambda, const Eigen::Vector2d& start, const SolverConfig& config);

struct SolveResult {
  double lambda = 0;
  std::vector<QrePoint> points;  ///< accepted, merged, sorted by (alpha, gamma)
  std::vector<RejectedMinimum> rejected;
};

/// Multi-start solve at one rationality level. Never throws NoSolution; an
/// empty `points` means no start reached accept_tol.
SolveResult solve_qre_detailed(double lambda, const SolverConfig& config,
                               std::span<const Eigen::Vector2d> seeds = {});

/// All distinct equilibria at `lambda`. Throws NoSolution when none is found.
std::vector<QrePoint> solve_qre(double lambda, const SolverConfig& config = {},
                                std::span<const Eigen::Vector2d> seeds = {});

Branch classify_branch(const QrePoint& point, const SolverConfig& config);

struct BranchTransition {
  double lambda;  ///< first lambda carrying the new label
  int track;
  Branch from;
  Branch to;
};

struct SweepResult {
  std::vector<QrePoint> points;  ///< ordered by lambda, then (alpha, gamma)
  std::vector<double> unsolved_lambdas;
  std::vector<BranchTransition> transitions;

  /// Points of one continuation track, ordered by lambda.
  std::vector<QrePoint> track(int id) const;
  /// Track that starts at the lowest lambda of the sweep.
  std::vector<QrePoint> primary_track() const;
};

/// solve_qre over an ascending lambda grid, seeding each level with the
/// previous level's equilibria and linking points into continuation tracks.
SweepResult sweep_lambda(std::span<const double> lambda_grid, const SolverConfig& config = {});

/// Evenly spaced grid from `first` to `last` inclusive with spacing `step`.
std::vector<double> lambda_range(double first, double last, double step);

struct SweepSummary {
  std::optional<double> near_nash_entry_lambda;
  /// Last lambda of the first NearNash run on the primary track.
  std::optional<double> near_nash_exit_lambda;
  /// First lambda after that run, where the primary track leaves NearNash.
  std::optional<double> transition_lambda;
  /// Last lambda reached by the primary track.
  std::optional<double> primary_track_end_lambda;
  /// Smallest lambda from which every solved level has a Defect point.
  std::optional<double> defect_onset_lambda;
};

SweepSummary summarize_sweep(const SweepResult& sweep);

struct Intersection {
  double lambda = 0;
  double alpha = 0;
  double gamma = 0;
  double nash_residual = 0;
  int track = -1;
  bool first = false;
  bool refined = false;  ///< false when bisection could not follow the track
};

/// Lambda values where the selected curve residual changes sign (or touches
/// zero) along each continuation track, refined by bisection in lambda.
std::vector<Intersection> find_intersections(std::span<const QrePoint> sweep, CurveChoice curve,
                                             const SolverConfig& config = {});

struct Mesh {
  double alpha_min = 0, alpha_max = 1;
  int alpha_samples = 101;
  double gamma_min = 0, gamma_max = 1;
  int gamma_samples = 101;
};

struct GridNode {
  double alpha;
  double gamma;
  double objective;
  bool clamped;
};

/// Objective over a rectangular mesh, gamma-major. Degenerate nodes are
/// evaluated at the clamped point and flagged.
std::vector<GridNode> objective_grid(double lambda, const Mesh& mesh, const SolverConfig& config = {});

}  // namespace markov_qre
