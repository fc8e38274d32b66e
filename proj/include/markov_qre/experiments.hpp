#pragma once

// Experimental strategy table (14 sessions, before and after socialization)
// and its position relative to the smooth QRE branch.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "markov_qre/solver.hpp"

namespace markov_qre {

enum class Phase { Before, After };
std::string_view to_string(Phase phase);

struct ExperimentRecord {
  std::string experiment_id;
  Phase phase;
  double coop_rate;  ///< fraction, not percent
  double alpha;
  double gamma;

  bool operator==(const ExperimentRecord&) const = default;
};

/// Column headers of the seven-column table, in order.
const std::vector<std::string>& experiment_columns();

/// Parses a tab- or comma-separated table with the seven-column header.
/// Rows whose id starts with "Mean" are summary rows and are skipped.
/// Throws ParseError with row/column (1-based) on malformed input.
std::vector<ExperimentRecord> load_experiments(std::istream& in);
std::vector<ExperimentRecord> load_experiments_file(const std::string& path);
std::vector<ExperimentRecord> bundled_experiments();
std::string_view bundled_experiment_table();

/// Writes records back in the seven-column tab-separated layout. Each
/// experiment needs both phases.
void write_experiments(std::ostream& out, std::span<const ExperimentRecord> records);

struct PhaseMean {
  double coop_rate = 0;
  double alpha = 0;
  double gamma = 0;
  std::size_t count = 0;
};

struct PhaseMeans {
  std::optional<PhaseMean> before;
  std::optional<PhaseMean> after;
};

/// Unweighted means over experiments, per phase.
PhaseMeans aggregate(std::span<const ExperimentRecord> records);

enum class Side { Above, Below, OnBoundary };
std::string_view to_string(Side side);

enum class BoundaryMethod { Interpolation, SignedDistance };
std::string_view to_string(BoundaryMethod method);

struct RecordClassification {
  ExperimentRecord record;
  Side side;
  /// Boundary gamma at the record's alpha (interpolation method only).
  std::optional<double> boundary_gamma;
  /// Euclidean distance to the boundary polyline.
  double distance;
  bool borderline;
  bool extrapolated;  ///< alpha outside the polyline's alpha range
  bool consistent;    ///< Before below / After above
};

struct PhaseCounts {
  std::size_t above = 0;
  std::size_t below = 0;
  std::size_t on_boundary = 0;
};

struct BoundaryReport {
  std::vector<RecordClassification> records;
  PhaseCounts before;
  PhaseCounts after;
  double separation_score = 0;
  BoundaryMethod method = BoundaryMethod::Interpolation;
  double lambda_max = 0;
  std::vector<QrePoint> boundary;
  std::size_t borderline_count = 0;
  std::size_t extrapolated_count = 0;
};

struct ClassifyOptions {
  double lambda_max = 4.0;
  double borderline_distance = 0.02;
};

/// Side of each record relative to the primary QRE track restricted to
/// lambda <= lambda_max. Throws InsufficientSweep when the track does not
/// cover [0, lambda_max].
BoundaryReport classify_against_qre(std::span<const ExperimentRecord> records,
                                    std::span<const QrePoint> sweep, const ClassifyOptions& options = {});

}  // namespace markov_qre
