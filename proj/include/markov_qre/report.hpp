#pragma once

// Text formats shared by the CLI: CSV tables, JSON reports and run manifests.
// Every number goes through format_number (12 significant digits).

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "markov_qre/experiments.hpp"
#include "markov_qre/nash_curve.hpp"
#include "markov_qre/simulator.hpp"
#include "markov_qre/solver.hpp"

namespace markov_qre {

std::string format_number(double value);
/// Value rounded to 12 significant digits, as a JSON number (null if not finite).
nlohmann::json json_number(double value);
nlohmann::json json_number(const std::optional<double>& value);

/// RFC-4180 quoting: fields with a comma, quote or newline are quoted.
std::string csv_field(const std::string& text);

enum class CurveSelection { Both, Stationarity, Quadratic };

struct CurveRow {
  CurveChoice curve;
  bool edge;  ///< extra row where the curve meets alpha = 0, not a grid node
  double gamma;
  std::optional<double> alpha_low;
  std::optional<double> alpha_high;
  std::optional<double> quadratic_residual;     ///< at alpha_low
  std::optional<double> stationarity_residual;  ///< at alpha_low
};

/// One row per gamma per selected curve, including gammas with no root, plus
/// the curve's alpha = 0 edge points that fall inside the grid's range. Rows
/// of each curve are ordered by gamma.
std::vector<CurveRow> curve_rows(std::span<const double> gamma_grid, CurveSelection selection);
void write_curve_csv(std::ostream& out, std::span<const CurveRow> rows);

void write_sweep_csv(std::ostream& out, std::span<const QrePoint> points);
std::vector<QrePoint> read_sweep_csv(std::istream& in);

void write_grid_csv(std::ostream& out, std::span<const GridNode> nodes);
void write_classification_csv(std::ostream& out, const BoundaryReport& report);

nlohmann::json to_json(const QrePoint& point);
nlohmann::json to_json(const Intersection& intersection);
nlohmann::json to_json(const BranchTransition& transition);
nlohmann::json to_json(const SweepSummary& summary);
nlohmann::json to_json(const PhaseMeans& means);
nlohmann::json to_json(const BoundaryReport& report);
nlohmann::json to_json(const MarkovEstimate& estimate);

struct InputDigest {
  std::string path;
  std::string sha256;
};

/// Provenance echoed next to every output file.
struct RunManifest {
  std::string subcommand;
  nlohmann::json configuration = nlohmann::json::object();
  std::vector<InputDigest> inputs;
  std::vector<std::string> outputs;
  /// Only set when explicitly requested, so repeated runs stay byte-identical.
  std::optional<std::string> timestamp;

  nlohmann::json to_json() const;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

/// Writes `text` to `path`, throwing IoError with the path on failure.
void write_text_file(const std::string& path, const std::string& text);
/// `<output>.manifest.json`
std::string manifest_path(const std::string& output);

}  // namespace markov_qre
