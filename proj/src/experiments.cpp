#include "markov_qre/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "markov_qre/errors.hpp"
#include "markov_qre/report.hpp"

namespace markov_qre {

namespace detail {
extern const std::string_view kBundledExperimentTable;
}

std::string_view to_string(Phase phase) { return phase == Phase::Before ? "before" : "after"; }

std::string_view to_string(Side side) {
  switch (side) {
    case Side::Above: return "above";
    case Side::Below: return "below";
    case Side::OnBoundary: return "on_boundary";
  }
  return "on_boundary";
}

std::string_view to_string(BoundaryMethod method) {
  return method == BoundaryMethod::Interpolation ? "interpolation" : "signed_distance";
}

const std::vector<std::string>& experiment_columns() {
  static const std::vector<std::string> columns{
      "Number of the experiment",
      "% of cooperation before socialization",
      "alpha before socialization",
      "gamma before socialization",
      "% of cooperation after socialization",
      "alpha after socialization",
      "gamma after socialization",
  };
  return columns;
}

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, delimiter)) fields.push_back(trim(field));
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

double parse_probability(const std::string& text, bool percent_column, std::size_t row, std::size_t column) {
  std::string body = text;
  bool percent = false;
  if (!body.empty() && body.back() == '%') {
    body.pop_back();
    percent = true;
  }
  if (percent && !percent_column) throw ParseError("unexpected percent sign", row, column);
  double value = 0;
  const auto* first = body.data();
  const auto* last = body.data() + body.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (body.empty() || ec != std::errc() || ptr != last)
    throw ParseError("not a number: '" + text + "'", row, column);
  if (percent) value /= 100.0;
  if (!(value >= 0.0 && value <= 1.0)) throw ParseError("value outside [0, 1]: '" + text + "'", row, column);
  return value;
}

}  // namespace

std::vector<ExperimentRecord> load_experiments(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  char delimiter = '\t';
  while (header.empty() && std::getline(in, line)) {
    ++row;
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
    header = split(line, delimiter);
  }
  if (header.empty()) throw ParseError("empty experiment table", row, 0);

  const auto& expected = experiment_columns();
  if (header.size() != expected.size())
    throw ParseError("expected " + std::to_string(expected.size()) + " columns, found " +
                         std::to_string(header.size()),
                     row, header.size());
  for (std::size_t c = 0; c < expected.size(); ++c)
    if (!iequals(header[c], expected[c]))
      throw ParseError("unexpected column header '" + header[c] + "'", row, c + 1);

  std::vector<ExperimentRecord> records;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line, delimiter);
    if (fields.size() != expected.size())
      throw ParseError("expected " + std::to_string(expected.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row, std::min(fields.size(), expected.size()) + 1);
    if (fields[0].empty()) throw ParseError("missing experiment id", row, 1);
    if (fields[0].rfind("Mean", 0) == 0) continue;
    for (int p = 0; p < 2; ++p) {
      const std::size_t base = 1 + 3 * static_cast<std::size_t>(p);
      records.push_back({fields[0], p == 0 ? Phase::Before : Phase::After,
                         parse_probability(fields[base], true, row, base + 1),
                         parse_probability(fields[base + 1], false, row, base + 2),
                         parse_probability(fields[base + 2], false, row, base + 3)});
    }
  }
  if (records.empty()) throw ParseError("experiment table has no data rows", row, 0);
  return records;
}

std::vector<ExperimentRecord> load_experiments_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment table: " + path);
  return load_experiments(in);
}

std::string_view bundled_experiment_table() { return detail::kBundledExperimentTable; }

std::vector<ExperimentRecord> bundled_experiments() {
  std::istringstream in{std::string(bundled_experiment_table())};
  return load_experiments(in);
}

void write_experiments(std::ostream& out, std::span<const ExperimentRecord> records) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<const ExperimentRecord*, const ExperimentRecord*>> rows;
  for (const auto& r : records) {
    auto [it, inserted] = rows.try_emplace(r.experiment_id, nullptr, nullptr);
    if (inserted) order.push_back(r.experiment_id);
    (r.phase == Phase::Before ? it->second.first : it->second.second) = &r;
  }
  const auto& columns = experiment_columns();
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "\t" : "") << columns[c];
  out << '\n';
  for (const auto& id : order) {
    const auto [before, after] = rows[id];
    if (!before || !after) throw std::invalid_argument("experiment " + id + " lacks one phase");
    out << id;
    for (const auto* r : {before, after})
      out << '\t' << format_number(r->coop_rate * 100.0) << "%\t" << format_number(r->alpha) << '\t'
          << format_number(r->gamma);
    out << '\n';
  }
}

PhaseMeans aggregate(std::span<const ExperimentRecord> records) {
  PhaseMeans means;
  for (const auto& r : records) {
    auto& slot = r.phase == Phase::Before ? means.before : means.after;
    if (!slot) slot = PhaseMean{};
    slot->coop_rate += r.coop_rate;
    slot->alpha += r.alpha;
    slot->gamma += r.gamma;
    ++slot->count;
  }
  for (auto* slot : {&means.before, &means.after}) {
    if (!*slot) continue;
    const double n = static_cast<double>((*slot)->count);
    (*slot)->coop_rate /= n;
    (*slot)->alpha /= n;
    (*slot)->gamma /= n;
  }
  return means;
}

namespace {

struct Nearest {
  double distance;
  double cross;  ///< z of (segment direction) x (point - projection)
};

Nearest nearest_on_polyline(const std::vector<QrePoint>& line, double x, double y) {
  Nearest best{std::numeric_limits<double>::infinity(), 0.0};
  if (line.size() == 1) {
    best.distance = std::hypot(x - line[0].alpha, y - line[0].gamma);
    return best;
  }
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const double ax = line[i].alpha, ay = line[i].gamma;
    const double dx = line[i + 1].alpha - ax, dy = line[i + 1].gamma - ay;
    const double len2 = dx * dx + dy * dy;
    const double t = len2 > 0 ? std::clamp(((x - ax) * dx + (y - ay) * dy) / len2, 0.0, 1.0) : 0.0;
    const double px = ax + t * dx, py = ay + t * dy;
    const double d = std::hypot(x - px, y - py);
    if (d < best.distance) best = {d, dx * (y - py) - dy * (x - px)};
  }
  return best;
}

}  // namespace

BoundaryReport classify_against_qre(std::span<const ExperimentRecord> records,
                                    std::span<const QrePoint> sweep, const ClassifyOptions& options) {
  if (sweep.empty()) throw InsufficientSweep("sweep is empty");
  const auto start = std::min_element(sweep.begin(), sweep.end(), [](const QrePoint& a, const QrePoint& b) {
    return a.lambda < b.lambda;
  });
  if (start->lambda > 1e-12) throw InsufficientSweep("sweep does not start at lambda = 0");

  std::vector<QrePoint> line;
  for (const auto& p : sweep)
    if (p.track == start->track && p.lambda <= options.lambda_max + 1e-12) line.push_back(p);
  std::stable_sort(line.begin(), line.end(),
                   [](const QrePoint& a, const QrePoint& b) { return a.lambda < b.lambda; });
  if (line.empty() || line.back().lambda < options.lambda_max - 1e-9)
    throw InsufficientSweep("primary QRE track does not reach lambda_max = " + format_number(options.lambda_max));

  BoundaryReport report;
  report.lambda_max = options.lambda_max;
  report.boundary = line;

  // Interpolate gamma(alpha) when the track is single-valued in alpha.
  std::vector<QrePoint> by_alpha = line;
  std::sort(by_alpha.begin(), by_alpha.end(),
            [](const QrePoint& a, const QrePoint& b) { return a.alpha < b.alpha; });
  bool monotone = true;
  for (std::size_t i = 1; i < line.size(); ++i)
    if (!(line[i].alpha < line[i - 1].alpha)) monotone = false;
  if (!monotone) {
    monotone = true;
    for (std::size_t i = 1; i < line.size(); ++i)
      if (!(line[i].alpha > line[i - 1].alpha)) monotone = false;
  }
  report.method = monotone ? BoundaryMethod::Interpolation : BoundaryMethod::SignedDistance;

  const double reference_cross = nearest_on_polyline(line, 1.0, 1.0).cross;
  for (const auto& r : records) {
    RecordClassification c{r, Side::OnBoundary, std::nullopt, 0.0, false, false, false};
    const Nearest near = nearest_on_polyline(line, r.alpha, r.gamma);
    c.distance = near.distance;
    if (report.method == BoundaryMethod::Interpolation) {
      double boundary;
      if (r.alpha <= by_alpha.front().alpha) {
        boundary = by_alpha.front().gamma;
        c.extrapolated = r.alpha < by_alpha.front().alpha;
      } else if (r.alpha >= by_alpha.back().alpha) {
        boundary = by_alpha.back().gamma;
        c.extrapolated = r.alpha > by_alpha.back().alpha;
      } else {
        auto hi = std::upper_bound(by_alpha.begin(), by_alpha.end(), r.alpha,
                                   [](double a, const QrePoint& p) { return a < p.alpha; });
        auto lo = hi - 1;
        const double t = (r.alpha - lo->alpha) / (hi->alpha - lo->alpha);
        boundary = lo->gamma + t * (hi->gamma - lo->gamma);
      }
      c.boundary_gamma = boundary;
      if (r.gamma > boundary + 1e-12) c.side = Side::Above;
      else if (r.gamma < boundary - 1e-12) c.side = Side::Below;
    } else {
      c.extrapolated = false;
      if (near.distance > 1e-12)
        c.side = (near.cross > 0) == (reference_cross > 0) ? Side::Above : Side::Below;
    }
    c.borderline = c.distance < options.borderline_distance;
    c.consistent = (r.phase == Phase::Before && c.side == Side::Below) ||
                   (r.phase == Phase::After && c.side == Side::Above);

    auto& counts = r.phase == Phase::Before ? report.before : report.after;
    (c.side == Side::Above ? counts.above : c.side == Side::Below ? counts.below : counts.on_boundary)++;
    report.borderline_count += c.borderline;
    report.extrapolated_count += c.extrapolated;
    report.records.push_back(std::move(c));
  }
  std::size_t consistent = 0;
  for (const auto& c : report.records) consistent += c.consistent;
  report.separation_score =
      records.empty() ? 0.0 : static_cast<double>(consistent) / static_cast<double>(records.size());
  return report;
}

}  // namespace markov_qre
