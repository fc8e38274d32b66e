#include "markov_qre/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "markov_qre/errors.hpp"

namespace markov_qre {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.12g", value);
  std::string text(buffer);
  if (text == "-0") text = "0";
  return text;
}

nlohmann::json json_number(double value) {
  if (!std::isfinite(value)) return nullptr;
  return std::stod(format_number(value));
}

nlohmann::json json_number(const std::optional<double>& value) {
  return value ? json_number(*value) : nlohmann::json(nullptr);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

namespace {

std::string optional_cell(const std::optional<double>& value) {
  return value ? format_number(*value) : std::string();
}

}  // namespace

std::vector<CurveRow> curve_rows(std::span<const double> gamma_grid, CurveSelection selection) {
  std::vector<CurveRow> rows;
  std::vector<CurveChoice> curves;
  if (selection != CurveSelection::Quadratic) curves.push_back(CurveChoice::Stationarity);
  if (selection != CurveSelection::Stationarity) curves.push_back(CurveChoice::Quadratic);
  const auto [lo, hi] = std::minmax_element(gamma_grid.begin(), gamma_grid.end());
  for (CurveChoice curve : curves) {
    std::vector<std::pair<double, bool>> gammas;
    for (double gamma : gamma_grid) gammas.emplace_back(gamma, false);
    if (!gamma_grid.empty())
      for (double gamma : edge_gammas(curve))
        if (gamma >= *lo && gamma <= *hi) gammas.emplace_back(gamma, true);
    std::stable_sort(gammas.begin(), gammas.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [gamma, edge] : gammas) {
      const double single[] = {gamma};
      const auto points = curve == CurveChoice::Quadratic ? trace_quadratic_curve(single)
                                                          : trace_stationarity_curve(single);
      CurveRow row{curve, edge, gamma, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
      for (const auto& p : points) {
        if (p.branch == CurveBranch::Low) {
          row.alpha_low = p.alpha;
          row.quadratic_residual = p.quadratic_residual;
          row.stationarity_residual = p.stationarity_residual;
        } else {
          row.alpha_high = p.alpha;
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_curve_csv(std::ostream& out, std::span<const CurveRow> rows) {
  out << "curve,kind,gamma,alpha_branch_low,alpha_branch_high,quadratic_residual,stationarity_residual\n";
  for (const auto& r : rows)
    out << to_string(r.curve) << ',' << (r.edge ? "edge" : "grid") << ',' << format_number(r.gamma) << ',' << optional_cell(r.alpha_low) << ','
        << optional_cell(r.alpha_high) << ',' << optional_cell(r.quadratic_residual) << ','
        << optional_cell(r.stationarity_residual) << '\n';
}

void write_sweep_csv(std::ostream& out, std::span<const QrePoint> points) {
  out << "lambda,alpha,gamma,objective,branch,track,start_count,clamped,nash_residual\n";
  for (const auto& p : points)
    out << format_number(p.lambda) << ',' << format_number(p.alpha) << ',' << format_number(p.gamma) << ','
        << format_number(p.objective) << ',' << to_string(p.branch) << ',' << p.track << ','
        << p.start_count << ',' << (p.clamped ? 1 : 0) << ',' << optional_cell(p.nash_residual) << '\n';
}

std::vector<QrePoint> read_sweep_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw ParseError("empty sweep file", 1, 0);
  ++row;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("lambda,alpha,gamma,objective,branch", 0) != 0)
    throw ParseError("unexpected sweep header", row, 1);

  auto number = [&](const std::string& text, std::size_t column) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
      throw ParseError("not a number: '" + text + "'", row, column);
    return value;
  };

  std::vector<QrePoint> points;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() < 5) throw ParseError("too few fields", row, fields.size() + 1);
    QrePoint p;
    p.lambda = number(fields[0], 1);
    p.alpha = number(fields[1], 2);
    p.gamma = number(fields[2], 3);
    p.objective = number(fields[3], 4);
    try {
      p.branch = parse_branch(fields[4]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), row, 5);
    }
    p.track = fields.size() > 5 ? static_cast<int>(number(fields[5], 6)) : 0;
    p.start_count = fields.size() > 6 ? static_cast<int>(number(fields[6], 7)) : 1;
    p.clamped = fields.size() > 7 && fields[7] == "1";
    if (fields.size() > 8 && !fields[8].empty()) p.nash_residual = number(fields[8], 9);
    points.push_back(p);
  }
  return points;
}

void write_grid_csv(std::ostream& out, std::span<const GridNode> nodes) {
  out << "alpha,gamma,f,clamped\n";
  for (const auto& n : nodes)
    out << format_number(n.alpha) << ',' << format_number(n.gamma) << ',' << format_number(n.objective)
        << ',' << (n.clamped ? 1 : 0) << '\n';
}

void write_classification_csv(std::ostream& out, const BoundaryReport& report) {
  out << "experiment_id,phase,coop_rate,alpha,gamma,side,boundary_gamma,distance,borderline,extrapolated,"
         "consistent\n";
  for (const auto& c : report.records)
    out << csv_field(c.record.experiment_id) << ',' << to_string(c.record.phase) << ','
        << format_number(c.record.coop_rate) << ',' << format_number(c.record.alpha) << ','
        << format_number(c.record.gamma) << ',' << to_string(c.side) << ',' << optional_cell(c.boundary_gamma)
        << ',' << format_number(c.distance) << ',' << (c.borderline ? 1 : 0) << ','
        << (c.extrapolated ? 1 : 0) << ',' << (c.consistent ? 1 : 0) << '\n';
}

nlohmann::json to_json(const QrePoint& p) {
  return {{"lambda", json_number(p.lambda)},
          {"alpha", json_number(p.alpha)},
          {"gamma", json_number(p.gamma)},
          {"objective", json_number(p.objective)},
          {"branch", to_string(p.branch)},
          {"track", p.track},
          {"start_count", p.start_count},
          {"clamped", p.clamped},
          {"nash_residual", json_number(p.nash_residual)}};
}

nlohmann::json to_json(const Intersection& i) {
  return {{"lambda", json_number(i.lambda)},       {"alpha", json_number(i.alpha)},
          {"gamma", json_number(i.gamma)},         {"nash_residual", json_number(i.nash_residual)},
          {"track", i.track},                      {"first", i.first},
          {"refined", i.refined}};
}

nlohmann::json to_json(const BranchTransition& t) {
  return {{"lambda", json_number(t.lambda)},
          {"track", t.track},
          {"from", to_string(t.from)},
          {"to", to_string(t.to)}};
}

nlohmann::json to_json(const SweepSummary& s) {
  return {{"near_nash_entry_lambda", json_number(s.near_nash_entry_lambda)},
          {"near_nash_exit_lambda", json_number(s.near_nash_exit_lambda)},
          {"transition_lambda", json_number(s.transition_lambda)},
          {"primary_track_end_lambda", json_number(s.primary_track_end_lambda)},
          {"defect_onset_lambda", json_number(s.defect_onset_lambda)}};
}

nlohmann::json to_json(const PhaseMeans& means) {
  auto phase = [](const std::optional<PhaseMean>& m) -> nlohmann::json {
    if (!m) return nullptr;
    return {{"coop_rate", json_number(m->coop_rate)},
            {"alpha", json_number(m->alpha)},
            {"gamma", json_number(m->gamma)},
            {"count", m->count}};
  };
  return {{"before", phase(means.before)}, {"after", phase(means.after)}};
}

nlohmann::json to_json(const BoundaryReport& report) {
  auto counts = [](const PhaseCounts& c) {
    return nlohmann::json{{"above", c.above}, {"below", c.below}, {"on_boundary", c.on_boundary}};
  };
  nlohmann::json records = nlohmann::json::array();
  for (const auto& c : report.records)
    records.push_back({{"experiment_id", c.record.experiment_id},
                       {"phase", to_string(c.record.phase)},
                       {"alpha", json_number(c.record.alpha)},
                       {"gamma", json_number(c.record.gamma)},
                       {"side", to_string(c.side)},
                       {"boundary_gamma", json_number(c.boundary_gamma)},
                       {"distance", json_number(c.distance)},
                       {"borderline", c.borderline},
                       {"extrapolated", c.extrapolated},
                       {"consistent", c.consistent}});
  return {{"method", to_string(report.method)},
          {"lambda_max", json_number(report.lambda_max)},
          {"boundary_points", report.boundary.size()},
          {"counts", {{"before", counts(report.before)}, {"after", counts(report.after)}}},
          {"separation_score", json_number(report.separation_score)},
          {"borderline_count", report.borderline_count},
          {"extrapolated_count", report.extrapolated_count},
          {"records", records}};
}

nlohmann::json to_json(const MarkovEstimate& e) {
  return {{"alpha", json_number(e.alpha)},
          {"gamma", json_number(e.gamma)},
          {"alpha_events", e.alpha_events},
          {"gamma_events", e.gamma_events}};
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json inputs_json = nlohmann::json::array();
  for (const auto& in : inputs) inputs_json.push_back({{"path", in.path}, {"sha256", in.sha256}});
  nlohmann::json j = {{"tool", "markov-qre"},
                      {"version", MARKOV_QRE_VERSION},
                      {"subcommand", subcommand},
                      {"configuration", configuration},
                      {"inputs", inputs_json},
                      {"outputs", outputs}};
  if (timestamp) j["timestamp"] = *timestamp;
  return j;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream content;
  content << in.rdbuf();
  return sha256_hex(content.str());
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path);
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

}  // namespace markov_qre
