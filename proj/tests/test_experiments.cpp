#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "markov_qre/errors.hpp"
#include "markov_qre/experiments.hpp"
#include "markov_qre/solver.hpp"

using namespace markov_qre;

namespace {

const ExperimentRecord& find(const std::vector<ExperimentRecord>& records, const std::string& id, Phase phase) {
  const auto it = std::find_if(records.begin(), records.end(), [&](const ExperimentRecord& r) {
    return r.experiment_id == id && r.phase == phase;
  });
  REQUIRE(it != records.end());
  return *it;
}

const std::vector<QrePoint>& boundary_sweep() {
  static const auto points = sweep_lambda(lambda_range(0.0, 4.0, 0.02)).points;
  return points;
}

std::string header_line(char delimiter) {
  std::string line;
  for (const auto& c : experiment_columns()) line += (line.empty() ? "" : std::string(1, delimiter)) + c;
  return line + "\n";
}

}  // namespace

TEST_CASE("bundled table contents") {
  const auto records = bundled_experiments();
  CHECK(records.size() == 28);
  const auto& before = find(records, "Exp_4", Phase::Before);
  CHECK(std::abs(before.coop_rate - 0.2917) < 1e-12);
  CHECK(before.alpha == 0.25);
  CHECK(before.gamma == 0.36);
  const auto& after = find(records, "Exp_4", Phase::After);
  CHECK(std::abs(after.coop_rate - 0.8833) < 1e-12);
  CHECK(after.alpha == 0.69);
  CHECK(after.gamma == 0.91);
  for (const auto& r : records) CHECK(r.experiment_id.rfind("Mean", 0) != 0);
}

TEST_CASE("aggregates reproduce the table's mean row") {
  const auto means = aggregate(bundled_experiments());
  REQUIRE(means.before);
  REQUIRE(means.after);
  CHECK(means.before->count == 14);
  CHECK(std::abs(means.before->coop_rate - 0.2225) < 0.005);
  CHECK(std::abs(means.before->alpha - 0.20) < 0.005);
  CHECK(std::abs(means.before->gamma - 0.27) < 0.005);
  CHECK(std::abs(means.after->coop_rate - 0.5800) < 0.005);
  CHECK(std::abs(means.after->alpha - 0.43) < 0.005);
  CHECK(std::abs(means.after->gamma - 0.67) < 0.005);
}

TEST_CASE("aggregate of a single record is that record") {
  const ExperimentRecord r{"X", Phase::After, 0.4, 0.3, 0.6};
  const auto means = aggregate(std::span<const ExperimentRecord>(&r, 1));
  CHECK_FALSE(means.before);
  REQUIRE(means.after);
  CHECK(means.after->coop_rate == 0.4);
  CHECK(means.after->alpha == 0.3);
  CHECK(means.after->gamma == 0.6);
}

TEST_CASE("round trip through the tab-separated layout") {
  const auto records = bundled_experiments();
  std::ostringstream out;
  write_experiments(out, records);
  std::istringstream in(out.str());
  CHECK(load_experiments(in) == records);
}

TEST_CASE("comma-separated input and plain fractions") {
  std::istringstream in(header_line(',') + "A,10%,0.1,0.2,50,0.5,0.6\n");
  // A percent column without the sign is read as a plain number and must be a fraction.
  CHECK_THROWS_AS(load_experiments(in), ParseError);
  std::istringstream ok(header_line(',') + "A,10%,0.1,0.2,0.5,0.5,0.6\n");
  const auto records = load_experiments(ok);
  REQUIRE(records.size() == 2);
  CHECK(records[0].coop_rate == 0.1);
  CHECK(records[1].coop_rate == 0.5);
}

TEST_CASE("malformed tables raise ParseError with a location") {
  std::istringstream empty("");
  CHECK_THROWS_AS(load_experiments(empty), ParseError);

  std::istringstream wrong_header("a\tb\tc\n");
  CHECK_THROWS_AS(load_experiments(wrong_header), ParseError);

  std::istringstream bad_number(header_line('\t') + "A\t10%\t0.1\t0.2\t50%\tzero\t0.6\n");
  try {
    load_experiments(bad_number);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.column() == 6);
  }

  std::istringstream out_of_range(header_line('\t') + "A\t10%\t0.1\t1.2\t50%\t0.5\t0.6\n");
  CHECK_THROWS_AS(load_experiments(out_of_range), ParseError);

  std::istringstream short_row(header_line('\t') + "A\t10%\t0.1\n");
  CHECK_THROWS_AS(load_experiments(short_row), ParseError);

  CHECK_THROWS_AS(load_experiments_file("/nonexistent/table.tsv"), IoError);
}

TEST_CASE("classification examples against the smooth branch") {
  const auto records = bundled_experiments();
  const auto report = classify_against_qre(records, boundary_sweep());
  CHECK(report.records.size() == 28);
  const auto side = [&](const std::string& id, Phase phase) {
    for (const auto& c : report.records)
      if (c.record.experiment_id == id && c.record.phase == phase) return c.side;
    FAIL("record not found");
    return Side::OnBoundary;
  };
  CHECK(side("Exp_4", Phase::After) == Side::Above);
  CHECK(side("Exp_2", Phase::Before) == Side::Below);

  const auto& b = report.before;
  const auto& a = report.after;
  CHECK(b.above + b.below + b.on_boundary + a.above + a.below + a.on_boundary == 28);
  CHECK(report.separation_score >= 0.0);
  CHECK(report.separation_score <= 1.0);
  for (const auto& c : report.records) CHECK(c.borderline == (c.distance < 0.02));
  CHECK(report.lambda_max == 4.0);
  for (const auto& p : report.boundary) CHECK(p.lambda <= 4.0 + 1e-12);
}

TEST_CASE("property: classification does not depend on the sweep density") {
  const auto records = bundled_experiments();
  const auto fine = classify_against_qre(records, boundary_sweep());
  const auto coarse = classify_against_qre(records, sweep_lambda(lambda_range(0.0, 4.0, 0.04)).points);
  REQUIRE(fine.records.size() == coarse.records.size());
  for (std::size_t i = 0; i < fine.records.size(); ++i)
    if (!fine.records[i].borderline) CHECK(fine.records[i].side == coarse.records[i].side);
}

TEST_CASE("insufficient sweeps are rejected") {
  const auto records = bundled_experiments();
  CHECK_THROWS_AS(classify_against_qre(records, std::span<const QrePoint>{}), InsufficientSweep);
  const auto late = sweep_lambda(lambda_range(1.0, 4.0, 0.05)).points;
  CHECK_THROWS_AS(classify_against_qre(records, late), InsufficientSweep);
  const auto short_sweep = sweep_lambda(lambda_range(0.0, 2.0, 0.05)).points;
  CHECK_THROWS_AS(classify_against_qre(records, short_sweep), InsufficientSweep);
}

TEST_CASE("signed distance fallback for a boundary that folds back in alpha") {
  // A hand-made boundary running right and then back left.
  std::vector<QrePoint> fold;
  const double path[][2] = {{0.5, 0.5}, {0.6, 0.5}, {0.7, 0.55}, {0.6, 0.6}, {0.4, 0.62}};
  for (int i = 0; i < 5; ++i) {
    QrePoint p;
    p.lambda = i;
    p.alpha = path[i][0];
    p.gamma = path[i][1];
    p.track = 0;
    fold.push_back(p);
  }
  const ExperimentRecord low{"L", Phase::Before, 0.1, 0.1, 0.1};
  const ExperimentRecord high{"H", Phase::After, 0.9, 0.9, 0.95};
  const ExperimentRecord both[] = {low, high};
  const auto report = classify_against_qre(both, fold, ClassifyOptions{4.0, 0.02});
  CHECK(report.method == BoundaryMethod::SignedDistance);
  CHECK(report.records[0].side == Side::Below);
  CHECK(report.records[1].side == Side::Above);
  CHECK(report.separation_score == 1.0);
}
