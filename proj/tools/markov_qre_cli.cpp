// markov-qre: command-line front end. Every subcommand writes its outputs
// plus a `<output>.manifest.json` sidecar; failures print a JSON error on
// stderr and exit nonzero.

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "markov_qre/errors.hpp"
#include "markov_qre/experiments.hpp"
#include "markov_qre/nash_curve.hpp"
#include "markov_qre/qre.hpp"
#include "markov_qre/report.hpp"
#include "markov_qre/simulator.hpp"
#include "markov_qre/solver.hpp"

using namespace markov_qre;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_manifest(RunManifest manifest, const std::string& primary_output, bool timestamp) {
  if (timestamp) manifest.timestamp = utc_now();
  write_text_file(manifest_path(primary_output), dump(manifest.to_json()));
}

std::vector<double> linspace(double first, double last, int samples) {
  if (samples <= 0) throw std::invalid_argument("grid is empty: samples must be positive");
  if (samples == 1) return {first};
  std::vector<double> grid(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i)
    grid[static_cast<std::size_t>(i)] = i + 1 == samples ? last : first + (last - first) * i / (samples - 1);
  return grid;
}

json solver_json(const SolverConfig& c) {
  return {{"start_grid", c.start_grid},
          {"accept_tol", json_number(c.accept_tol)},
          {"merge_tol", json_number(c.merge_tol)},
          {"damping", json_number(c.damping)},
          {"continuity_tol", json_number(c.continuity_tol)},
          {"smooth_lambda", json_number(c.smooth_lambda)},
          {"defect_tol", json_number(c.defect_tol)},
          {"near_nash_tol", json_number(c.near_nash_tol)},
          {"curve", to_string(c.curve)},
          {"payoffs",
           {json_number(c.payoffs.reward_cc()), json_number(c.payoffs.sucker_cd()),
            json_number(c.payoffs.temptation_dc()), json_number(c.payoffs.punishment_dd())}}};
}

void add_solver_options(CLI::App* app, SolverConfig& c, std::string& curve) {
  app->add_option("--start-grid", c.start_grid, "Multi-start grid points per axis")->capture_default_str();
  app->add_option("--accept-tol", c.accept_tol, "Objective below which a minimum is an equilibrium")
      ->capture_default_str();
  app->add_option("--merge-tol", c.merge_tol, "Max-norm distance for merging minima")->capture_default_str();
  app->add_option("--damping", c.damping, "Fixed-point damping factor")->capture_default_str();
  app->add_option("--continuity-tol", c.continuity_tol, "Max-norm jump allowed within a track")
      ->capture_default_str();
  app->add_option("--smooth-lambda", c.smooth_lambda, "Points below this lambda are labeled smooth")
      ->capture_default_str();
  app->add_option("--defect-tol", c.defect_tol, "Defect label when max(alpha, gamma) is below this")
      ->capture_default_str();
  app->add_option("--near-nash-tol", c.near_nash_tol, "NearNash label when |curve residual| is below this")
      ->capture_default_str();
  app->add_option("--curve", curve, "Nash curve used for labels: stationarity|quadratic")
      ->capture_default_str()
      ->check(CLI::IsMember({"stationarity", "quadratic"}));
  app->add_option("--threads", c.threads, "Worker threads, 0 for all cores")->capture_default_str();
}

// ---------------------------------------------------------------------------

struct CurveArgs {
  double gamma_min = 0, gamma_max = 1;
  int samples = 1001;
  std::string curve = "both";
  std::string output = "nash_curve.csv";
  bool timestamp = false;
};

void run_nash_curve(const CurveArgs& a) {
  if (!(a.gamma_min >= 0 && a.gamma_max <= 1 && a.gamma_min <= a.gamma_max))
    throw std::invalid_argument("gamma range must lie in [0, 1] with min <= max");
  const auto grid = linspace(a.gamma_min, a.gamma_max, a.samples);
  const CurveSelection selection = a.curve == "both"           ? CurveSelection::Both
                                   : a.curve == "stationarity" ? CurveSelection::Stationarity
                                                               : CurveSelection::Quadratic;
  const auto rows = curve_rows(grid, selection);
  std::ostringstream out;
  write_curve_csv(out, rows);
  write_text_file(a.output, out.str());

  RunManifest m;
  m.subcommand = "nash-curve";
  m.configuration = {{"gamma_min", json_number(a.gamma_min)},
                     {"gamma_max", json_number(a.gamma_max)},
                     {"samples", a.samples},
                     {"curve", a.curve}};
  m.outputs = {a.output};
  write_manifest(m, a.output, a.timestamp);
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  double lambda_min = 0, lambda_max = 10, lambda_step = 0.01;
  SolverConfig solver;
  std::string curve = "stationarity";
  std::string output = "qre_sweep.csv";
  std::string report = "qre_sweep.json";
  bool timestamp = false;
};

json intersections_json(const std::vector<Intersection>& list) {
  json arr = json::array();
  for (const auto& i : list) arr.push_back(to_json(i));
  return arr;
}

std::optional<Intersection> first_of(const std::vector<Intersection>& list) {
  for (const auto& i : list)
    if (i.first) return i;
  return std::nullopt;
}

void run_qre_sweep(SweepArgs a) {
  a.solver.curve = parse_curve_choice(a.curve);
  const auto grid = lambda_range(a.lambda_min, a.lambda_max, a.lambda_step);
  const SweepResult sweep = sweep_lambda(grid, a.solver);

  std::ostringstream csv;
  write_sweep_csv(csv, sweep.points);
  write_text_file(a.output, csv.str());

  const auto stationarity = find_intersections(sweep.points, CurveChoice::Stationarity, a.solver);
  const auto quadratic = find_intersections(sweep.points, CurveChoice::Quadratic, a.solver);
  const auto first_s = first_of(stationarity);
  const auto first_q = first_of(quadratic);

  json transitions = json::array();
  for (const auto& t : sweep.transitions) transitions.push_back(to_json(t));
  json unsolved = json::array();
  for (double l : sweep.unsolved_lambdas) unsolved.push_back(json_number(l));

  json disagreement = {
      {"stationarity_first", first_s ? to_json(*first_s) : json(nullptr)},
      {"quadratic_first", first_q ? to_json(*first_q) : json(nullptr)},
      {"lambda_difference", first_s && first_q ? json_number(first_q->lambda - first_s->lambda) : json(nullptr)},
      {"max_norm_difference",
       first_s && first_q
           ? json_number(std::max(std::abs(first_q->alpha - first_s->alpha), std::abs(first_q->gamma - first_s->gamma)))
           : json(nullptr)}};

  json report = {{"lambda_grid",
                  {{"min", json_number(a.lambda_min)},
                   {"max", json_number(a.lambda_max)},
                   {"step", json_number(a.lambda_step)},
                   {"levels", grid.size()}}},
                 {"points", sweep.points.size()},
                 {"summary", to_json(summarize_sweep(sweep))},
                 {"transitions", transitions},
                 {"unsolved_lambdas", unsolved},
                 {"intersections", {{"stationarity", intersections_json(stationarity)},
                                    {"quadratic", intersections_json(quadratic)}}},
                 {"curve_disagreement", disagreement}};
  write_text_file(a.report, dump(report));

  RunManifest m;
  m.subcommand = "qre-sweep";
  m.configuration = {{"lambda_min", json_number(a.lambda_min)},
                     {"lambda_max", json_number(a.lambda_max)},
                     {"lambda_step", json_number(a.lambda_step)},
                     {"solver", solver_json(a.solver)}};
  m.outputs = {a.output, a.report};
  write_manifest(m, a.output, a.timestamp);
  write_manifest(m, a.report, a.timestamp);
}

// ---------------------------------------------------------------------------

struct GridArgs {
  double lambda = 4;
  Mesh mesh;
  SolverConfig solver;
  std::string output = "objective_grid.csv";
  bool timestamp = false;
};

void run_objective_grid(const GridArgs& a) {
  if (a.mesh.alpha_samples <= 0 || a.mesh.gamma_samples <= 0)
    throw std::invalid_argument("grid is empty: samples must be positive");
  const auto nodes = objective_grid(a.lambda, a.mesh, a.solver);
  std::ostringstream out;
  write_grid_csv(out, nodes);
  write_text_file(a.output, out.str());

  RunManifest m;
  m.subcommand = "objective-grid";
  m.configuration = {{"lambda", json_number(a.lambda)},
                     {"alpha", {json_number(a.mesh.alpha_min), json_number(a.mesh.alpha_max), a.mesh.alpha_samples}},
                     {"gamma", {json_number(a.mesh.gamma_min), json_number(a.mesh.gamma_max), a.mesh.gamma_samples}}};
  m.outputs = {a.output};
  write_manifest(m, a.output, a.timestamp);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  double alpha1 = 0.2, gamma1 = 0.5, alpha2 = 0.2, gamma2 = 0.5;
  SimulationConfig config;
  std::uint64_t burn_in = 0;
  std::string output = "simulation.csv";
  bool timestamp = false;
};

void run_simulate(SimulateArgs a) {
  const Strategy s1(a.alpha1, a.gamma1), s2(a.alpha2, a.gamma2);
  if (a.burn_in >= a.config.rounds) throw std::invalid_argument("burn-in must be smaller than rounds");
  const auto log = simulate(s1, s2, a.config);
  const Payoffs payoffs = Payoffs::standard();

  std::ostringstream out;
  write_log_csv(out, log, payoffs);
  write_text_file(a.output, out.str());

  json players = json::array();
  const auto estimates = estimate_markov(log);
  for (int i = 0; i < 2; ++i) {
    const auto& h = log.players[static_cast<std::size_t>(i)];
    players.push_back({{"cooperation_rate", json_number(h.cooperation_rate(a.burn_in))},
                       {"mean_payoff", json_number(h.mean_payoff(payoffs, a.burn_in))},
                       {"estimate", to_json(estimates[static_cast<std::size_t>(i)])}});
  }
  json stationary = nullptr;
  if (std::abs(chain_denominator(s1, s2)) >= kDegeneracyThreshold) {
    const auto st = stationary_state(s1, s2);
    stationary = {json_number(st.p1), json_number(st.p2)};
  }
  const json summary = {{"rounds", a.config.rounds},
                        {"seed", a.config.seed},
                        {"generator", kGeneratorName},
                        {"burn_in", a.burn_in},
                        {"players", players},
                        {"stationary_cooperation", stationary}};
  std::cout << dump(summary);

  RunManifest m;
  m.subcommand = "simulate";
  m.configuration = {{"strategy1", {json_number(a.alpha1), json_number(a.gamma1)}},
                     {"strategy2", {json_number(a.alpha2), json_number(a.gamma2)}},
                     {"rounds", a.config.rounds},
                     {"seed", a.config.seed},
                     {"initial_coop_prob",
                      {json_number(a.config.initial_coop_prob[0]), json_number(a.config.initial_coop_prob[1])}},
                     {"burn_in", a.burn_in},
                     {"generator", kGeneratorName}};
  m.outputs = {a.output};
  write_manifest(m, a.output, a.timestamp);
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string data;
  bool bundled = false;
  std::string sweep;
  ClassifyOptions options;
  double lambda_step = 0.01;
  std::string output = "classification.json";
  std::string csv;
  bool timestamp = false;
};

void run_classify(const ClassifyArgs& a) {
  if (a.bundled == !a.data.empty()) throw std::invalid_argument("give exactly one of --bundled or --data");
  RunManifest m;
  m.subcommand = "classify";

  std::vector<ExperimentRecord> records;
  if (a.bundled) {
    records = bundled_experiments();
    m.inputs.push_back({"<bundled>", sha256_hex(bundled_experiment_table())});
  } else {
    records = load_experiments_file(a.data);
    m.inputs.push_back({a.data, sha256_file(a.data)});
  }

  std::vector<QrePoint> sweep;
  if (!a.sweep.empty()) {
    std::ifstream in(a.sweep);
    if (!in) throw InsufficientSweep("sweep file not found: " + a.sweep);
    sweep = read_sweep_csv(in);
    m.inputs.push_back({a.sweep, sha256_file(a.sweep)});
  } else {
    sweep = sweep_lambda(lambda_range(0.0, a.options.lambda_max, a.lambda_step)).points;
  }

  const auto report = classify_against_qre(records, sweep, a.options);
  json j = to_json(report);
  j["record_count"] = records.size();
  j["aggregates"] = to_json(aggregate(records));
  write_text_file(a.output, dump(j));
  m.outputs = {a.output};
  if (!a.csv.empty()) {
    std::ostringstream out;
    write_classification_csv(out, report);
    write_text_file(a.csv, out.str());
    m.outputs.push_back(a.csv);
  }

  m.configuration = {{"bundled", a.bundled},
                     {"data", a.data},
                     {"sweep", a.sweep.empty() ? json(nullptr) : json(a.sweep)},
                     {"lambda_max", json_number(a.options.lambda_max)},
                     {"lambda_step", a.sweep.empty() ? json_number(a.lambda_step) : json(nullptr)},
                     {"borderline_distance", json_number(a.options.borderline_distance)}};
  for (const auto& out : m.outputs) write_manifest(m, out, a.timestamp);
}

int fail(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantal response equilibria of the Prisoner's Dilemma in Markov strategies"};
  app.set_version_flag("--version", MARKOV_QRE_VERSION);
  app.require_subcommand(1);

  CurveArgs curve;
  auto* nash = app.add_subcommand("nash-curve", "Symmetric mixed Nash curves sampled over gamma (CSV)");
  nash->add_option("--gamma-min", curve.gamma_min, "First gamma")->capture_default_str();
  nash->add_option("--gamma-max", curve.gamma_max, "Last gamma")->capture_default_str();
  nash->add_option("--samples", curve.samples, "Evenly spaced gamma values")->capture_default_str();
  nash->add_option("--curve", curve.curve, "both|stationarity|quadratic")
      ->capture_default_str()
      ->check(CLI::IsMember({"both", "stationarity", "quadratic"}));
  nash->add_option("-o,--output", curve.output, "CSV output path")->capture_default_str();
  nash->add_flag("--timestamp", curve.timestamp, "Record the wall-clock time in the manifest");

  SweepArgs sweep;
  auto* qre = app.add_subcommand("qre-sweep", "Logit QRE over a lambda grid (CSV + JSON report)");
  qre->add_option("--lambda-min", sweep.lambda_min, "First lambda")->capture_default_str();
  qre->add_option("--lambda-max", sweep.lambda_max, "Last lambda")->capture_default_str();
  qre->add_option("--lambda-step", sweep.lambda_step, "Lambda spacing")->capture_default_str();
  add_solver_options(qre, sweep.solver, sweep.curve);
  qre->add_option("-o,--output", sweep.output, "CSV output path")->capture_default_str();
  qre->add_option("--report", sweep.report, "JSON report path")->capture_default_str();
  qre->add_flag("--timestamp", sweep.timestamp, "Record the wall-clock time in the manifest");

  GridArgs grid;
  auto* obj = app.add_subcommand("objective-grid", "QRE objective over a mesh of the unit square (CSV)");
  obj->add_option("--lambda", grid.lambda, "Rationality")->capture_default_str();
  obj->add_option("--alpha-min", grid.mesh.alpha_min, "First alpha")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  obj->add_option("--alpha-max", grid.mesh.alpha_max, "Last alpha")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  obj->add_option("--alpha-samples", grid.mesh.alpha_samples, "Alpha nodes")->capture_default_str();
  obj->add_option("--gamma-min", grid.mesh.gamma_min, "First gamma")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  obj->add_option("--gamma-max", grid.mesh.gamma_max, "Last gamma")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  obj->add_option("--gamma-samples", grid.mesh.gamma_samples, "Gamma nodes")->capture_default_str();
  obj->add_option("-o,--output", grid.output, "CSV output path")->capture_default_str();
  obj->add_flag("--timestamp", grid.timestamp, "Record the wall-clock time in the manifest");

  SimulateArgs sim;
  auto* simc = app.add_subcommand("simulate", "Seeded play between two Markov strategies (log CSV, JSON summary)");
  simc->add_option("--alpha1", sim.alpha1, "Player 1 tolerance to defection")->capture_default_str();
  simc->add_option("--gamma1", sim.gamma1, "Player 1 mutual cooperation")->capture_default_str();
  simc->add_option("--alpha2", sim.alpha2, "Player 2 tolerance to defection")->capture_default_str();
  simc->add_option("--gamma2", sim.gamma2, "Player 2 mutual cooperation")->capture_default_str();
  simc->add_option("--rounds", sim.config.rounds, "Rounds to play")->capture_default_str();
  simc->add_option("--seed", sim.config.seed, "Generator seed")->capture_default_str();
  simc->add_option("--initial-coop1", sim.config.initial_coop_prob[0], "Round-1 cooperation, player 1")
      ->capture_default_str();
  simc->add_option("--initial-coop2", sim.config.initial_coop_prob[1], "Round-1 cooperation, player 2")
      ->capture_default_str();
  simc->add_option("--burn-in", sim.burn_in, "Rounds excluded from the summary rates")->capture_default_str();
  simc->add_option("-o,--output", sim.output, "Log CSV path")->capture_default_str();
  simc->add_flag("--timestamp", sim.timestamp, "Record the wall-clock time in the manifest");

  ClassifyArgs cls;
  auto* clsc = app.add_subcommand("classify", "Experiment strategies against the smooth QRE branch (JSON)");
  clsc->add_option("--data", cls.data, "Experiment table (tab or comma separated)");
  clsc->add_flag("--bundled", cls.bundled, "Use the bundled experiment table");
  clsc->add_option("--sweep", cls.sweep, "Sweep CSV from qre-sweep; computed when omitted");
  clsc->add_option("--lambda-max", cls.options.lambda_max, "Upper lambda of the boundary branch")
      ->capture_default_str();
  clsc->add_option("--lambda-step", cls.lambda_step, "Spacing of the computed sweep")->capture_default_str();
  clsc->add_option("--borderline", cls.options.borderline_distance, "Distance flagged as borderline")
      ->capture_default_str();
  clsc->add_option("-o,--output", cls.output, "JSON report path")->capture_default_str();
  clsc->add_option("--csv", cls.csv, "Per-record CSV path (optional)");
  clsc->add_flag("--timestamp", cls.timestamp, "Record the wall-clock time in the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what());
  }

  try {
    if (*nash) run_nash_curve(curve);
    if (*qre) run_qre_sweep(sweep);
    if (*obj) run_objective_grid(grid);
    if (*simc) run_simulate(sim);
    if (*clsc) run_classify(cls);
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::invalid_argument& e) {
    return fail("InvalidArgument", e.what());
  } catch (const std::exception& e) {
    return fail("InternalError", e.what());
  }
  return 0;
}
