// scd: batch runs, analyses and the live session service.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <pthread.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "scd/scenario_io.hpp"
#include "scd/ws_server.hpp"

namespace {

using nlohmann::json;

enum Exit { ok = 0, failure = 1, schema = 2, solver = 3 };

int report(std::string_view code, std::string_view message, int status, json violations = json::array()) {
  json error = {{"error", {{"code", code}, {"message", message}, {"violations", std::move(violations)}}}};
  std::cerr << error.dump() << std::endl;
  return status;
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<std::string> split(const std::string& list, char sep) {
  std::vector<std::string> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& field, const std::string& text) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw scd::SchemaError(field, "'" + text + "' is not a number");
  return value;
}

scd::DynamicsVariant variant_or_schema_error(const std::string& field, const std::string& text) {
  try {
    return scd::parse_variant(text);
  } catch (const std::invalid_argument& e) {
    throw scd::SchemaError(field, e.what());
  }
}

struct SimulateArgs {
  std::string scenario, out, format = "json", variant;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
};

void run_simulate(const SimulateArgs& args) {
  scd::Scenario s = scd::load_scenario(args.scenario);
  if (args.seed) s.seed = *args.seed;
  if (args.beta) s.beta = *args.beta;
  if (!args.variant.empty()) s.variant = variant_or_schema_error("variant", args.variant);
  const auto trajectory = scd::simulate(s);
  write_output(args.out, args.format == "csv" ? scd::to_csv(trajectory) : scd::to_json(trajectory).dump(2) + "\n");
}

void run_pareto(const std::string& path, const std::string& out) {
  const auto table = scd::TabularQ::from_json(scd::load_json_file(path));
  const auto actions = scd::ActionSpace::tabular(table.actions());
  json states = json::array();
  for (std::size_t st = 0; st < table.states().size(); ++st) {
    const scd::State state = scd::StateId{st};
    const scd::Matrix q = table.q_table(state, actions);
    json frontier = json::array();
    for (const auto id : scd::pareto_frontier(q)) {
      frontier.push_back({{"id", id.index},
                          {"action", table.actions()[id.index]},
                          {"q", scd::vector_to_json(q.col(static_cast<Eigen::Index>(id.index)))}});
    }
    states.push_back({{"state", table.states()[st]}, {"frontier", std::move(frontier)}});
  }
  json doc = {{"schema_version", scd::kSchemaVersion}, {"goals", table.goals()}, {"states", std::move(states)}};
  write_output(out, doc.dump(2) + "\n");
}

void run_equilibrium(const std::string& goals_path, const std::string& state_text, const std::string& out,
                     double tol) {
  const auto goals = scd::goals_from_json(scd::load_json_file(goals_path));
  const auto parts = split(state_text, ',');
  if (parts.size() != goals.dimension()) {
    throw scd::SchemaError("state", "expected " + std::to_string(goals.dimension()) + " coordinates");
  }
  scd::Vector x(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) x[static_cast<Eigen::Index>(i)] = parse_number("state", parts[i]);

  const auto hull = scd::hull_query(x, goals, tol);
  const auto p = scd::equilibrium_belief(x, goals, tol);
  json doc = {{"schema_version", scd::kSchemaVersion},
              {"state", scd::vector_to_json(x)},
              {"inside_hull", hull.member},
              {"distance", std::sqrt(hull.residual)},
              {"projection", scd::vector_to_json(hull.projection)},
              {"belief", p ? scd::vector_to_json(*p) : json(nullptr)},
              {"set_point", p ? scd::vector_to_json(scd::set_point(*p, goals)) : json(nullptr)}};
  write_output(out, doc.dump(2) + "\n");
}

void run_lag_sweep(const std::string& scenario, const std::string& dwells_text, const std::string& variants_text,
                   const std::string& out) {
  const auto s = scd::load_scenario(scenario);
  std::vector<std::size_t> dwells;
  for (const auto& d : split(dwells_text, ',')) {
    const double value = parse_number("dwells", d);
    if (value < 0 || value != std::floor(value)) throw scd::SchemaError("dwells", "'" + d + "' is not a step count");
    dwells.push_back(static_cast<std::size_t>(value));
  }
  std::vector<scd::DynamicsVariant> variants;
  for (const auto& v : split(variants_text, ',')) variants.push_back(variant_or_schema_error("variants", v));
  if (dwells.empty()) throw scd::SchemaError("dwells", "empty list");
  if (variants.empty()) throw scd::SchemaError("variants", "empty list");

  json rows = json::array();
  for (const auto& row : scd::lag_sweep(s, dwells, variants)) {
    rows.push_back({{"variant", scd::to_string(row.variant)},
                    {"dwell", row.dwell},
                    {"flip_lag", row.flip_lag ? json(*row.flip_lag) : json(nullptr)}});
  }
  json doc = {{"schema_version", scd::kSchemaVersion}, {"rows", std::move(rows)}};
  write_output(out, doc.dump(2) + "\n");
}

void run_serve(std::uint16_t port, const std::string& address) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  scd::WsServer server(port, address.c_str());
  server.start();
  std::cout << json{{"listening", {{"address", address}, {"port", server.port()}}}}.dump() << std::endl;
  int received = 0;
  sigwait(&signals, &received);
  server.stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared-control assistance simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its trajectory");
  simulate->add_option("--scenario", sim.scenario, "Scenario JSON")->required()->envname("SCD_SCENARIO");
  simulate->add_option("--out", sim.out, "Output path, - for stdout")->required()->envname("SCD_OUT");
  simulate->add_option("--format", sim.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->envname("SCD_FORMAT");
  simulate->add_option("--seed", sim.seed, "Override the scenario seed")->envname("SCD_SEED");
  simulate->add_option("--beta", sim.beta, "Override the rationality coefficient")->envname("SCD_BETA");
  simulate->add_option("--variant", sim.variant, "pure | leaky:K | leakyd:K:KD")->envname("SCD_VARIANT");

  std::string qtable, pareto_out;
  auto* pareto = app.add_subcommand("pareto", "Per-state Pareto frontier of a Q-table");
  pareto->add_option("--qtable", qtable, "Q-table JSON")->required()->envname("SCD_QTABLE");
  pareto->add_option("--out", pareto_out, "Output path, - for stdout")->required()->envname("SCD_OUT");

  std::string goals, state, equilibrium_out;
  double hull_tol = scd::kDefaultHullTolerance;
  auto* equilibrium = app.add_subcommand("equilibrium", "Belief that holds a free-space state still");
  equilibrium->add_option("--goals", goals, "Goal JSON")->required()->envname("SCD_GOALS");
  equilibrium->add_option("--state", state, "Comma-separated coordinates")->required()->envname("SCD_STATE");
  equilibrium->add_option("--out", equilibrium_out, "Output path, - for stdout")->required()->envname("SCD_OUT");
  equilibrium->add_option("--tol", hull_tol, "Hull membership tolerance")->envname("SCD_HULL_TOL");

  std::string sweep_scenario, dwells, variants, sweep_out;
  auto* sweep = app.add_subcommand("lag-sweep", "Flip lag per dynamics variant and dwell");
  sweep->add_option("--scenario", sweep_scenario, "Scenario JSON with a switch_goal policy")
      ->required()
      ->envname("SCD_SCENARIO");
  sweep->add_option("--dwells", dwells, "Comma-separated dwell steps")->required()->envname("SCD_DWELLS");
  sweep->add_option("--variants", variants, "Comma-separated variants")->required()->envname("SCD_VARIANTS");
  sweep->add_option("--out", sweep_out, "Output path, - for stdout")->required()->envname("SCD_OUT");

  std::uint16_t port = 8765;
  std::string address = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "WebSocket session service");
  serve->add_option("--port", port, "TCP port, 0 for any free port")->envname("SCD_PORT");
  serve->add_option("--address", address, "Bind address")->envname("SCD_ADDRESS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), Exit::schema);
  }

  try {
    if (simulate->parsed()) run_simulate(sim);
    if (pareto->parsed()) run_pareto(qtable, pareto_out);
    if (equilibrium->parsed()) run_equilibrium(goals, state, equilibrium_out, hull_tol);
    if (sweep->parsed()) run_lag_sweep(sweep_scenario, dwells, variants, sweep_out);
    if (serve->parsed()) run_serve(port, address);
  } catch (const scd::SchemaError& e) {
    json violations = json::array();
    for (const auto& v : e.violations()) violations.push_back({{"field", v.field}, {"message", v.message}});
    return report("schema", e.what(), Exit::schema, std::move(violations));
  } catch (const scd::SolverError& e) {
    return report("solver", e.what(), Exit::solver);
  } catch (const std::exception& e) {
    return report("runtime", e.what(), Exit::failure);
  }
  return Exit::ok;
}
