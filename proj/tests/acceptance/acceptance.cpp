// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "scd/scenario_io.hpp"
#include "scd/sim_engine.hpp"

using namespace scd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;  // <= 0: no runtime bound
  std::function<Outcome()> check;
};

std::string fmt(const char* format, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, format, value);
  return buffer;
}

TabularQ random_table(std::mt19937_64& g, std::size_t k, std::size_t states, std::size_t actions) {
  std::vector<std::string> goals, state_labels, action_labels;
  for (std::size_t i = 0; i < k; ++i) goals.push_back("g" + std::to_string(i));
  for (std::size_t i = 0; i < states; ++i) state_labels.push_back("s" + std::to_string(i));
  for (std::size_t i = 0; i < actions; ++i) action_labels.push_back("a" + std::to_string(i));
  std::vector<double> values(k * states * actions);
  for (auto& v : values) v = oracle::uniform(g, -3, 3);
  return TabularQ(goals, state_labels, action_labels, values);
}

Matrix random_goals(std::mt19937_64& g, Eigen::Index n, Eigen::Index k) {
  Matrix goals(n, k);
  for (Eigen::Index i = 0; i < k; ++i) goals.col(i) = oracle::uniform_vector(g, n, -5, 5);
  return goals;
}

std::size_t pick(std::mt19937_64& g, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(g); }

Outcome bayes_equivalence() {
  auto g = oracle::rng(1001);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Scenario s;
    s.mode = Mode::tabular;
    s.goals = GoalSet::labels({"g0", "g1", "g2"});
    s.qtable = std::make_shared<const TabularQ>(random_table(g, 3, 6, 4));
    s.transitions.assign(6, std::vector<std::size_t>(4));
    for (auto& row : s.transitions) {
      for (auto& next : row) next = pick(g, 6);
    }
    s.beta = oracle::uniform(g, 0.1, 3);
    s.initial_state = StateId{pick(g, 6)};
    Scripted script;
    for (int t = 0; t < 50; ++t) script.inputs.emplace_back(ActionId{pick(g, 4)});
    s.policy = script;
    s.horizon = 50;

    const auto tr = simulate(s);
    if (tr.records.size() != 50) return {false, "trajectory ended early"};
    const auto actions = ActionSpace::tabular(s.qtable->actions());
    std::vector<State> states;
    std::vector<ActionId> inputs;
    const Vector prior = Vector::Constant(3, 1.0 / 3);
    for (const auto& r : tr.records) {
      states.push_back(r.x);
      inputs.push_back(r.input);
      const Vector direct = oracle_direct_bayes({s.beta}, *s.qtable, states, inputs, actions, prior);
      worst = std::max(worst, (r.belief - direct).cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-9, "max deviation " + fmt("%.3g", worst) + " over 1000 x 50 steps"};
}

Scenario mirror(DynamicsVariant variant, std::size_t dwell) {
  Scenario s;
  s.mode = Mode::tabular;
  s.goals = GoalSet::labels({"left", "right"});
  s.qtable = std::make_shared<const TabularQ>(TabularQ({"left", "right"}, {"s"}, {"a0", "a1"}, {1, 0, 0, 1}));
  s.transitions = {{0, 0}};
  s.initial_state = StateId{0};
  s.variant = variant;
  s.policy = SwitchGoal{0, 1, dwell};
  s.horizon = 3 * dwell + 10;
  return s;
}

Outcome pure_lag() {
  std::string detail = "lags";
  bool pass = true;
  for (std::size_t dwell : {5u, 10u, 20u, 40u}) {
    const auto lag = flip_lag(simulate(mirror(Pure{}, dwell)), dwell);
    detail += " T=" + std::to_string(dwell) + ":" + (lag ? std::to_string(*lag) : "none");
    pass = pass && lag && std::abs(double(*lag) - double(dwell)) <= 1.0;
  }
  return {pass, detail};
}

Outcome leaky_lag() {
  const auto a = flip_lag(simulate(mirror(Leaky{0.9}, 40)), 40);
  const auto b = flip_lag(simulate(mirror(Leaky{0.9}, 640)), 640);
  const auto show = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "none"; };
  return {a && b && *a == *b, "T=40:" + show(a) + " T=640:" + show(b)};
}

Outcome pareto_restriction() {
  auto g = oracle::rng(1004);
  std::size_t selections = 0, grid_checks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + trial % 3;
    const std::size_t m = 4 + pick(g, 5);
    const std::size_t states = 3;
    // Quarter-step values make exact ties and duplicate Q-vectors common.
    auto table = random_table(g, k, states, m);
    std::vector<double> values;
    for (std::size_t goal = 0; goal < k; ++goal) {
      for (std::size_t st = 0; st < states; ++st) {
        for (std::size_t a = 0; a < m; ++a) values.push_back(std::round(table.at(goal, StateId{st}, ActionId{a}) * 4) / 4);
      }
    }
    table = TabularQ(table.goals(), table.states(), table.actions(), values);
    const auto actions = ActionSpace::tabular(table.actions());
    for (int draw = 0; draw < 100; ++draw) {
      const State st = StateId{pick(g, states)};
      const auto frontier = pareto_frontier(st, actions, table);
      const LogBelief l{oracle::uniform_vector(g, static_cast<Eigen::Index>(k), -8, 8)};
      const auto chosen = qmdp_action(l, st, actions, table).action;
      if (std::find(frontier.begin(), frontier.end(), chosen) == frontier.end()) {
        return {false, "instance " + std::to_string(trial) + " selected a dominated action"};
      }
      ++selections;
    }
    for (std::size_t st = 0; st < states; ++st) {
      const auto frontier = pareto_frontier(StateId{st}, actions, table);
      for (int winner : oracle::grid_winners(table.q_table(StateId{st}, actions), 60)) {
        if (std::find(frontier.begin(), frontier.end(), ActionId{static_cast<std::size_t>(winner)}) == frontier.end()) {
          return {false, "grid winner outside the frontier in instance " + std::to_string(trial)};
        }
        ++grid_checks;
      }
    }
  }
  return {true, std::to_string(selections) + " selections, " + std::to_string(grid_checks) + " grid winners"};
}

Outcome closed_form_equivalence() {
  auto g = oracle::rng(1005);
  const auto actions = ActionSpace::free_space(2, 4096, 0);
  const double bound = 2 * std::numbers::pi / 4096 + 1e-9;
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index k = 2 + trial % 4;
    const auto goals = GoalSet::points(random_goals(g, 2, k));
    const FreeSpaceQ model(goals);
    const Vector x = oracle::uniform_vector(g, 2, -8, 8);
    const LogBelief l{oracle::uniform_vector(g, k, -4, 4)};
    const Vector exact = closed_form_action(l, x, goals);
    const Vector sampled = std::get<Vector>(actions.action(qmdp_action(l, x, actions, model).action));
    if (exact.norm() == 0 || sampled.norm() == 0) {
      if (exact.norm() != sampled.norm()) return {false, "zero action disagreement in instance " + std::to_string(trial)};
      continue;
    }
    worst = std::max(worst, oracle::angle_between(exact, sampled));
  }
  return {worst <= bound, "max angle " + fmt("%.3g", worst) + " rad, bound " + fmt("%.6g", bound)};
}

Outcome outside_hull_forcing() {
  auto g = oracle::rng(1006);
  int cases = 0;
  double smallest = std::numeric_limits<double>::infinity();
  while (cases < 1000) {
    const Eigen::Index n = 2 + cases % 2;
    const Eigen::Index k = 1 + cases % 5;
    const auto goals = GoalSet::points(random_goals(g, n, k));
    const Vector x = oracle::uniform_vector(g, n, -15, 15);
    const auto hull = hull_query(x, goals);
    if (hull.member) continue;
    const Vector a = closed_form_action(LogBelief{oracle::uniform_vector(g, k, -6, 6)}, x, goals);
    smallest = std::min(smallest, a.dot(hull.projection - x));
    ++cases;
  }
  return {smallest > 0, "min a.(projection - x) = " + fmt("%.3g", smallest) + " over 1000 cases"};
}

Outcome equilibrium_round_trip() {
  auto g = oracle::rng(1007);
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = 2 + trial % 2;
    const Eigen::Index k = 2 + trial % 5;
    const Matrix goal_matrix = random_goals(g, n, k);
    const auto goals = GoalSet::points(goal_matrix);
    const Vector x = goal_matrix * oracle::random_belief(g, k);
    const auto p = equilibrium_belief(x, goals);
    if (!p) return {false, "no equilibrium for an interior point in instance " + std::to_string(trial)};
    worst = std::max(worst, (set_point(*p, goals) - x).norm());
    // Exact zeros have no finite log; 1e-300 stands in for them.
    const LogBelief l = log_belief_from(p->cwiseMax(1e-300));
    if (closed_form_action(l, x, goals).norm() != 0.0) {
      return {false, "nonzero assistive action at the equilibrium of instance " + std::to_string(trial)};
    }
  }
  return {worst <= 1e-6, "max |set_point - x| = " + fmt("%.3g", worst) + ", zero action at all 500"};
}

Outcome bellman() {
  auto g = oracle::rng(1008);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 2 + trial % 2;
    const Vector x = oracle::uniform_vector(g, n, -10, 10);
    Vector goal = oracle::uniform_vector(g, n, -10, 10);
    while ((goal - x).norm() <= 1.0) goal = oracle::uniform_vector(g, n, -10, 10);
    const Vector a = oracle::uniform_vector(g, n, -1, 1).normalized();
    worst = std::max(worst, std::abs(bellman_residual(x, goal, a)));
  }
  return {worst < 1e-9, "max residual " + fmt("%.3g", worst)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / "scd_acceptance";
  fs::create_directories(dir);
  int compared = 0;
  for (const char* name : {"triangle.json", "stop_at_point.json", "lag_tabular.json", "outside_hull.json"}) {
    for (const char* format : {"json", "csv"}) {
      std::string outputs[2];
      for (int run = 0; run < 2; ++run) {
        const fs::path out = dir / (std::to_string(run) + "_" + name + "." + format);
        const std::string command = std::string(SCD_BINARY) + " simulate --scenario " +
                                    (fs::path(SCD_SOURCE_DIR) / "scenarios" / name).string() +
                                    " --seed 11 --format " + format + " --out " + out.string();
        const int status = std::system(command.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "simulate failed for " + std::string(name)};
        outputs[run] = slurp(out);
      }
      if (outputs[0] != outputs[1] || outputs[0].empty()) return {false, std::string(name) + " differs between runs"};
      ++compared;
    }
  }
  return {true, std::to_string(compared) + " output pairs byte-identical"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"bayes-equivalence", 10, bayes_equivalence},
      {"pure-integrator-lag", 1, pure_lag},
      {"leaky-bounded-lag", 1, leaky_lag},
      {"pareto-restriction", 30, pareto_restriction},
      {"closed-form-argmax", 10, closed_form_equivalence},
      {"outside-hull-forcing", 0, outside_hull_forcing},
      {"equilibrium-round-trip", 0, equilibrium_round_trip},
      {"bellman-residual", 0, bellman},
      {"cli-determinism", 0, cli_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && seconds >= c.budget_seconds) {
      outcome.pass = false;
      outcome.detail += "; over the " + fmt("%g", c.budget_seconds) + " s budget";
    }
    failures += !outcome.pass;
    std::printf("%s %-24s %s (%.3f s)\n", outcome.pass ? "PASS" : "FAIL", c.name.c_str(), outcome.detail.c_str(),
                seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
