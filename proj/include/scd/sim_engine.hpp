#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scd/action_select.hpp"
#include "scd/belief_dynamics.hpp"
#include "scd/core_model.hpp"
#include "scd/errors.hpp"
#include "scd/freespace_analysis.hpp"

namespace scd {

enum class Mode { tabular, free_space };
enum class SelectionMethod { closed_form, sampled };

// Emits the Q-optimal input for one goal every step.
struct ConstantTowardGoal {
  std::size_t goal = 0;
};
// Optimal for `from` on steps [0, t_switch), optimal for `to` afterwards.
struct SwitchGoal {
  std::size_t from = 0;
  std::size_t to = 1;
  std::size_t t_switch = 0;
};
struct Scripted {
  std::vector<Action> inputs;
};
// Greedy one-step lookahead: the input whose updated set point lands closest to target.
struct StopAtPoint {
  Vector target;
};
// Inputs arrive from outside, one per step.
struct Interactive {};

using UserPolicy = std::variant<ConstantTowardGoal, SwitchGoal, Scripted, StopAtPoint, Interactive>;

struct Tolerances {
  double tie = kDefaultTieTolerance;
  double hull = kDefaultHullTolerance;
};

struct Scenario {
  Mode mode = Mode::free_space;
  GoalSet goals;
  double beta = 1.0;
  DynamicsVariant variant = Pure{};
  std::optional<Vector> prior;  // uniform when absent

  // free space
  std::size_t direction_samples = 64;
  double step_size = 1.0;
  SelectionMethod selection = SelectionMethod::closed_form;

  // tabular
  std::shared_ptr<const TabularQ> qtable;
  std::vector<std::vector<std::size_t>> transitions;  // [state][action] -> state

  UserPolicy policy = Interactive{};
  State initial_state;
  std::size_t horizon = 100;
  std::uint64_t seed = 0;
  Tolerances tol;
  std::size_t stop_patience = 5;
};

// Every violation found; empty when the scenario is runnable.
std::vector<Violation> validate(const Scenario& scenario);
void require_valid(const Scenario& scenario);

struct StepRecord {
  std::size_t t = 0;
  State x;             // state in which the input was given
  ActionId input;      // index of u in the action space
  Action u;
  InputLogLik v;
  LogBelief l;         // after the update
  Vector belief;
  Action a;            // assistive action applied at x
  std::optional<Vector> set_point;
  std::optional<Phase> phase;  // of x
  double value = 0.0;          // exp(l) . Q(x, a)
};

enum class Termination { horizon, stopped, script_exhausted };
std::string_view to_string(Termination termination);

struct HullEvent {
  std::size_t t = 0;
  Phase entered = Phase::outside_hull;
};

struct Trajectory {
  Scenario scenario;
  LogBelief initial_log_belief;
  std::vector<StepRecord> records;
  State final_state;
  Termination termination = Termination::horizon;
  std::vector<HullEvent> events;  // hull boundary crossings, by step
};

/// What the assistance shows between steps: the current state, belief and the
/// action it would take right now.
struct View {
  std::size_t step = 0;
  State x;
  LogBelief l;
  Vector belief;
  std::optional<Vector> set_point;
  Action assist_action;
  std::optional<Phase> phase;
  double value = 0.0;
};

/// The closed loop, one user input at a time.
class Simulation {
 public:
  explicit Simulation(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  const ActionSpace& actions() const { return actions_; }
  const QModel& model() const { return *model_; }
  const State& state() const { return x_; }
  const LogBelief& log_belief() const { return l_; }
  std::size_t steps() const { return t_; }
  bool stopped() const;

  // Free-space vectors snap to the nearest available action; identifiers are checked.
  ActionId resolve(const Action& requested) const;

  StepRecord advance(ActionId input);
  View view() const;

  // Keeps l; later steps follow the new rule.
  void set_variant(const DynamicsVariant& variant);
  // Back to step 0 with the scenario's own variant.
  void reset();

  // Q-optimal input toward one goal from the current state.
  ActionId optimal_input(std::size_t goal) const;

  // Column j: the input log-likelihood input j would produce from here.
  Matrix candidate_logliks() const;
  // The log belief one step ahead if v arrived next.
  LogBelief preview(const InputLogLik& v) const;

 private:
  struct Selection {
    Action action;
    double value = 0.0;
    bool is_zero = false;
  };
  Selection select(const LogBelief& l, const State& x) const;
  State transition(const State& x, const Selection& a) const;

  Scenario scenario_;
  ActionSpace actions_;
  std::shared_ptr<const QModel> model_;
  LikelihoodParams params_;
  DynamicsVariant initial_variant_;

  State x_;
  LogBelief l_;
  std::optional<InputLogLik> v_prev_;
  std::size_t t_ = 0;
  std::size_t zero_run_ = 0;
};

// The input a scripted or automatic policy emits next; nullopt when a script
// is exhausted. Interactive policies throw.
std::optional<ActionId> policy_input(const Simulation& sim, const UserPolicy& policy);

Trajectory simulate(const Scenario& scenario);

// Smallest d >= 0 with a different dominant goal at step t_switch + d than at
// t_switch - 1 (the prior when t_switch == 0).
std::optional<std::size_t> flip_lag(const Trajectory& trajectory, std::size_t t_switch);

struct Metrics {
  std::optional<std::size_t> flip_lag;
  std::optional<std::size_t> steps_to_stop;
  std::optional<double> final_distance;  // to the policy's goal or target
  std::size_t effort_count = 0;          // nonzero user inputs
  double effort_magnitude = 0.0;         // sum of input norms (tabular: count)
  double min_log_belief = 0.0;
  double max_log_belief = 0.0;
};

Metrics compute_metrics(const Trajectory& trajectory);

struct LagRow {
  DynamicsVariant variant;
  std::size_t dwell = 0;
  std::optional<std::size_t> flip_lag;
};

// One simulation per (variant, dwell) with the template's SwitchGoal policy
// switched at the dwell; horizon is raised to at least 3 * dwell.
std::vector<LagRow> lag_sweep(const Scenario& scenario_template, std::span<const std::size_t> dwells,
                              std::span<const DynamicsVariant> variants);

}  // namespace scd
