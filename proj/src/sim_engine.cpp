#include "scd/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

namespace scd {

namespace {

std::string index_field(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

void validate_policy(const Scenario& s, std::vector<Violation>& out) {
  const std::size_t k = s.goals.size();
  const auto check_goal = [&](std::size_t goal, const std::string& field) {
    if (goal >= k) out.push_back({field, "goal index " + std::to_string(goal) + " does not exist"});
  };
  std::visit(
      [&](const auto& policy) {
        using P = std::decay_t<decltype(policy)>;
        if constexpr (std::is_same_v<P, ConstantTowardGoal>) {
          check_goal(policy.goal, "policy.goal");
        } else if constexpr (std::is_same_v<P, SwitchGoal>) {
          check_goal(policy.from, "policy.from");
          check_goal(policy.to, "policy.to");
        } else if constexpr (std::is_same_v<P, Scripted>) {
          for (std::size_t i = 0; i < policy.inputs.size(); ++i) {
            const auto field = index_field("policy.inputs", i);
            const auto& input = policy.inputs[i];
            if (s.mode == Mode::free_space) {
              const auto* u = std::get_if<Vector>(&input);
              if (u == nullptr) {
                out.push_back({field, "free-space inputs must be vectors"});
              } else if (static_cast<std::size_t>(u->size()) != s.goals.dimension() || !u->allFinite()) {
                out.push_back({field, "input must be a finite vector of the goal dimension"});
              }
            } else {
              const auto* id = std::get_if<ActionId>(&input);
              if (id == nullptr) {
                out.push_back({field, "tabular inputs must be action identifiers"});
              } else if (s.qtable && id->index >= s.qtable->actions().size()) {
                out.push_back({field, "unknown action"});
              }
            }
          }
        } else if constexpr (std::is_same_v<P, StopAtPoint>) {
          if (s.mode != Mode::free_space) {
            out.push_back({"policy", "stop_at_point needs free-space mode"});
          } else if (static_cast<std::size_t>(policy.target.size()) != s.goals.dimension() ||
                     !policy.target.allFinite()) {
            out.push_back({"policy.target", "target must be a finite point of the goal dimension"});
          }
        }
      },
      s.policy);
}

}  // namespace

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::horizon: return "horizon";
    case Termination::stopped: return "stopped";
    case Termination::script_exhausted: return "script_exhausted";
  }
  return "horizon";
}

std::vector<Violation> validate(const Scenario& s) {
  std::vector<Violation> out;
  const std::size_t k = s.goals.size();
  if (k == 0) out.push_back({"goals", "at least one goal is required"});

  if (!(s.beta >= 0.0 && std::isfinite(s.beta))) out.push_back({"beta", "must be finite and >= 0"});
  try {
    validate_variant(s.variant);
  } catch (const std::invalid_argument& e) {
    out.push_back({"dynamics", e.what()});
  }
  if (s.prior) {
    const Vector& p = *s.prior;
    if (static_cast<std::size_t>(p.size()) != k) {
      out.push_back({"prior", "length must equal the number of goals"});
    } else if (!p.allFinite() || (p.array() <= 0.0).any() || std::abs(p.sum() - 1.0) > 1e-9) {
      out.push_back({"prior", "entries must be positive and sum to 1"});
    }
  }
  if (s.horizon < 1) out.push_back({"horizon", "must be >= 1"});
  if (s.stop_patience < 1) out.push_back({"stop_patience", "must be >= 1"});
  if (!(s.tol.tie >= 0.0)) out.push_back({"tolerances.tie", "must be >= 0"});
  if (!(s.tol.hull >= 0.0)) out.push_back({"tolerances.hull", "must be >= 0"});

  if (s.mode == Mode::free_space) {
    if (k > 0 && !s.goals.is_free_space()) out.push_back({"goals", "free-space goals must be points"});
    const auto* x0 = std::get_if<Vector>(&s.initial_state);
    if (x0 == nullptr) {
      out.push_back({"initial_state", "free-space initial state must be a point"});
    } else if (k > 0 && (static_cast<std::size_t>(x0->size()) != s.goals.dimension() || !x0->allFinite())) {
      out.push_back({"initial_state", "must be a finite point of the goal dimension"});
    }
    if (!(s.step_size > 0.0 && std::isfinite(s.step_size))) out.push_back({"step_size", "must be > 0"});
    if (s.direction_samples < 4) out.push_back({"direction_samples", "must be >= 4"});
  } else {
    if (!s.qtable) {
      out.push_back({"qtable", "tabular mode needs a Q-table"});
    } else {
      const auto& q = *s.qtable;
      if (k > 0 && q.goals() != s.goals.labels()) {
        out.push_back({"qtable.goals", "must list the scenario goals in the same order"});
      }
      const auto* x0 = std::get_if<StateId>(&s.initial_state);
      if (x0 == nullptr || x0->index >= q.states().size()) {
        out.push_back({"initial_state", "must name a Q-table state"});
      }
      if (s.transitions.size() != q.states().size()) {
        out.push_back({"transitions", "need one row per Q-table state"});
      } else {
        for (std::size_t st = 0; st < s.transitions.size(); ++st) {
          const auto& row = s.transitions[st];
          if (row.size() != q.actions().size()) {
            out.push_back({index_field("transitions", st), "need one entry per action"});
            continue;
          }
          for (std::size_t a = 0; a < row.size(); ++a) {
            if (row[a] >= q.states().size()) {
              out.push_back({index_field(index_field("transitions", st), a), "unknown state"});
            }
          }
        }
      }
    }
  }
  validate_policy(s, out);
  return out;
}

void require_valid(const Scenario& scenario) {
  auto violations = validate(scenario);
  if (!violations.empty()) throw SchemaError(std::move(violations));
}

// ---------------------------------------------------------------- Simulation

namespace {

Scenario checked(Scenario scenario) {
  require_valid(scenario);
  return scenario;
}

ActionSpace make_action_space(const Scenario& s) {
  if (s.mode == Mode::free_space) return ActionSpace::free_space(s.goals.dimension(), s.direction_samples, s.seed);
  return ActionSpace::tabular(s.qtable->actions());
}

std::shared_ptr<const QModel> make_model(const Scenario& s) {
  if (s.mode == Mode::free_space) return std::make_shared<FreeSpaceQ>(s.goals);
  return s.qtable;
}

}  // namespace

Simulation::Simulation(Scenario scenario)
    : scenario_(checked(std::move(scenario))),
      actions_(make_action_space(scenario_)),
      model_(make_model(scenario_)),
      params_{scenario_.beta},
      initial_variant_(scenario_.variant) {
  reset();
}

void Simulation::reset() {
  scenario_.variant = initial_variant_;
  x_ = scenario_.initial_state;
  l_ = scenario_.prior ? log_belief_from(*scenario_.prior) : uniform_log_belief(scenario_.goals.size());
  v_prev_.reset();
  t_ = 0;
  zero_run_ = 0;
}

void Simulation::set_variant(const DynamicsVariant& variant) {
  validate_variant(variant);
  scenario_.variant = variant;
}

bool Simulation::stopped() const {
  return scenario_.mode == Mode::free_space && zero_run_ >= scenario_.stop_patience;
}

ActionId Simulation::resolve(const Action& requested) const {
  if (const auto* u = std::get_if<Vector>(&requested)) {
    if (!actions_.is_free_space()) throw DomainError("tabular sessions take action identifiers");
    return actions_.nearest(*u);
  }
  const ActionId id = std::get<ActionId>(requested);
  if (!actions_.contains(id)) throw DomainError("action " + std::to_string(id.index) + " is not in the action space");
  return id;
}

Simulation::Selection Simulation::select(const LogBelief& l, const State& x) const {
  if (scenario_.mode == Mode::tabular) {
    const auto chosen = qmdp_action(l, x, actions_, *model_, scenario_.tol.tie);
    return {chosen.action, chosen.value, false};
  }
  const Vector& point = std::get<Vector>(x);
  if (scenario_.selection == SelectionMethod::sampled) {
    const auto chosen = qmdp_action(l, x, actions_, *model_, scenario_.tol.tie);
    return {actions_.action(chosen.action), chosen.value, chosen.action == *actions_.zero_action()};
  }
  Vector a = closed_form_action(l, point, scenario_.goals, scenario_.tol.tie);
  const double value = std::exp(log_sum_exp(l.values)) *
                       belief(l).dot(q_matrix(point, scenario_.goals).transpose() * a);
  const bool is_zero = a.isZero(0.0);
  return {std::move(a), value, is_zero};
}

State Simulation::transition(const State& x, const Selection& a) const {
  if (scenario_.mode == Mode::free_space) {
    return Vector(std::get<Vector>(x) + scenario_.step_size * std::get<Vector>(a.action));
  }
  const auto s = std::get<StateId>(x).index;
  return StateId{scenario_.transitions[s][std::get<ActionId>(a.action).index]};
}

StepRecord Simulation::advance(ActionId input) {
  if (!actions_.contains(input)) {
    throw DomainError("input " + std::to_string(input.index) + " is not in the action space");
  }
  InputLogLik v = input_loglik(params_, *model_, x_, actions_, input);
  l_ = step(l_, v, v_prev_, scenario_.variant);

  StepRecord record;
  record.t = t_;
  record.x = x_;
  record.input = input;
  record.u = actions_.action(input);
  record.v = v;
  record.l = l_;
  record.belief = belief(l_);

  const Selection chosen = select(l_, x_);
  record.a = chosen.action;
  record.value = chosen.value;
  if (scenario_.mode == Mode::free_space) {
    record.set_point = set_point(record.belief, scenario_.goals);
    record.phase = phase(std::get<Vector>(x_), scenario_.goals, scenario_.tol.hull);
  }

  v_prev_ = std::move(v);
  x_ = transition(x_, chosen);
  zero_run_ = chosen.is_zero ? zero_run_ + 1 : 0;
  ++t_;
  return record;
}

View Simulation::view() const {
  View out;
  out.step = t_;
  out.x = x_;
  out.l = l_;
  out.belief = belief(l_);
  const Selection chosen = select(l_, x_);
  out.assist_action = chosen.action;
  out.value = chosen.value;
  if (scenario_.mode == Mode::free_space) {
    out.set_point = set_point(out.belief, scenario_.goals);
    out.phase = phase(std::get<Vector>(x_), scenario_.goals, scenario_.tol.hull);
  }
  return out;
}

ActionId Simulation::optimal_input(std::size_t goal) const {
  if (goal >= scenario_.goals.size()) throw DomainError("unknown goal " + std::to_string(goal));
  const Matrix table = model_->q_table(x_, actions_);
  const auto row = table.row(static_cast<Eigen::Index>(goal));
  const double best = row.maxCoeff();
  const auto zero = actions_.zero_action();
  if (zero && best <= scenario_.tol.tie) return *zero;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (row[j] >= best - scenario_.tol.tie) return ActionId{static_cast<std::size_t>(j)};
  }
  return ActionId{0};
}

Matrix Simulation::candidate_logliks() const {
  return input_loglik_all(params_, *model_, x_, actions_);
}

LogBelief Simulation::preview(const InputLogLik& v) const {
  return step(l_, v, v_prev_, scenario_.variant);
}

// ---------------------------------------------------------------- batch runs

std::optional<ActionId> policy_input(const Simulation& sim, const UserPolicy& policy) {
  return std::visit(
      [&](const auto& p) -> std::optional<ActionId> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantTowardGoal>) {
          return sim.optimal_input(p.goal);
        } else if constexpr (std::is_same_v<P, SwitchGoal>) {
          return sim.optimal_input(sim.steps() < p.t_switch ? p.from : p.to);
        } else if constexpr (std::is_same_v<P, Scripted>) {
          if (sim.steps() >= p.inputs.size()) return std::nullopt;
          return sim.resolve(p.inputs[sim.steps()]);
        } else if constexpr (std::is_same_v<P, StopAtPoint>) {
          const Matrix candidates = sim.candidate_logliks();
          const GoalSet& goals = sim.scenario().goals;
          ActionId best{0};
          double best_distance = std::numeric_limits<double>::infinity();
          for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
            const LogBelief next = sim.preview(InputLogLik{candidates.col(j)});
            const double distance = (set_point(belief(next), goals) - p.target).norm();
            if (distance < best_distance) {
              best_distance = distance;
              best = ActionId{static_cast<std::size_t>(j)};
            }
          }
          return best;
        } else {
          throw std::logic_error("interactive policies take inputs from outside the simulation");
        }
      },
      policy);
}

Trajectory simulate(const Scenario& scenario) {
  if (std::holds_alternative<Interactive>(scenario.policy)) {
    throw SchemaError("policy", "an interactive policy cannot run as a batch simulation");
  }
  Simulation sim(scenario);
  Trajectory out;
  out.scenario = sim.scenario();
  out.initial_log_belief = sim.log_belief();
  out.termination = Termination::horizon;

  while (sim.steps() < scenario.horizon) {
    const auto input = policy_input(sim, scenario.policy);
    if (!input) {
      out.termination = Termination::script_exhausted;
      break;
    }
    out.records.push_back(sim.advance(*input));
    if (sim.stopped()) {
      out.termination = Termination::stopped;
      break;
    }
  }
  out.final_state = sim.state();

  std::optional<Phase> previous;
  for (const auto& record : out.records) {
    if (!record.phase) continue;
    if (previous && *previous != *record.phase) out.events.push_back({record.t, *record.phase});
    previous = record.phase;
  }
  return out;
}

std::optional<std::size_t> flip_lag(const Trajectory& trajectory, std::size_t t_switch) {
  const auto& records = trajectory.records;
  if (t_switch >= records.size()) return std::nullopt;
  const Vector reference =
      t_switch == 0 ? belief(trajectory.initial_log_belief) : records[t_switch - 1].belief;
  const std::size_t before = dominant_goal(reference);
  for (std::size_t d = 0; t_switch + d < records.size(); ++d) {
    if (dominant_goal(records[t_switch + d].belief) != before) return d;
  }
  return std::nullopt;
}

Metrics compute_metrics(const Trajectory& trajectory) {
  Metrics m;
  const auto& s = trajectory.scenario;
  if (const auto* sw = std::get_if<SwitchGoal>(&s.policy)) m.flip_lag = flip_lag(trajectory, sw->t_switch);
  if (trajectory.termination == Termination::stopped) {
    m.steps_to_stop = trajectory.records.size() - s.stop_patience;
  }

  if (s.mode == Mode::free_space) {
    std::optional<Vector> target;
    if (const auto* c = std::get_if<ConstantTowardGoal>(&s.policy)) target = s.goals.point(c->goal);
    if (const auto* sw = std::get_if<SwitchGoal>(&s.policy)) target = s.goals.point(sw->to);
    if (const auto* st = std::get_if<StopAtPoint>(&s.policy)) target = st->target;
    if (target) m.final_distance = (std::get<Vector>(trajectory.final_state) - *target).norm();
  }

  const Vector& l0 = trajectory.initial_log_belief.values;
  m.min_log_belief = l0.minCoeff();
  m.max_log_belief = l0.maxCoeff();
  for (const auto& record : trajectory.records) {
    if (const auto* u = std::get_if<Vector>(&record.u)) {
      const double norm = u->norm();
      if (norm > 0.0) {
        ++m.effort_count;
        m.effort_magnitude += norm;
      }
    } else {
      ++m.effort_count;
      m.effort_magnitude += 1.0;
    }
    m.min_log_belief = std::min(m.min_log_belief, record.l.values.minCoeff());
    m.max_log_belief = std::max(m.max_log_belief, record.l.values.maxCoeff());
  }
  return m;
}

std::vector<LagRow> lag_sweep(const Scenario& scenario_template, std::span<const std::size_t> dwells,
                              std::span<const DynamicsVariant> variants) {
  if (!std::holds_alternative<SwitchGoal>(scenario_template.policy)) {
    throw SchemaError("policy", "lag sweep needs a switch_goal policy");
  }
  struct Job {
    LagRow row;
    std::future<std::optional<std::size_t>> lag;
  };
  std::vector<Job> jobs;
  for (const auto& variant : variants) {
    for (const std::size_t dwell : dwells) {
      Scenario s = scenario_template;
      s.variant = variant;
      std::get<SwitchGoal>(s.policy).t_switch = dwell;
      s.horizon = std::max(s.horizon, 3 * dwell);
      jobs.push_back({LagRow{variant, dwell, std::nullopt}, std::async(std::launch::async, [s = std::move(s), dwell] {
                        return flip_lag(simulate(s), dwell);
                      })});
    }
  }

  std::vector<LagRow> rows;
  for (auto& job : jobs) {
    const std::string where =
        "row (variant " + to_string(job.row.variant) + ", dwell " + std::to_string(job.row.dwell) + ")";
    try {
      job.row.flip_lag = job.lag.get();
    } catch (const SchemaError& e) {
      auto violations = e.violations();
      for (auto& v : violations) v.field = where + " " + v.field;
      throw SchemaError(std::move(violations));
    } catch (const SolverError& e) {
      throw SolverError(where + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    rows.push_back(job.row);
  }
  return rows;
}

}  // namespace scd
