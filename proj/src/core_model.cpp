#include "scd/core_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "scd/errors.hpp"

namespace scd {

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::ostringstream out;
  out << "invalid document:";
  for (const auto& v : violations) out << " [" << v.field << "] " << v.message << ";";
  return out.str();
}

std::vector<std::string> parse_labels(const nlohmann::json& doc, const char* key,
                                      std::vector<Violation>& violations) {
  std::vector<std::string> labels;
  if (!doc.contains(key)) {
    violations.push_back({key, "missing required field"});
    return labels;
  }
  const auto& list = doc.at(key);
  if (!list.is_array() || list.empty()) {
    violations.push_back({key, "must be a nonempty array"});
    return labels;
  }
  for (const auto& item : list) {
    if (item.is_string()) {
      labels.push_back(item.get<std::string>());
    } else if (item.is_number_integer()) {
      labels.push_back(std::to_string(item.get<long long>()));
    } else {
      violations.push_back({key, "entries must be strings or integers"});
      return {};
    }
  }
  return labels;
}

}  // namespace

SchemaError::SchemaError(std::vector<Violation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

SchemaError::SchemaError(std::string field, std::string message)
    : SchemaError(std::vector<Violation>{{std::move(field), std::move(message)}}) {}

// ---------------------------------------------------------------- GoalSet

GoalSet GoalSet::points(const std::vector<Vector>& goals) {
  if (goals.empty()) throw std::invalid_argument("goal set needs at least one goal");
  const auto n = goals.front().size();
  Matrix m(n, static_cast<Eigen::Index>(goals.size()));
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (goals[i].size() != n) {
      throw std::invalid_argument("goal " + std::to_string(i) + " has dimension " +
                                  std::to_string(goals[i].size()) + ", expected " +
                                  std::to_string(n));
    }
    m.col(static_cast<Eigen::Index>(i)) = goals[i];
  }
  return points(std::move(m));
}

GoalSet GoalSet::points(Matrix goals_as_columns) {
  if (goals_as_columns.cols() < 1) throw std::invalid_argument("goal set needs at least one goal");
  if (goals_as_columns.rows() < 1) throw std::invalid_argument("free-space goals need dimension >= 1");
  GoalSet set;
  set.free_space_ = true;
  set.matrix_ = std::move(goals_as_columns);
  for (Eigen::Index i = 0; i < set.matrix_.cols(); ++i) set.labels_.push_back("g" + std::to_string(i));
  return set;
}

GoalSet GoalSet::labels(std::vector<std::string> labels) {
  if (labels.empty()) throw std::invalid_argument("goal set needs at least one goal");
  GoalSet set;
  set.labels_ = std::move(labels);
  return set;
}

Vector GoalSet::point(std::size_t goal) const {
  if (!free_space_) throw DomainError("tabular goals have no coordinates");
  if (goal >= size()) throw DomainError("unknown goal " + std::to_string(goal));
  return matrix_.col(static_cast<Eigen::Index>(goal));
}

// ---------------------------------------------------------------- directions

std::vector<Vector> direction_samples(std::size_t dimension, std::size_t count,
                                      std::uint64_t seed) {
  if (dimension == 0) throw std::invalid_argument("direction_samples: dimension must be >= 1");
  if (count < 4) throw std::invalid_argument("direction_samples: need at least 4 samples");

  std::vector<Vector> out;
  out.reserve(count);
  const auto n = static_cast<Eigen::Index>(dimension);

  if (dimension == 1) {
    // Only two unit vectors exist on the line; alternate them.
    for (std::size_t i = 0; i < count; ++i) out.push_back(Vector::Constant(1, i % 2 == 0 ? 1.0 : -1.0));
    return out;
  }

  if (dimension == 2) {
    for (std::size_t i = 0; i < count; ++i) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
      Vector d(2);
      d << std::cos(angle), std::sin(angle);
      out.push_back(d);
    }
    return out;
  }

  std::mt19937_64 rng(seed);
  if (dimension == 3) {
    // Fibonacci lattice, spun about the pole by a seeded phase.
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double offset = phase(rng);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double theta = offset + golden * static_cast<double>(i);
      Vector d(3);
      d << r * std::cos(theta), r * std::sin(theta), z;
      out.push_back(d / d.norm());
    }
    return out;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  while (out.size() < count) {
    Vector d(n);
    for (Eigen::Index j = 0; j < n; ++j) d[j] = normal(rng);
    const double norm = d.norm();
    if (norm < 1e-6) continue;
    out.push_back(d / norm);
  }
  return out;
}

// ---------------------------------------------------------------- ActionSpace

ActionSpace ActionSpace::tabular(std::vector<std::string> labels) {
  if (labels.empty()) throw std::invalid_argument("tabular action space must be nonempty");
  ActionSpace space;
  space.labels_ = std::move(labels);
  return space;
}

ActionSpace ActionSpace::free_space(std::size_t dimension, std::size_t samples,
                                    std::uint64_t seed) {
  const auto dirs = direction_samples(dimension, samples, seed);
  ActionSpace space;
  space.free_space_ = true;
  space.directions_ = Matrix::Zero(static_cast<Eigen::Index>(dimension),
                                   static_cast<Eigen::Index>(samples + 1));
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    space.directions_.col(static_cast<Eigen::Index>(i)) = dirs[i];
    space.labels_.push_back("d" + std::to_string(i));
  }
  space.labels_.push_back("zero");
  return space;
}

Action ActionSpace::action(ActionId id) const {
  if (!contains(id)) throw DomainError("action " + std::to_string(id.index) + " is not in the action space");
  if (free_space_) return Vector(directions_.col(static_cast<Eigen::Index>(id.index)));
  return id;
}

const std::string& ActionSpace::label(ActionId id) const {
  if (!contains(id)) throw DomainError("action " + std::to_string(id.index) + " is not in the action space");
  return labels_[id.index];
}

std::optional<ActionId> ActionSpace::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return ActionId{i};
  }
  return std::nullopt;
}

std::optional<ActionId> ActionSpace::zero_action() const {
  if (!free_space_) return std::nullopt;
  return ActionId{size() - 1};
}

ActionId ActionSpace::nearest(const Vector& requested) const {
  if (!free_space_) throw DomainError("nearest() applies to free-space action spaces only");
  if (requested.size() != directions_.rows()) {
    throw DomainError("action has dimension " + std::to_string(requested.size()) + ", expected " +
                      std::to_string(directions_.rows()));
  }
  if (!requested.allFinite()) throw DomainError("action has non-finite entries");
  if (requested.norm() <= 1e-12) return *zero_action();

  const Eigen::Index samples = directions_.cols() - 1;
  Eigen::Index best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < samples; ++j) {
    const double value = directions_.col(j).dot(requested);
    if (value > best_value) {
      best_value = value;
      best = j;
    }
  }
  return ActionId{static_cast<std::size_t>(best)};
}

// ---------------------------------------------------------------- QModel

Matrix QModel::q_table(const State& state, const ActionSpace& actions) const {
  Matrix table(static_cast<Eigen::Index>(goal_count()), static_cast<Eigen::Index>(actions.size()));
  for (std::size_t j = 0; j < actions.size(); ++j) {
    const Action a = actions.action(ActionId{j});
    for (std::size_t g = 0; g < goal_count(); ++g) {
      table(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) = q(g, state, a);
    }
  }
  return table;
}

Vector q_vector(const QModel& model, const State& state, const Action& action) {
  Vector out(static_cast<Eigen::Index>(model.goal_count()));
  for (std::size_t g = 0; g < model.goal_count(); ++g) out[static_cast<Eigen::Index>(g)] = model.q(g, state, action);
  return out;
}

// ---------------------------------------------------------------- TabularQ

TabularQ::TabularQ(std::vector<std::string> goals, std::vector<std::string> states,
                   std::vector<std::string> actions, std::vector<double> values)
    : goals_(std::move(goals)),
      states_(std::move(states)),
      actions_(std::move(actions)),
      values_(std::move(values)) {
  if (goals_.empty() || states_.empty() || actions_.empty()) {
    throw std::invalid_argument("Q-table needs at least one goal, state and action");
  }
  if (values_.size() != goals_.size() * states_.size() * actions_.size()) {
    throw std::invalid_argument("Q-table value count does not match goals x states x actions");
  }
}

TabularQ TabularQ::from_json(const nlohmann::json& doc) {
  std::vector<Violation> violations;
  if (!doc.is_object()) throw SchemaError("", "Q-table document must be a JSON object");

  auto states = parse_labels(doc, "states", violations);
  auto actions = parse_labels(doc, "actions", violations);
  auto goals = parse_labels(doc, "goals", violations);

  std::vector<double> values;
  if (!doc.contains("q")) {
    violations.push_back({"q", "missing required field"});
  } else if (violations.empty()) {
    const auto& q = doc.at("q");
    const auto shape_error = [&](const std::string& where, std::size_t expected) {
      violations.push_back({where, "expected an array of length " + std::to_string(expected)});
    };
    if (!q.is_array() || q.size() != goals.size()) {
      shape_error("q", goals.size());
    } else {
      values.reserve(goals.size() * states.size() * actions.size());
      for (std::size_t g = 0; g < goals.size() && violations.empty(); ++g) {
        const auto& per_state = q[g];
        const std::string gpath = "q[" + std::to_string(g) + "]";
        if (!per_state.is_array() || per_state.size() != states.size()) {
          shape_error(gpath, states.size());
          break;
        }
        for (std::size_t s = 0; s < states.size(); ++s) {
          const auto& row = per_state[s];
          const std::string spath = gpath + "[" + std::to_string(s) + "]";
          if (!row.is_array() || row.size() != actions.size()) {
            shape_error(spath, actions.size());
            break;
          }
          for (std::size_t a = 0; a < actions.size(); ++a) {
            if (!row[a].is_number()) {
              violations.push_back({spath + "[" + std::to_string(a) + "]", "must be a number"});
              break;
            }
            const double value = row[a].get<double>();
            if (!std::isfinite(value)) {
              violations.push_back({spath + "[" + std::to_string(a) + "]", "must be finite"});
              break;
            }
            values.push_back(value);
          }
          if (!violations.empty()) break;
        }
      }
    }
  }
  if (!violations.empty()) throw SchemaError(std::move(violations));
  return TabularQ(std::move(goals), std::move(states), std::move(actions), std::move(values));
}

nlohmann::json TabularQ::to_json() const {
  nlohmann::json q = nlohmann::json::array();
  for (std::size_t g = 0; g < goals_.size(); ++g) {
    nlohmann::json per_state = nlohmann::json::array();
    for (std::size_t s = 0; s < states_.size(); ++s) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t a = 0; a < actions_.size(); ++a) row.push_back(at(g, StateId{s}, ActionId{a}));
      per_state.push_back(std::move(row));
    }
    q.push_back(std::move(per_state));
  }
  return {{"states", states_}, {"actions", actions_}, {"goals", goals_}, {"q", std::move(q)}};
}

double TabularQ::at(std::size_t goal, StateId state, ActionId action) const {
  if (goal >= goals_.size()) throw DomainError("unknown goal " + std::to_string(goal));
  if (state.index >= states_.size()) throw DomainError("unknown state " + std::to_string(state.index));
  if (action.index >= actions_.size()) throw DomainError("unknown action " + std::to_string(action.index));
  return values_[(goal * states_.size() + state.index) * actions_.size() + action.index];
}

StateId TabularQ::require_state(const State& state) const {
  const auto* id = std::get_if<StateId>(&state);
  if (id == nullptr) throw DomainError("tabular Q-model needs a state identifier, got a point");
  if (id->index >= states_.size()) throw DomainError("unknown state " + std::to_string(id->index));
  return *id;
}

ActionId TabularQ::require_action(const Action& action) const {
  const auto* id = std::get_if<ActionId>(&action);
  if (id == nullptr) throw DomainError("tabular Q-model needs an action identifier, got a vector");
  if (id->index >= actions_.size()) throw DomainError("unknown action " + std::to_string(id->index));
  return *id;
}

double TabularQ::q(std::size_t goal, const State& state, const Action& action) const {
  return at(goal, require_state(state), require_action(action));
}

Matrix TabularQ::q_table(const State& state, const ActionSpace& actions) const {
  const StateId s = require_state(state);
  if (actions.is_free_space() || actions.size() != actions_.size()) {
    throw DomainError("action space does not match the Q-table's action list");
  }
  Matrix table(static_cast<Eigen::Index>(goals_.size()), static_cast<Eigen::Index>(actions_.size()));
  for (std::size_t g = 0; g < goals_.size(); ++g) {
    for (std::size_t a = 0; a < actions_.size(); ++a) {
      table(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(a)) = at(g, s, ActionId{a});
    }
  }
  return table;
}

StateId TabularQ::state_id(std::string_view label) const {
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i] == label) return StateId{i};
  }
  throw DomainError("unknown state '" + std::string(label) + "'");
}

ActionId TabularQ::action_id(std::string_view label) const {
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (actions_[i] == label) return ActionId{i};
  }
  throw DomainError("unknown action '" + std::string(label) + "'");
}

// ---------------------------------------------------------------- FreeSpaceQ

FreeSpaceQ::FreeSpaceQ(GoalSet goals) : goals_(std::move(goals)) {
  if (!goals_.is_free_space()) throw std::invalid_argument("FreeSpaceQ needs point goals");
}

const Vector& FreeSpaceQ::require_point(const State& state) const {
  const auto* x = std::get_if<Vector>(&state);
  if (x == nullptr) throw DomainError("free-space Q-model needs a point state, got an identifier");
  if (static_cast<std::size_t>(x->size()) != goals_.dimension()) {
    throw DomainError("state has dimension " + std::to_string(x->size()) + ", expected " +
                      std::to_string(goals_.dimension()));
  }
  return *x;
}

double FreeSpaceQ::q(std::size_t goal, const State& state, const Action& action) const {
  const Vector& x = require_point(state);
  const auto* a = std::get_if<Vector>(&action);
  if (a == nullptr) throw DomainError("free-space Q-model needs an action vector, got an identifier");
  if (a->size() != x.size()) throw DomainError("action dimension does not match state dimension");
  if (goal >= goals_.size()) throw DomainError("unknown goal " + std::to_string(goal));
  return (goals_.matrix().col(static_cast<Eigen::Index>(goal)) - x).dot(*a);
}

Matrix FreeSpaceQ::q_table(const State& state, const ActionSpace& actions) const {
  const Vector& x = require_point(state);
  if (!actions.is_free_space() || actions.dimension() != goals_.dimension()) {
    throw DomainError("action space does not match the goal dimension");
  }
  const Matrix offsets = goals_.matrix().colwise() - x;
  return offsets.transpose() * actions.directions();
}

// ---------------------------------------------------------------- Bellman check

double bellman_residual(const Vector& x, const Vector& goal, const Vector& action) {
  if (x.size() != goal.size() || x.size() != action.size()) {
    throw std::invalid_argument("bellman_residual: dimension mismatch");
  }
  const Vector to_goal = goal - x;
  if (!(to_goal.norm() > 1.0)) throw DomainError("bellman_residual requires |g - x| > 1");

  const double q_here = to_goal.dot(action);
  const Vector next = x + action;
  const Vector remaining = goal - next;
  const double reward = to_goal.dot(action) - remaining.norm();

  // Exact maximizer of (g - x').a' over the unit sphere.
  double value_next = 0.0;
  if (remaining.norm() > 0.0) {
    const Vector best = remaining / remaining.norm();
    value_next = remaining.dot(best);
  }
  return q_here - (reward + value_next);
}

}  // namespace scd
