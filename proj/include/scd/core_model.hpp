#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace scd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct StateId {
  std::size_t index = 0;
  friend auto operator<=>(const StateId&, const StateId&) = default;
};

struct ActionId {
  std::size_t index = 0;
  friend auto operator<=>(const ActionId&, const ActionId&) = default;
};

// Tabular states are identifiers into a Q-table; free-space states are points in R^n.
using State = std::variant<StateId, Vector>;
// Tabular actions are identifiers; free-space actions are unit vectors or zero.
using Action = std::variant<ActionId, Vector>;

/// The k goals, in the canonical order that indexes every belief-sized vector.
///
/// Free-space goals are points stored as the columns of an n x k matrix.
/// Tabular goals are labels keyed into Q-tables.
class GoalSet {
 public:
  GoalSet() = default;  // empty; only meaningful as a placeholder

  static GoalSet points(const std::vector<Vector>& goals);
  static GoalSet points(std::initializer_list<Vector> goals) { return points(std::vector<Vector>(goals)); }
  static GoalSet points(Matrix goals_as_columns);
  static GoalSet labels(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  bool is_free_space() const { return free_space_; }
  // Zero for tabular goal sets.
  std::size_t dimension() const { return static_cast<std::size_t>(matrix_.rows()); }

  const Matrix& matrix() const { return matrix_; }
  Vector point(std::size_t goal) const;
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  bool free_space_ = false;
  Matrix matrix_;
  std::vector<std::string> labels_;
};

/// Deterministic unit directions discretizing the free-space action sphere.
/// n = 2 gives M evenly spaced angles from angle 0; n >= 3 is seeded.
std::vector<Vector> direction_samples(std::size_t dimension, std::size_t count,
                                      std::uint64_t seed);

class ActionSpace {
 public:
  static ActionSpace tabular(std::vector<std::string> labels);
  // M sampled unit directions followed by the zero action (index M).
  static ActionSpace free_space(std::size_t dimension, std::size_t samples,
                                std::uint64_t seed);

  bool is_free_space() const { return free_space_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t dimension() const { return static_cast<std::size_t>(directions_.rows()); }

  Action action(ActionId id) const;
  const std::string& label(ActionId id) const;
  std::optional<ActionId> find(std::string_view label) const;
  bool contains(ActionId id) const { return id.index < size(); }

  // Free-space only. Columns are the action vectors, zero action last.
  const Matrix& directions() const { return directions_; }
  std::optional<ActionId> zero_action() const;

  // Maps a free-space request onto the discretized set: zero stays zero,
  // anything else snaps to the sample with the largest cosine.
  ActionId nearest(const Vector& requested) const;

 private:
  ActionSpace() = default;

  bool free_space_ = false;
  Matrix directions_;
  std::vector<std::string> labels_;
};

/// Per-goal action values q(goal, state, action).
class QModel {
 public:
  virtual ~QModel() = default;

  virtual std::size_t goal_count() const = 0;
  virtual double q(std::size_t goal, const State& state, const Action& action) const = 0;

  // k x |A| matrix whose column j is the QVector of action j.
  virtual Matrix q_table(const State& state, const ActionSpace& actions) const;
};

/// Dense lookup table q[goal][state][action].
class TabularQ final : public QModel {
 public:
  TabularQ(std::vector<std::string> goals, std::vector<std::string> states,
           std::vector<std::string> actions, std::vector<double> values);

  // {"states":[...], "actions":[...], "goals":[...], "q":[goal][state][action]}
  static TabularQ from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  std::size_t goal_count() const override { return goals_.size(); }
  double q(std::size_t goal, const State& state, const Action& action) const override;
  Matrix q_table(const State& state, const ActionSpace& actions) const override;

  double at(std::size_t goal, StateId state, ActionId action) const;

  const std::vector<std::string>& goals() const { return goals_; }
  const std::vector<std::string>& states() const { return states_; }
  const std::vector<std::string>& actions() const { return actions_; }

  StateId state_id(std::string_view label) const;
  ActionId action_id(std::string_view label) const;

 private:
  StateId require_state(const State& state) const;
  ActionId require_action(const Action& action) const;

  std::vector<std::string> goals_;
  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  std::vector<double> values_;  // row-major [goal][state][action]
};

/// Closed-form free-space value Q_g(x, a) = (g - x) . a.
class FreeSpaceQ final : public QModel {
 public:
  explicit FreeSpaceQ(GoalSet goals);

  std::size_t goal_count() const override { return goals_.size(); }
  double q(std::size_t goal, const State& state, const Action& action) const override;
  Matrix q_table(const State& state, const ActionSpace& actions) const override;

  const GoalSet& goals() const { return goals_; }

 private:
  const Vector& require_point(const State& state) const;

  GoalSet goals_;
};

Vector q_vector(const QModel& model, const State& state, const Action& action);

// Q(x, a) - [r(x, a) + max_a' Q(x + a, a')] for the free-space value of a single goal,
// with r(x, a) = (g - x).a - |g - x - a| and transition x + a. Requires |g - x| > 1.
double bellman_residual(const Vector& x, const Vector& goal, const Vector& action);

}  // namespace scd
