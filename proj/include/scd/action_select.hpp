#pragma once

#include <vector>

#include "scd/belief_dynamics.hpp"
#include "scd/core_model.hpp"

namespace scd {

inline constexpr double kDefaultTieTolerance = 1e-9;

struct SelectionResult {
  ActionId action;
  double value = 0.0;            // exp(l) . Q-vector of the chosen action
  std::vector<ActionId> tied;    // every action within tolerance of the maximum
};

/// QMDP assistance output: argmax over actions of sum_g exp(l_g) Q_g(x, a).
///
/// Candidates are compared under the normalized belief so the tolerance is
/// independent of any uniform shift of l. Ties go to the zero action when the
/// best value is <= tol, otherwise to the lowest index among tied actions that
/// no other tied action dominates.
SelectionResult qmdp_action(const LogBelief& log_belief, const State& state,
                            const ActionSpace& actions, const QModel& model,
                            double tol = kDefaultTieTolerance);

// Columns of q_vectors are per-action QVectors. Returns the undominated columns
// in index order; duplicates of a frontier vector are all kept.
std::vector<ActionId> pareto_frontier(const Matrix& q_vectors);
std::vector<ActionId> pareto_frontier(const State& state, const ActionSpace& actions,
                                      const QModel& model);

// true if a >= b componentwise with at least one strict component.
bool dominates(const Vector& a, const Vector& b);

/// Free-space argmax in closed form: d = Q exp(l), returned as d/|d|,
/// or the zero vector when |d| <= tol.
Vector closed_form_action(const LogBelief& log_belief, const Vector& x, const GoalSet& goals,
                          double tol = kDefaultTieTolerance);

}  // namespace scd
