#include "scd/action_select.hpp"

#include <cmath>
#include <stdexcept>

#include "scd/freespace_analysis.hpp"

namespace scd {

bool dominates(const Vector& a, const Vector& b) {
  return (a.array() >= b.array()).all() && (a.array() > b.array()).any();
}

SelectionResult qmdp_action(const LogBelief& log_belief, const State& state,
                            const ActionSpace& actions, const QModel& model, double tol) {
  if (actions.size() == 0) throw std::invalid_argument("qmdp_action: empty action space");
  if (static_cast<std::size_t>(log_belief.values.size()) != model.goal_count()) {
    throw std::invalid_argument("qmdp_action: belief length does not match goal count");
  }

  const Vector weights = belief(log_belief);
  const Matrix table = model.q_table(state, actions);
  const Vector values = table.transpose() * weights;

  const double best = values.maxCoeff();
  SelectionResult result;
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (values[j] >= best - tol) result.tied.push_back(ActionId{static_cast<std::size_t>(j)});
  }

  const auto zero = actions.zero_action();
  if (zero && best <= tol) {
    result.action = *zero;
  } else {
    // Anything dominating a tied action is itself tied, so filtering within the
    // tied set leaves only globally undominated candidates.
    bool found = false;
    for (const ActionId candidate : result.tied) {
      bool dominated = false;
      for (const ActionId other : result.tied) {
        if (other != candidate &&
            dominates(table.col(static_cast<Eigen::Index>(other.index)),
                      table.col(static_cast<Eigen::Index>(candidate.index)))) {
          dominated = true;
          break;
        }
      }
      if (!dominated) {
        result.action = candidate;
        found = true;
        break;
      }
    }
    if (!found) result.action = result.tied.front();
  }

  const double scale = std::exp(log_sum_exp(log_belief.values));
  result.value = scale * values[static_cast<Eigen::Index>(result.action.index)];
  return result;
}

std::vector<ActionId> pareto_frontier(const Matrix& q_vectors) {
  std::vector<ActionId> frontier;
  for (Eigen::Index i = 0; i < q_vectors.cols(); ++i) {
    bool dominated = false;
    for (Eigen::Index j = 0; j < q_vectors.cols() && !dominated; ++j) {
      dominated = j != i && dominates(q_vectors.col(j), q_vectors.col(i));
    }
    if (!dominated) frontier.push_back(ActionId{static_cast<std::size_t>(i)});
  }
  return frontier;
}

std::vector<ActionId> pareto_frontier(const State& state, const ActionSpace& actions,
                                      const QModel& model) {
  return pareto_frontier(model.q_table(state, actions));
}

Vector closed_form_action(const LogBelief& log_belief, const Vector& x, const GoalSet& goals,
                          double tol) {
  if (static_cast<std::size_t>(log_belief.values.size()) != goals.size()) {
    throw std::invalid_argument("closed_form_action: belief length does not match goal count");
  }
  const Vector direction = q_matrix(x, goals) * belief(log_belief);
  const double norm = direction.norm();
  if (norm <= tol) return Vector::Zero(x.size());
  return direction / norm;
}

}  // namespace scd
