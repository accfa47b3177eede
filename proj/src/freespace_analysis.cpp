#include "scd/freespace_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "scd/errors.hpp"

namespace scd {

namespace {

void require_dimension(const Vector& x, const GoalSet& goals) {
  if (!goals.is_free_space()) throw std::invalid_argument("free-space analysis needs point goals");
  if (static_cast<std::size_t>(x.size()) != goals.dimension()) {
    throw std::invalid_argument("state has dimension " + std::to_string(x.size()) +
                                ", goals have dimension " + std::to_string(goals.dimension()));
  }
}

constexpr int kFaceSolvePeriod = 25;

using Support = std::vector<bool>;

// Minimizer over the affine hull of the face given by support, from the
// equality-constrained normal equations. Entries may come out negative.
Vector face_minimizer(const Matrix& gram, const Vector& rhs, const Support& support) {
  std::vector<Eigen::Index> index;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    if (support[static_cast<std::size_t>(i)]) index.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(index.size());
  Matrix kkt = Matrix::Zero(m + 1, m + 1);
  Vector target(m + 1);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) kkt(r, c) = 2.0 * gram(index[r], index[c]);
    kkt(r, m) = 1.0;
    kkt(m, r) = 1.0;
    target[r] = 2.0 * rhs[index[r]];
  }
  target[m] = 1.0;
  const Vector solution = kkt.completeOrthogonalDecomposition().solve(target);
  Vector out = Vector::Zero(gram.rows());
  for (Eigen::Index r = 0; r < m; ++r) out[index[r]] = solution[r];
  return out;
}

// Primal active-set method warm-started from a feasible w. Moves toward the
// face minimizer, stopping at the boundary and dropping the blocking
// coordinate when needed; at a face optimum, adds the coordinate whose
// multiplier is most negative. nullopt if it does not settle within its budget.
std::optional<Vector> active_set(const Matrix& gram, const Vector& rhs, Vector w) {
  const Eigen::Index k = w.size();
  Support support(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) support[static_cast<std::size_t>(i)] = w[i] > 0.0;
  const double slack = 64 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, gram.diagonal().maxCoeff() + rhs.cwiseAbs().maxCoeff());

  for (Eigen::Index round = 0; round < 4 * k + 8; ++round) {
    const Vector target = face_minimizer(gram, rhs, support);
    if (!target.allFinite()) return std::nullopt;
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (support[static_cast<std::size_t>(i)] && target[i] < 0.0) {
        const double reach = w[i] / (w[i] - target[i]);
        if (reach < alpha) {
          alpha = reach;
          blocking = i;
        }
      }
    }
    w += alpha * (target - w);
    w = w.cwiseMax(0.0);
    if (blocking >= 0) {
      w[blocking] = 0.0;
      support[static_cast<std::size_t>(blocking)] = false;
      w /= w.sum();
      continue;
    }
    w /= w.sum();

    // Optimal on this face; check the multipliers of the others.
    const Vector gradient = 2.0 * (gram * w - rhs);
    double level = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (support[static_cast<std::size_t>(i)]) {
        level += gradient[i];
        ++count;
      }
    }
    level /= count;
    Eigen::Index entering = -1;
    double worst = -slack;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!support[static_cast<std::size_t>(i)] && gradient[i] - level < worst) {
        worst = gradient[i] - level;
        entering = i;
      }
    }
    if (entering < 0) return w;
    support[static_cast<std::size_t>(entering)] = true;
  }
  return std::nullopt;
}

}  // namespace

Matrix q_matrix(const Vector& x, const GoalSet& goals) {
  require_dimension(x, goals);
  return goals.matrix().colwise() - x;
}

Vector set_point(const Vector& belief, const GoalSet& goals) {
  if (!goals.is_free_space()) throw std::invalid_argument("set_point needs point goals");
  if (static_cast<std::size_t>(belief.size()) != goals.size()) {
    throw std::invalid_argument("set_point: belief length does not match goal count");
  }
  if ((belief.array() < 0.0).any() || std::abs(belief.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("set_point: belief is not a probability vector");
  }
  return goals.matrix() * belief;
}

Vector project_to_simplex(const Vector& v) {
  const Eigen::Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumulative += sorted[static_cast<std::size_t>(i)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) threshold = candidate;
  }
  return (v.array() - threshold).max(0.0).matrix();
}

SimplexFit simplex_least_squares(const Matrix& a, const Vector& b, const SimplexSolverOptions& options) {
  if (a.rows() != b.size()) throw std::invalid_argument("simplex_least_squares: dimension mismatch");
  const Eigen::Index k = a.cols();
  if (k < 1) throw std::invalid_argument("simplex_least_squares: need at least one column");

  SimplexFit fit;
  fit.weights = Vector::Constant(k, 1.0 / static_cast<double>(k));
  const auto objective = [&](const Vector& w) { return (a * w - b).squaredNorm(); };

  if (k == 1) {
    fit.residual = objective(fit.weights);
    return fit;
  }

  const Matrix gram = a.transpose() * a;
  const Vector rhs = a.transpose() * b;
  const double lipschitz = 2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly)
                                     .eigenvalues()
                                     .maxCoeff();
  if (!(lipschitz > 0.0)) {
    // Every column equal to zero: any simplex point is optimal.
    fit.residual = objective(fit.weights);
    return fit;
  }

  const auto step_change = [&](const Vector& w) {
    const Vector gradient = 2.0 * (gram * w - rhs);
    return (project_to_simplex(w - gradient / lipschitz) - w).cwiseAbs().maxCoeff();
  };

  for (int it = 1; it <= options.max_iterations; ++it) {
    const Vector gradient = 2.0 * (gram * fit.weights - rhs);
    Vector next = project_to_simplex(fit.weights - gradient / lipschitz);
    const double change = (next - fit.weights).cwiseAbs().maxCoeff();
    fit.weights = std::move(next);
    fit.iterations = it;
    if (change <= options.convergence) {
      fit.residual = objective(fit.weights);
      return fit;
    }
    if (it % kFaceSolvePeriod == 0) {
      auto candidate = active_set(gram, rhs, fit.weights);
      if (candidate && step_change(*candidate) <= options.convergence) {
        fit.weights = std::move(*candidate);
        fit.residual = objective(fit.weights);
        return fit;
      }
    }
  }
  throw SolverError("simplex least squares did not converge within " +
                    std::to_string(options.max_iterations) + " iterations (objective " +
                    std::to_string(objective(fit.weights)) + ")");
}

NonnegativeFit nonnegative_least_squares(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) throw std::invalid_argument("nonnegative_least_squares: dimension mismatch");
  const Eigen::Index k = a.cols();
  const double eps = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()) * std::max(1.0, b.cwiseAbs().maxCoeff());

  Vector w = Vector::Zero(k);
  std::vector<bool> passive(static_cast<std::size_t>(k), false);

  const auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Matrix sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(idx[c]);
    const Vector z = sub.completeOrthogonalDecomposition().solve(b);
    Vector s = Vector::Zero(k);
    for (std::size_t c = 0; c < idx.size(); ++c) s[idx[c]] = z[static_cast<Eigen::Index>(c)];
    return s;
  };

  const int max_outer = 3 * static_cast<int>(k) + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    const Vector gradient = a.transpose() * (b - a * w);
    Eigen::Index entering = -1;
    double best = eps;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && gradient[j] > best) {
        best = gradient[j];
        entering = j;
      }
    }
    if (entering < 0) break;
    passive[static_cast<std::size_t>(entering)] = true;

    for (int inner = 0; inner <= k; ++inner) {
      const Vector s = solve_passive();
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
          feasible = false;
          const double denom = w[j] - s[j];
          if (denom > 0.0) alpha = std::min(alpha, w[j] / denom);
        }
      }
      if (feasible) {
        w = s;
        break;
      }
      w += alpha * (s - w);
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && w[j] <= eps) {
          passive[static_cast<std::size_t>(j)] = false;
          w[j] = 0.0;
        }
      }
    }
  }
  return {w, (a * w - b).norm()};
}

HullResult hull_query(const Vector& x, const GoalSet& goals, double tol) {
  // Offsets from x rather than raw goal coordinates: a common translation of
  // the goals is invisible on the simplex, and dropping it conditions thin
  // hulls far better.
  const SimplexFit fit = simplex_least_squares(q_matrix(x, goals), Vector::Zero(x.size()));
  HullResult result;
  result.weights = fit.weights;
  result.residual = fit.residual;
  result.projection = goals.matrix() * fit.weights;
  result.member = std::sqrt(fit.residual) <= tol;
  return result;
}

std::optional<Vector> equilibrium_belief(const Vector& x, const GoalSet& goals, double tol) {
  const Matrix offsets = q_matrix(x, goals);
  const SimplexFit fit = simplex_least_squares(offsets, Vector::Zero(x.size()));
  if (std::sqrt(fit.residual) <= tol) return fit.weights;
  return std::nullopt;
}

Phase phase(const Vector& x, const GoalSet& goals, double tol) {
  return hull_query(x, goals, tol).member ? Phase::inside_hull : Phase::outside_hull;
}

std::string_view to_string(Phase phase) {
  return phase == Phase::inside_hull ? "inside_hull" : "outside_hull";
}

}  // namespace scd
