#pragma once

#include <optional>
#include <string_view>

#include "scd/core_model.hpp"

namespace scd {

inline constexpr double kDefaultHullTolerance = 1e-6;

// n x k matrix with column i = g_i - x.
Matrix q_matrix(const Vector& x, const GoalSet& goals);

// sum_k p_k g_k. The belief must sum to 1 within 1e-9.
Vector set_point(const Vector& belief, const GoalSet& goals);

struct SimplexSolverOptions {
  int max_iterations = 10'000;
  double convergence = 1e-12;
};

struct SimplexFit {
  Vector weights;        // on the probability simplex
  double residual = 0;   // |A w - b|^2
  int iterations = 0;
};

/// min_w |A w - b|^2 subject to w >= 0, sum(w) = 1, by projected gradient
/// descent with step 1/L. Starts from the uniform vector; deterministic.
/// Every 25 iterations an active-set pass jumps to the exact minimizer of the
/// current face when it can, and is accepted only if it is a fixed point of
/// the projected step. Throws SolverError when the iteration cap is reached first.
SimplexFit simplex_least_squares(const Matrix& a, const Vector& b,
                                 const SimplexSolverOptions& options = {});

// Euclidean projection onto the probability simplex.
Vector project_to_simplex(const Vector& v);

struct NonnegativeFit {
  Vector weights;       // >= 0
  double residual = 0;  // |A w - b|
};

// Lawson-Hanson active set NNLS.
NonnegativeFit nonnegative_least_squares(const Matrix& a, const Vector& b);

struct HullResult {
  bool member = false;
  Vector weights;
  double residual = 0;  // squared distance from x to the hull
  Vector projection;    // G . weights
};

HullResult hull_query(const Vector& x, const GoalSet& goals, double tol = kDefaultHullTolerance);

// A belief p with Q(x) p = 0 when x lies in the hull (within tol), else nullopt.
std::optional<Vector> equilibrium_belief(const Vector& x, const GoalSet& goals,
                                         double tol = kDefaultHullTolerance);

enum class Phase { outside_hull, inside_hull };

Phase phase(const Vector& x, const GoalSet& goals, double tol = kDefaultHullTolerance);
std::string_view to_string(Phase phase);

}  // namespace scd
