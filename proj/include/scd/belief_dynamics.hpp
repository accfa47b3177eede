#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "scd/core_model.hpp"

namespace scd {

/// The assistance's internal state: log goal probabilities, defined up to a
/// uniform additive constant.
struct LogBelief {
  Vector values;
};

/// Per-goal log-likelihood of one user input, v(g) = log p(u | g).
struct InputLogLik {
  Vector values;
};

struct LikelihoodParams {
  double beta = 1.0;  // Boltzmann rationality, >= 0
};

struct Pure {
  friend bool operator==(const Pure&, const Pure&) = default;
};
struct Leaky {
  double k = 1.0;
  friend bool operator==(const Leaky&, const Leaky&) = default;
};
struct LeakyDerivative {
  double k = 1.0;
  double kd = 0.0;
  friend bool operator==(const LeakyDerivative&, const LeakyDerivative&) = default;
};
using DynamicsVariant = std::variant<Pure, Leaky, LeakyDerivative>;

// "pure", "leaky:K", "leakyd:K:KD". Throws std::invalid_argument.
DynamicsVariant parse_variant(std::string_view text);
std::string to_string(const DynamicsVariant& variant);
void validate_variant(const DynamicsVariant& variant);

enum class Renormalize { yes, no };

double log_sum_exp(const Vector& values);

LogBelief uniform_log_belief(std::size_t goals);
// Prior probabilities must be strictly positive.
LogBelief log_belief_from(const Vector& probabilities);

// softmax(l)
Vector belief(const LogBelief& log_belief);

// Lowest index whose probability is within 1e-12 of the maximum.
std::size_t dominant_goal(const Vector& probabilities);

InputLogLik input_loglik(const LikelihoodParams& params, const QModel& model, const State& state,
                         const ActionSpace& actions, ActionId input);

// k x |A|; column j is the InputLogLik the user would produce with input j.
Matrix input_loglik_all(const LikelihoodParams& params, const QModel& model, const State& state,
                        const ActionSpace& actions);

/// One update of the log belief.
///   Pure:            l + v
///   Leaky:           k l + v
///   LeakyDerivative: k l + v + kd (v - v_prev), with v_prev = v when absent
/// The result is shifted so that logsumexp(l') = 0 unless told otherwise.
LogBelief step(const LogBelief& log_belief, const InputLogLik& input,
               const std::optional<InputLogLik>& previous_input, const DynamicsVariant& variant,
               Renormalize renormalize = Renormalize::yes);

// Posterior by direct multiplication of likelihoods in probability space with
// explicit renormalization after every observation. Test oracle for step().
Vector oracle_direct_bayes(const LikelihoodParams& params, const QModel& model,
                           std::span<const State> states, std::span<const ActionId> inputs,
                           const ActionSpace& actions, const Vector& prior);

}  // namespace scd
