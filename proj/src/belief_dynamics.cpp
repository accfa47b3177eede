#include "scd/belief_dynamics.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "scd/errors.hpp"

namespace scd {

namespace {

double parse_number(std::string_view text, std::string_view whole) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("bad number '" + std::string(text) + "' in variant '" +
                                std::string(whole) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

void require_same_length(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length " + std::to_string(b.size()) +
                                " does not match belief length " + std::to_string(a.size()));
  }
}

}  // namespace

DynamicsVariant parse_variant(std::string_view text) {
  const auto parts = split(text, ':');
  DynamicsVariant variant;
  if (parts[0] == "pure" && parts.size() == 1) {
    variant = Pure{};
  } else if (parts[0] == "leaky" && parts.size() == 2) {
    variant = Leaky{parse_number(parts[1], text)};
  } else if (parts[0] == "leakyd" && parts.size() == 3) {
    variant = LeakyDerivative{parse_number(parts[1], text), parse_number(parts[2], text)};
  } else {
    throw std::invalid_argument("unknown dynamics variant '" + std::string(text) +
                                "' (expected pure, leaky:K or leakyd:K:KD)");
  }
  validate_variant(variant);
  return variant;
}

std::string to_string(const DynamicsVariant& variant) {
  // Shortest text that parses back to the same double.
  const auto number = [](double v) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, v);
    return std::string(buffer, result.ptr);
  };
  if (std::holds_alternative<Pure>(variant)) return "pure";
  if (const auto* leaky = std::get_if<Leaky>(&variant)) return "leaky:" + number(leaky->k);
  const auto& ld = std::get<LeakyDerivative>(variant);
  return "leakyd:" + number(ld.k) + ":" + number(ld.kd);
}

void validate_variant(const DynamicsVariant& variant) {
  const auto check_k = [](double k) {
    if (!(k >= 0.0 && k <= 1.0)) throw std::invalid_argument("leak factor k must lie in [0, 1]");
  };
  if (const auto* leaky = std::get_if<Leaky>(&variant)) {
    check_k(leaky->k);
  } else if (const auto* ld = std::get_if<LeakyDerivative>(&variant)) {
    check_k(ld->k);
    if (!(ld->kd >= 0.0 && std::isfinite(ld->kd))) {
      throw std::invalid_argument("derivative gain kd must be finite and >= 0");
    }
  }
}

double log_sum_exp(const Vector& values) {
  if (values.size() == 0) throw std::invalid_argument("log_sum_exp of an empty vector");
  const double top = values.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((values.array() - top).exp().sum());
}

LogBelief uniform_log_belief(std::size_t goals) {
  if (goals == 0) throw std::invalid_argument("belief needs at least one goal");
  return {Vector::Constant(static_cast<Eigen::Index>(goals), -std::log(static_cast<double>(goals)))};
}

LogBelief log_belief_from(const Vector& probabilities) {
  if (probabilities.size() == 0) throw std::invalid_argument("belief needs at least one goal");
  if (!((probabilities.array() > 0.0).all() && probabilities.allFinite())) {
    throw std::invalid_argument("prior probabilities must be finite and strictly positive");
  }
  LogBelief out{probabilities.array().log().matrix()};
  out.values.array() -= log_sum_exp(out.values);
  return out;
}

Vector belief(const LogBelief& log_belief) {
  const Vector& l = log_belief.values;
  if (!l.allFinite()) throw std::invalid_argument("log belief has non-finite entries");
  const Eigen::ArrayXd shifted = (l.array() - l.maxCoeff()).exp();
  return (shifted / shifted.sum()).matrix();
}

std::size_t dominant_goal(const Vector& probabilities) {
  const double top = probabilities.maxCoeff();
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] >= top - 1e-12) return static_cast<std::size_t>(i);
  }
  return 0;
}

Matrix input_loglik_all(const LikelihoodParams& params, const QModel& model, const State& state,
                        const ActionSpace& actions) {
  if (!(params.beta >= 0.0) || !std::isfinite(params.beta)) {
    throw std::invalid_argument("rationality beta must be finite and >= 0");
  }
  Matrix scaled = params.beta * model.q_table(state, actions);
  for (Eigen::Index g = 0; g < scaled.rows(); ++g) {
    const double top = scaled.row(g).maxCoeff();
    const double normalizer = top + std::log((scaled.row(g).array() - top).exp().sum());
    scaled.row(g).array() -= normalizer;
  }
  return scaled;
}

InputLogLik input_loglik(const LikelihoodParams& params, const QModel& model, const State& state,
                         const ActionSpace& actions, ActionId input) {
  if (!actions.contains(input)) {
    throw DomainError("input " + std::to_string(input.index) + " is not in the action space");
  }
  const Matrix all = input_loglik_all(params, model, state, actions);
  return {all.col(static_cast<Eigen::Index>(input.index))};
}

LogBelief step(const LogBelief& log_belief, const InputLogLik& input,
               const std::optional<InputLogLik>& previous_input, const DynamicsVariant& variant,
               Renormalize renormalize) {
  const Vector& l = log_belief.values;
  const Vector& v = input.values;
  require_same_length(l, v, "input log-likelihood");
  if (previous_input) require_same_length(l, previous_input->values, "previous input log-likelihood");

  Vector next;
  if (std::holds_alternative<Pure>(variant)) {
    next = l + v;
  } else if (const auto* leaky = std::get_if<Leaky>(&variant)) {
    next = leaky->k * l + v;
  } else {
    const auto& ld = std::get<LeakyDerivative>(variant);
    const Vector& v_prev = previous_input ? previous_input->values : v;
    next = ld.k * l + v + ld.kd * (v - v_prev);
  }
  if (renormalize == Renormalize::yes) next.array() -= log_sum_exp(next);
  return {std::move(next)};
}

Vector oracle_direct_bayes(const LikelihoodParams& params, const QModel& model,
                           std::span<const State> states, std::span<const ActionId> inputs,
                           const ActionSpace& actions, const Vector& prior) {
  if (states.size() != inputs.size()) {
    throw std::invalid_argument("oracle_direct_bayes: states and inputs differ in length");
  }
  Vector posterior = prior;
  const auto goals = static_cast<Eigen::Index>(model.goal_count());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Action observed = actions.action(inputs[t]);
    for (Eigen::Index g = 0; g < goals; ++g) {
      double partition = 0.0;
      for (std::size_t j = 0; j < actions.size(); ++j) {
        partition += std::exp(params.beta * model.q(static_cast<std::size_t>(g), states[t], actions.action(ActionId{j})));
      }
      const double likelihood = std::exp(params.beta * model.q(static_cast<std::size_t>(g), states[t], observed)) / partition;
      posterior[g] *= likelihood;
    }
    posterior /= posterior.sum();
  }
  return posterior;
}

}  // namespace scd
