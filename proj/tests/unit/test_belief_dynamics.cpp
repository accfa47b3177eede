#include "doctest.h"

#include <cmath>

#include "../support/oracles.hpp"
#include "scd/belief_dynamics.hpp"
#include "scd/errors.hpp"

using namespace scd;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

TabularQ mirror_table() { return TabularQ({"g0", "g1"}, {"s"}, {"a0", "a1"}, {1, 0, 0, 1}); }

// Random k-goal table over `states` states and `actions` actions.
TabularQ random_table(std::mt19937_64& g, std::size_t k, std::size_t states, std::size_t actions) {
  std::vector<std::string> goals, state_labels, action_labels;
  for (std::size_t i = 0; i < k; ++i) goals.push_back("g" + std::to_string(i));
  for (std::size_t i = 0; i < states; ++i) state_labels.push_back("s" + std::to_string(i));
  for (std::size_t i = 0; i < actions; ++i) action_labels.push_back("a" + std::to_string(i));
  std::vector<double> values(k * states * actions);
  for (auto& v : values) v = oracle::uniform(g, -2, 2);
  return TabularQ(goals, state_labels, action_labels, values);
}

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("input log-likelihood for the mirrored two-action table") {
  const auto table = mirror_table();
  const auto actions = ActionSpace::tabular(table.actions());
  const auto v = input_loglik({1.0}, table, StateId{0}, actions, ActionId{0});
  // Frozen from an independent script: [1 - log(1 + e), -log(1 + e)].
  CHECK(std::abs(v.values[0] - -0.3132616875182228) < 1e-12);
  CHECK(std::abs(v.values[1] - -1.3132616875182228) < 1e-12);
}

TEST_CASE("zero rationality gives a uniform likelihood") {
  const TabularQ table({"g0", "g1"}, {"s"}, {"a", "b", "c", "d"}, {1, 2, 3, 4, 8, 7, 6, 5});
  const auto actions = ActionSpace::tabular(table.actions());
  const auto v = input_loglik({0.0}, table, StateId{0}, actions, ActionId{2});
  CHECK(std::abs(v.values[0] + std::log(4.0)) < 1e-12);
  CHECK(std::abs(v.values[1] + std::log(4.0)) < 1e-12);
}

TEST_CASE("large rationality saturates toward the goal the input is optimal for") {
  const auto table = mirror_table();
  const auto actions = ActionSpace::tabular(table.actions());
  const auto v = input_loglik({200.0}, table, StateId{0}, actions, ActionId{0});
  CHECK(std::abs(v.values[0]) < 1e-12);
  CHECK(v.values[1] < -150.0);
}

TEST_CASE("input outside the action space is a domain error") {
  const auto table = mirror_table();
  const auto actions = ActionSpace::tabular(table.actions());
  CHECK_THROWS_AS(input_loglik({1.0}, table, StateId{0}, actions, ActionId{2}), DomainError);
}

TEST_CASE("update rules") {
  const auto v = InputLogLik{vec({-0.3133, -1.3133})};
  const auto pure = step(uniform_log_belief(2), v, std::nullopt, Pure{});
  const Vector expected = vec({-0.3133, -1.3133}).array() - log_sum_exp(vec({-0.3133, -1.3133}));
  CHECK(max_abs(pure.values - expected) < 1e-12);
  CHECK(std::abs(log_sum_exp(pure.values)) < 1e-12);

  const auto leaky = step(LogBelief{vec({2, 0})}, InputLogLik{vec({0, 0})}, std::nullopt, Leaky{0.5});
  const Vector decayed = vec({1, 0}).array() - log_sum_exp(vec({1, 0}));
  CHECK(max_abs(leaky.values - decayed) < 1e-12);

  const auto raw = step(LogBelief{vec({2, 0})}, InputLogLik{vec({1, 3})}, InputLogLik{vec({0, 1})},
                        LeakyDerivative{0.5, 2.0}, Renormalize::no);
  // 0.5 * (2, 0) + (1, 3) + 2 * ((1, 3) - (0, 1)) = (4, 7)
  CHECK(max_abs(raw.values - vec({4, 7})) < 1e-12);
  const auto first = step(LogBelief{vec({2, 0})}, InputLogLik{vec({1, 3})}, std::nullopt, LeakyDerivative{0.5, 2.0},
                          Renormalize::no);
  CHECK(max_abs(first.values - vec({2, 3})) < 1e-12);

  CHECK_THROWS_AS(step(uniform_log_belief(3), v, std::nullopt, Pure{}), std::invalid_argument);
}

TEST_CASE("belief of a log belief") {
  CHECK(max_abs(belief(LogBelief{vec({0, 0})}) - vec({0.5, 0.5})) < 1e-15);
  CHECK(max_abs(belief(LogBelief{vec({std::log(3.0), 0})}) - vec({0.75, 0.25})) < 1e-15);
  for (double c : {-700.0, -3.0, 0.0, 12.0, 700.0}) {
    CHECK(max_abs(belief(LogBelief{vec({c, c, c})}) - Vector::Constant(3, 1.0 / 3)) < 1e-15);
  }
  CHECK(dominant_goal(vec({0.5, 0.5})) == 0);
  CHECK(dominant_goal(vec({0.2, 0.4, 0.4})) == 1);
}

TEST_CASE("variant text round trip") {
  CHECK(std::holds_alternative<Pure>(parse_variant("pure")));
  CHECK(parse_variant("leaky:0.9") == DynamicsVariant{Leaky{0.9}});
  CHECK(parse_variant("leakyd:0.5:0.25") == DynamicsVariant{LeakyDerivative{0.5, 0.25}});
  CHECK(to_string(Leaky{0.9}) == "leaky:0.9");
  CHECK(to_string(LeakyDerivative{0.5, 0.25}) == "leakyd:0.5:0.25");
  for (const char* bad : {"", "leaky", "leaky:", "leaky:2", "leaky:-0.1", "leakyd:0.5", "leakyd:0.5:-1",
                          "leaky:abc", "pure:1", "integrator"}) {
    CHECK_THROWS_AS(parse_variant(bad), std::invalid_argument);
  }
}

TEST_CASE("direct Bayes oracle edge cases") {
  const auto table = mirror_table();
  const auto actions = ActionSpace::tabular(table.actions());
  const Vector prior = vec({0.5, 0.5});
  const Vector none = oracle_direct_bayes({1.0}, table, {}, {}, actions, prior);
  CHECK(max_abs(none - prior) < 1e-15);

  const std::vector<State> states{StateId{0}};
  const std::vector<ActionId> inputs{ActionId{0}};
  const Vector one = oracle_direct_bayes({1.0}, table, states, inputs, actions, prior);
  const auto v = input_loglik({1.0}, table, StateId{0}, actions, ActionId{0});
  const Vector stepped = belief(step(uniform_log_belief(2), v, std::nullopt, Pure{}));
  CHECK(max_abs(one - stepped) < 1e-12);
}

TEST_CASE("iterated pure steps reproduce direct Bayes") {
  auto g = oracle::rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto table = random_table(g, 3, 5, 4);
    const auto actions = ActionSpace::tabular(table.actions());
    const double beta = oracle::uniform(g, 0, 3);
    std::vector<State> states;
    std::vector<ActionId> inputs;
    std::vector<Matrix> tables;
    std::vector<int> raw_inputs;
    LogBelief l = uniform_log_belief(3);
    for (int t = 0; t < 50; ++t) {
      const auto s = StateId{std::uniform_int_distribution<std::size_t>(0, 4)(g)};
      const auto a = ActionId{std::uniform_int_distribution<std::size_t>(0, 3)(g)};
      states.push_back(s);
      inputs.push_back(a);
      tables.push_back(table.q_table(s, actions));
      raw_inputs.push_back(static_cast<int>(a.index));
      l = step(l, input_loglik({beta}, table, s, actions, a), std::nullopt, Pure{});
    }
    const Vector prior = Vector::Constant(3, 1.0 / 3);
    const Vector direct = oracle_direct_bayes({beta}, table, states, inputs, actions, prior);
    const Vector independent = oracle::bayes_posterior(tables, raw_inputs, beta, prior);
    CHECK(max_abs(belief(l) - direct) < 1e-9);
    CHECK(max_abs(direct - independent) < 1e-12);
  }
}

TEST_CASE("renormalization does not change the belief trajectory") {
  auto g = oracle::rng(99);
  const std::vector<DynamicsVariant> variants{Pure{}, Leaky{0.8}, LeakyDerivative{0.7, 0.4}};
  for (const auto& variant : variants) {
    for (int trial = 0; trial < 50; ++trial) {
      LogBelief normalized = uniform_log_belief(4);
      LogBelief raw = normalized;
      std::optional<InputLogLik> previous;
      for (int t = 0; t < 40; ++t) {
        const InputLogLik v{oracle::uniform_vector(g, 4, -3, 0)};
        normalized = step(normalized, v, previous, variant, Renormalize::yes);
        raw = step(raw, v, previous, variant, Renormalize::no);
        previous = v;
        CHECK(max_abs(belief(normalized) - belief(raw)) < 1e-9);
      }
    }
  }
}

TEST_CASE("zero rationality keeps the belief constant under pure dynamics") {
  auto g = oracle::rng(7);
  const auto table = random_table(g, 3, 2, 5);
  const auto actions = ActionSpace::tabular(table.actions());
  const Vector prior = vec({0.2, 0.3, 0.5});
  LogBelief l = log_belief_from(prior);
  for (int t = 0; t < 30; ++t) {
    const auto a = ActionId{static_cast<std::size_t>(t % 5)};
    l = step(l, input_loglik({0.0}, table, StateId{static_cast<std::size_t>(t % 2)}, actions, a), std::nullopt,
             Pure{});
    CHECK(max_abs(belief(l) - prior) < 1e-12);
  }
}

// Under a constant input the leaky recursion is a contraction with factor k,
// so successive belief changes shrink at least geometrically. Checked for two
// goals from a uniform start, where the softmax is monotone along the path.
TEST_CASE("leaky dynamics converge geometrically under constant input") {
  auto g = oracle::rng(31);
  for (double k : {0.0, 0.3, 0.5, 0.9, 0.99}) {
    for (int trial = 0; trial < 50; ++trial) {
      const InputLogLik v{oracle::uniform_vector(g, 2, -4, 0)};
      LogBelief l = uniform_log_belief(2);
      Vector previous_p = belief(l);
      double previous_delta = -1;
      for (int t = 0; t < 60; ++t) {
        l = step(l, v, std::nullopt, Leaky{k});
        const Vector p = belief(l);
        const double delta = max_abs(p - previous_p);
        if (previous_delta > 1e-13) CHECK(delta <= (k + 1e-9) * previous_delta + 1e-15);
        previous_delta = delta;
        previous_p = p;
      }
    }
  }
}

// With more goals the probability deltas need not shrink by k every step, but
// the log odds between any two goals always do.
TEST_CASE("leaky dynamics contract log odds for any goal count") {
  auto g = oracle::rng(37);
  for (Eigen::Index goals : {3, 4, 6}) {
    for (double k : {0.3, 0.9}) {
      const InputLogLik v{oracle::uniform_vector(g, goals, -4, 0)};
      LogBelief l = uniform_log_belief(static_cast<std::size_t>(goals));
      Vector previous = l.values.array() - l.values[0];
      double previous_delta = -1;
      for (int t = 0; t < 80; ++t) {
        l = step(l, v, std::nullopt, Leaky{k});
        const Vector odds = l.values.array() - l.values[0];
        const double delta = max_abs(odds - previous);
        if (previous_delta > 1e-12) CHECK(delta <= (k + 1e-9) * previous_delta + 1e-12);
        previous_delta = delta;
        previous = odds;
      }
    }
  }
}
