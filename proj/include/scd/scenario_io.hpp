#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "scd/sim_engine.hpp"

namespace scd {

inline constexpr int kSchemaVersion = 1;

/// Scenario documents (schema_version 1):
///
///   schema_version   1 (required)
///   mode             "free_space" | "tabular" (required)
///   goals            free_space: [[x, y, ...], ...]; tabular: ["label", ...] (required)
///   initial_state    free_space: [x, y, ...]; tabular: "state label" (required)
///   beta             >= 0, default 1
///   dynamics         "pure" | "leaky:K" | "leakyd:K:KD", default "pure"
///   prior            [p0, p1, ...] strictly positive, default uniform
///   direction_samples, step_size, action_selection ("closed_form" | "sampled")
///   qtable           tabular: Q-table object or a path relative to the scenario file
///   transitions      tabular: [state][action] -> "state label"; default stays put
///   policy           {"type": "constant_toward_goal" | "switch_goal" | "scripted" |
///                     "stop_at_point" | "interactive", ...}
///   horizon, seed, stop_patience, tolerances {"tie", "hull"}
///
/// Throws SchemaError listing every problem found.
Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const Scenario& scenario);

nlohmann::json load_json_file(const std::filesystem::path& path);

// Goal files for the equilibrium command: {"goals": [[...], ...]}.
GoalSet goals_from_json(const nlohmann::json& doc);

nlohmann::json action_to_json(const Action& action, const Scenario& scenario);
nlohmann::json state_to_json(const State& state, const Scenario& scenario);
nlohmann::json vector_to_json(const Vector& v);

nlohmann::json to_json(const StepRecord& record, const Scenario& scenario);
nlohmann::json to_json(const Metrics& metrics);
nlohmann::json to_json(const Trajectory& trajectory);

// One header row, then one row per step in record field order.
std::string to_csv(const Trajectory& trajectory);

}  // namespace scd
