#include "scd/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace scd {

using nlohmann::json;

namespace {

// Collects violations while reading so one pass reports everything wrong.
class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {}

  std::vector<Violation>& violations() { return violations_; }
  void fail(std::string field, std::string message) { violations_.push_back({std::move(field), std::move(message)}); }

  bool has(const char* key) const { return doc_.is_object() && doc_.contains(key); }
  const json& at(const char* key) const { return doc_.at(key); }

  std::optional<double> number(const char* key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "missing required field");
      return fallback;
    }
    const auto& v = at(key);
    if (!v.is_number()) {
      fail(key, "must be a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::size_t> count(const char* key, std::optional<std::size_t> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "missing required field");
      return fallback;
    }
    const auto& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      fail(key, "must be a nonnegative integer");
      return std::nullopt;
    }
    return static_cast<std::size_t>(v.get<long long>());
  }

  std::optional<std::string> text(const char* key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "missing required field");
      return fallback;
    }
    const auto& v = at(key);
    if (!v.is_string()) {
      fail(key, "must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

 private:
  const json& doc_;
  std::vector<Violation> violations_;
};

std::optional<Vector> read_vector(const json& v, const std::string& field, std::vector<Violation>& out) {
  if (!v.is_array() || v.empty()) {
    out.push_back({field, "must be a nonempty array of numbers"});
    return std::nullopt;
  }
  Vector result(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      out.push_back({field, "must be a nonempty array of numbers"});
      return std::nullopt;
    }
    result[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return result;
}

std::optional<std::size_t> read_label_index(const json& v, const std::vector<std::string>& labels,
                                            const std::string& field, std::vector<Violation>& out) {
  if (v.is_number_integer()) {
    const auto i = v.get<long long>();
    if (i >= 0 && static_cast<std::size_t>(i) < labels.size()) return static_cast<std::size_t>(i);
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == s) return i;
    }
  }
  out.push_back({field, "does not name a known entry"});
  return std::nullopt;
}

std::optional<UserPolicy> read_policy(const json& p, const Scenario& s, std::vector<Violation>& out) {
  if (!p.is_object() || !p.contains("type") || !p.at("type").is_string()) {
    out.push_back({"policy.type", "policy must be an object with a string type"});
    return std::nullopt;
  }
  const auto type = p.at("type").get<std::string>();
  const auto& goal_labels = s.goals.labels();
  const auto goal_field = [&](const char* key) -> std::optional<std::size_t> {
    const std::string field = std::string("policy.") + key;
    if (!p.contains(key)) {
      out.push_back({field, "missing required field"});
      return std::nullopt;
    }
    return read_label_index(p.at(key), goal_labels, field, out);
  };

  if (type == "interactive") return Interactive{};
  if (type == "constant_toward_goal") {
    const auto goal = goal_field("goal");
    if (!goal) return std::nullopt;
    return ConstantTowardGoal{*goal};
  }
  if (type == "switch_goal") {
    const auto from = goal_field("from");
    const auto to = goal_field("to");
    std::optional<std::size_t> t_switch;
    if (!p.contains("t_switch") || !p.at("t_switch").is_number_integer() || p.at("t_switch").get<long long>() < 0) {
      out.push_back({"policy.t_switch", "must be a nonnegative integer"});
    } else {
      t_switch = static_cast<std::size_t>(p.at("t_switch").get<long long>());
    }
    if (!from || !to || !t_switch) return std::nullopt;
    return SwitchGoal{*from, *to, *t_switch};
  }
  if (type == "stop_at_point") {
    if (!p.contains("target")) {
      out.push_back({"policy.target", "missing required field"});
      return std::nullopt;
    }
    auto target = read_vector(p.at("target"), "policy.target", out);
    if (!target) return std::nullopt;
    return StopAtPoint{std::move(*target)};
  }
  if (type == "scripted") {
    if (!p.contains("inputs") || !p.at("inputs").is_array()) {
      out.push_back({"policy.inputs", "must be an array"});
      return std::nullopt;
    }
    Scripted script;
    const auto& inputs = p.at("inputs");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const std::string field = "policy.inputs[" + std::to_string(i) + "]";
      if (s.mode == Mode::free_space) {
        auto u = read_vector(inputs[i], field, out);
        if (u) script.inputs.emplace_back(std::move(*u));
      } else if (s.qtable) {
        auto id = read_label_index(inputs[i], s.qtable->actions(), field, out);
        if (id) script.inputs.emplace_back(ActionId{*id});
      }
    }
    return script;
  }
  out.push_back({"policy.type", "unknown policy type '" + type + "'"});
  return std::nullopt;
}

std::string format_number(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

}  // namespace

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string(), std::string("malformed JSON: ") + e.what());
  }
}

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw SchemaError("", "scenario must be a JSON object");
  Reader r(doc);
  auto& out = r.violations();
  Scenario s;

  if (const auto version = r.count("schema_version"); version && *version != kSchemaVersion) {
    r.fail("schema_version", "unsupported version " + std::to_string(*version));
  }

  const auto mode = r.text("mode");
  if (mode && *mode != "free_space" && *mode != "tabular") r.fail("mode", "must be free_space or tabular");
  s.mode = (mode && *mode == "tabular") ? Mode::tabular : Mode::free_space;
  const bool mode_known = mode && (*mode == "free_space" || *mode == "tabular");

  if (!r.has("goals")) {
    r.fail("goals", "missing required field");
  } else if (!r.at("goals").is_array() || r.at("goals").empty()) {
    r.fail("goals", "must be a nonempty array");
  } else if (mode_known) {
    const auto& goals = r.at("goals");
    if (s.mode == Mode::free_space) {
      std::vector<Vector> points;
      for (std::size_t i = 0; i < goals.size(); ++i) {
        if (auto g = read_vector(goals[i], "goals[" + std::to_string(i) + "]", out)) points.push_back(std::move(*g));
      }
      if (points.size() == goals.size()) {
        try {
          s.goals = GoalSet::points(points);
        } catch (const std::invalid_argument& e) {
          r.fail("goals", e.what());
        }
      }
    } else {
      std::vector<std::string> labels;
      for (const auto& g : goals) {
        if (g.is_string()) {
          labels.push_back(g.get<std::string>());
        } else if (g.is_number_integer()) {
          labels.push_back(std::to_string(g.get<long long>()));
        } else {
          r.fail("goals", "tabular goals must be labels");
          labels.clear();
          break;
        }
      }
      if (!labels.empty()) s.goals = GoalSet::labels(std::move(labels));
    }
  }

  if (auto beta = r.number("beta", 1.0)) s.beta = *beta;
  if (auto dynamics = r.text("dynamics", std::string("pure"))) {
    try {
      s.variant = parse_variant(*dynamics);
    } catch (const std::invalid_argument& e) {
      r.fail("dynamics", e.what());
    }
  }
  if (r.has("prior")) s.prior = read_vector(r.at("prior"), "prior", out);

  if (auto m = r.count("direction_samples", 64)) s.direction_samples = *m;
  if (auto step = r.number("step_size", 1.0)) s.step_size = *step;
  if (auto selection = r.text("action_selection", std::string("closed_form"))) {
    if (*selection == "closed_form") {
      s.selection = SelectionMethod::closed_form;
    } else if (*selection == "sampled") {
      s.selection = SelectionMethod::sampled;
    } else {
      r.fail("action_selection", "must be closed_form or sampled");
    }
  }
  if (auto horizon = r.count("horizon", 100)) s.horizon = *horizon;
  if (auto seed = r.count("seed", 0)) s.seed = *seed;
  if (auto patience = r.count("stop_patience", 5)) s.stop_patience = *patience;
  if (r.has("tolerances")) {
    const auto& tol = r.at("tolerances");
    if (!tol.is_object()) {
      r.fail("tolerances", "must be an object");
    } else {
      Reader tr(tol);
      if (auto tie = tr.number("tie", kDefaultTieTolerance)) s.tol.tie = *tie;
      if (auto hull = tr.number("hull", kDefaultHullTolerance)) s.tol.hull = *hull;
      for (auto& v : tr.violations()) r.fail("tolerances." + v.field, v.message);
    }
  }

  if (s.mode == Mode::tabular && mode_known) {
    if (!r.has("qtable")) {
      r.fail("qtable", "tabular mode needs a Q-table");
    } else {
      try {
        const auto& q = r.at("qtable");
        const json table = q.is_string() ? load_json_file(base_dir / q.get<std::string>()) : q;
        s.qtable = std::make_shared<const TabularQ>(TabularQ::from_json(table));
      } catch (const SchemaError& e) {
        for (const auto& v : e.violations()) r.fail("qtable." + v.field, v.message);
      }
    }
    if (s.qtable) {
      const auto& states = s.qtable->states();
      const auto actions = s.qtable->actions().size();
      if (!r.has("transitions")) {
        s.transitions.assign(states.size(), {});
        for (std::size_t st = 0; st < states.size(); ++st) s.transitions[st].assign(actions, st);
      } else if (!r.at("transitions").is_array()) {
        r.fail("transitions", "must be an array of per-state rows");
      } else {
        const auto& rows = r.at("transitions");
        for (std::size_t st = 0; st < rows.size(); ++st) {
          std::vector<std::size_t> row;
          const std::string field = "transitions[" + std::to_string(st) + "]";
          if (!rows[st].is_array()) {
            r.fail(field, "must be an array");
          } else {
            for (std::size_t a = 0; a < rows[st].size(); ++a) {
              auto next = read_label_index(rows[st][a], states, field + "[" + std::to_string(a) + "]", out);
              row.push_back(next.value_or(states.size()));
            }
          }
          s.transitions.push_back(std::move(row));
        }
      }
    }
  }

  if (!r.has("initial_state")) {
    r.fail("initial_state", "missing required field");
  } else if (mode_known) {
    const auto& x0 = r.at("initial_state");
    if (s.mode == Mode::free_space) {
      if (auto v = read_vector(x0, "initial_state", out)) s.initial_state = std::move(*v);
    } else if (s.qtable) {
      if (auto id = read_label_index(x0, s.qtable->states(), "initial_state", out)) s.initial_state = StateId{*id};
    }
  }

  if (r.has("policy") && mode_known) {
    if (auto policy = read_policy(r.at("policy"), s, out)) s.policy = std::move(*policy);
  }

  if (out.empty()) {
    for (auto& v : validate(s)) out.push_back(std::move(v));
  }
  if (!out.empty()) throw SchemaError(std::move(out));
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(load_json_file(path), path.parent_path());
}

GoalSet goals_from_json(const json& doc) {
  std::vector<Violation> out;
  if (!doc.is_object() || !doc.contains("goals")) throw SchemaError("goals", "missing required field");
  if (doc.contains("schema_version") && doc.at("schema_version") != kSchemaVersion) {
    throw SchemaError("schema_version", "unsupported version");
  }
  const auto& goals = doc.at("goals");
  if (!goals.is_array() || goals.empty()) throw SchemaError("goals", "must be a nonempty array");
  std::vector<Vector> points;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (auto g = read_vector(goals[i], "goals[" + std::to_string(i) + "]", out)) points.push_back(std::move(*g));
  }
  if (!out.empty()) throw SchemaError(std::move(out));
  try {
    return GoalSet::points(points);
  } catch (const std::invalid_argument& e) {
    throw SchemaError("goals", e.what());
  }
}

// ---------------------------------------------------------------- serialization

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json action_to_json(const Action& action, const Scenario& scenario) {
  if (const auto* v = std::get_if<Vector>(&action)) return vector_to_json(*v);
  const auto id = std::get<ActionId>(action);
  if (scenario.qtable) return scenario.qtable->actions().at(id.index);
  return id.index;
}

json state_to_json(const State& state, const Scenario& scenario) {
  if (const auto* v = std::get_if<Vector>(&state)) return vector_to_json(*v);
  const auto id = std::get<StateId>(state);
  if (scenario.qtable) return scenario.qtable->states().at(id.index);
  return id.index;
}

namespace {

json policy_to_json(const UserPolicy& policy, const Scenario& s) {
  return std::visit(
      [&](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantTowardGoal>) {
          return {{"type", "constant_toward_goal"}, {"goal", p.goal}};
        } else if constexpr (std::is_same_v<P, SwitchGoal>) {
          return {{"type", "switch_goal"}, {"from", p.from}, {"to", p.to}, {"t_switch", p.t_switch}};
        } else if constexpr (std::is_same_v<P, Scripted>) {
          json inputs = json::array();
          for (const auto& u : p.inputs) inputs.push_back(action_to_json(u, s));
          return {{"type", "scripted"}, {"inputs", std::move(inputs)}};
        } else if constexpr (std::is_same_v<P, StopAtPoint>) {
          return {{"type", "stop_at_point"}, {"target", vector_to_json(p.target)}};
        } else {
          return {{"type", "interactive"}};
        }
      },
      policy);
}

}  // namespace

json to_json(const Scenario& s) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["mode"] = s.mode == Mode::free_space ? "free_space" : "tabular";
  if (s.mode == Mode::free_space) {
    json goals = json::array();
    for (std::size_t i = 0; i < s.goals.size(); ++i) goals.push_back(vector_to_json(s.goals.point(i)));
    doc["goals"] = std::move(goals);
    doc["direction_samples"] = s.direction_samples;
    doc["step_size"] = s.step_size;
    doc["action_selection"] = s.selection == SelectionMethod::closed_form ? "closed_form" : "sampled";
  } else {
    doc["goals"] = s.goals.labels();
    doc["qtable"] = s.qtable->to_json();
    json rows = json::array();
    for (const auto& row : s.transitions) {
      json labels = json::array();
      for (const auto next : row) labels.push_back(s.qtable->states().at(next));
      rows.push_back(std::move(labels));
    }
    doc["transitions"] = std::move(rows);
  }
  doc["initial_state"] = state_to_json(s.initial_state, s);
  doc["beta"] = s.beta;
  doc["dynamics"] = to_string(s.variant);
  if (s.prior) doc["prior"] = vector_to_json(*s.prior);
  doc["policy"] = policy_to_json(s.policy, s);
  doc["horizon"] = s.horizon;
  doc["seed"] = s.seed;
  doc["stop_patience"] = s.stop_patience;
  doc["tolerances"] = {{"tie", s.tol.tie}, {"hull", s.tol.hull}};
  return doc;
}

json to_json(const StepRecord& r, const Scenario& s) {
  json doc;
  doc["t"] = r.t;
  doc["x"] = state_to_json(r.x, s);
  doc["u"] = action_to_json(r.u, s);
  doc["v"] = vector_to_json(r.v.values);
  doc["l"] = vector_to_json(r.l.values);
  doc["belief"] = vector_to_json(r.belief);
  doc["a"] = action_to_json(r.a, s);
  doc["set_point"] = r.set_point ? vector_to_json(*r.set_point) : json(nullptr);
  doc["phase"] = r.phase ? json(std::string(to_string(*r.phase))) : json(nullptr);
  doc["value"] = r.value;
  return doc;
}

json to_json(const Metrics& m) {
  const auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  return {{"flip_lag", opt(m.flip_lag)},
          {"steps_to_stop", opt(m.steps_to_stop)},
          {"final_distance", opt(m.final_distance)},
          {"effort_count", m.effort_count},
          {"effort_magnitude", m.effort_magnitude},
          {"min_log_belief", m.min_log_belief},
          {"max_log_belief", m.max_log_belief}};
}

json to_json(const Trajectory& tr) {
  const auto& s = tr.scenario;
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["scenario"] = to_json(s);
  doc["termination"] = std::string(to_string(tr.termination));
  doc["initial"] = {{"x", state_to_json(s.initial_state, s)},
                    {"l", vector_to_json(tr.initial_log_belief.values)},
                    {"belief", vector_to_json(belief(tr.initial_log_belief))}};
  json records = json::array();
  for (const auto& r : tr.records) records.push_back(to_json(r, s));
  doc["records"] = std::move(records);
  doc["final_state"] = state_to_json(tr.final_state, s);
  json events = json::array();
  for (const auto& e : tr.events) events.push_back({{"t", e.t}, {"entered", std::string(to_string(e.entered))}});
  doc["events"] = std::move(events);
  doc["metrics"] = to_json(compute_metrics(tr));
  return doc;
}

std::string to_csv(const Trajectory& tr) {
  const auto& s = tr.scenario;
  const bool free_space = s.mode == Mode::free_space;
  const auto n = static_cast<std::size_t>(s.goals.dimension());
  const std::size_t k = s.goals.size();

  std::ostringstream out;
  std::vector<std::string> header{"t"};
  const auto columns = [&](const std::string& name, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) header.push_back(name + "_" + std::to_string(i));
  };
  if (free_space) {
    columns("x", n);
    columns("u", n);
  } else {
    header.push_back("x");
    header.push_back("u");
  }
  columns("v", k);
  columns("l", k);
  columns("belief", k);
  if (free_space) {
    columns("a", n);
    columns("set_point", n);
    header.push_back("phase");
  } else {
    header.push_back("a");
  }
  header.push_back("value");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";

  const auto write_vector = [&](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << "," << format_number(v[i]);
  };
  for (const auto& r : tr.records) {
    out << r.t;
    if (free_space) {
      write_vector(std::get<Vector>(r.x));
      write_vector(std::get<Vector>(r.u));
    } else {
      out << "," << state_to_json(r.x, s).get<std::string>();
      out << "," << action_to_json(r.u, s).get<std::string>();
    }
    write_vector(r.v.values);
    write_vector(r.l.values);
    write_vector(r.belief);
    if (free_space) {
      write_vector(std::get<Vector>(r.a));
      write_vector(*r.set_point);
      out << "," << to_string(*r.phase);
    } else {
      out << "," << action_to_json(r.a, s).get<std::string>();
    }
    out << "," << format_number(r.value) << "\n";
  }
  return out.str();
}

}  // namespace scd
