#include "scd/session.hpp"

#include <atomic>

#include "scd/scenario_io.hpp"

namespace scd {

using nlohmann::json;

namespace {

std::atomic<std::uint64_t> next_session_id{1};

json envelope(std::string_view type, const json& session, const json& seq, json payload) {
  return {{"type", type}, {"session", session}, {"seq", seq}, {"payload", std::move(payload)}};
}

// Failures that map straight onto an error code.
struct Reject {
  std::string code;
  std::string message;
};

Action parse_input(const json& payload, const Simulation& sim) {
  if (!payload.is_object() || !payload.contains("action")) throw Reject{"bad_input", "payload.action is required"};
  const auto& a = payload.at("action");
  if (a.is_array()) {
    if (!sim.actions().is_free_space()) throw Reject{"bad_input", "tabular sessions take action identifiers"};
    if (a.size() != sim.actions().dimension()) throw Reject{"bad_input", "action has the wrong dimension"};
    Vector u(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number()) throw Reject{"bad_input", "action entries must be numbers"};
      u[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    }
    if (!u.allFinite()) throw Reject{"bad_input", "action entries must be finite"};
    return u;
  }
  if (a.is_number_integer() && a.get<long long>() >= 0) return ActionId{static_cast<std::size_t>(a.get<long long>())};
  if (a.is_string()) {
    if (auto id = sim.actions().find(a.get<std::string>())) return *id;
    throw Reject{"bad_input", "unknown action '" + a.get<std::string>() + "'"};
  }
  throw Reject{"bad_input", "action must be a vector, an index or a label"};
}

}  // namespace

json error_message(std::string_view code, std::string_view message, const json& session, const json& seq) {
  return envelope("error", session, seq, {{"code", code}, {"message", message}});
}

json state_payload(const Simulation& sim, const StepRecord* record) {
  const auto& s = sim.scenario();
  const View view = sim.view();
  json goals = json::array();
  if (s.mode == Mode::free_space) {
    for (std::size_t i = 0; i < s.goals.size(); ++i) goals.push_back(vector_to_json(s.goals.point(i)));
  } else {
    goals = s.goals.labels();
  }
  json out;
  out["step"] = view.step;
  out["x"] = state_to_json(view.x, s);
  out["l"] = vector_to_json(view.l.values);
  out["belief"] = vector_to_json(view.belief);
  out["set_point"] = view.set_point ? vector_to_json(*view.set_point) : json(nullptr);
  out["assist_action"] = action_to_json(view.assist_action, s);
  out["phase"] = view.phase ? json(std::string(to_string(*view.phase))) : json(nullptr);
  out["value"] = view.value;
  out["goals"] = std::move(goals);
  out["variant"] = to_string(s.variant);
  out["stopped"] = sim.stopped();
  out["record"] = record ? to_json(*record, s) : json(nullptr);
  return out;
}

const Simulation* SessionHost::find(const std::string& id) const {
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second.sim.get();
}

json SessionHost::handle(std::string_view line) {
  json message;
  try {
    message = json::parse(line);
  } catch (const json::parse_error& e) {
    return error_message("malformed", std::string("not JSON: ") + e.what());
  }
  return handle(message);
}

json SessionHost::handle(const json& message) {
  if (!message.is_object() || !message.contains("type") || !message.at("type").is_string()) {
    return error_message("malformed", "message must be an object with a string type");
  }
  const auto type = message.at("type").get<std::string>();
  const json session_field = message.value("session", json(nullptr));
  const json seq_field = message.value("seq", json(nullptr));
  const json payload = message.value("payload", json::object());

  if (type != "create" && type != "input" && type != "set_variant" && type != "reset" && type != "close") {
    return error_message("unknown_type", "unknown message type '" + type + "'", session_field, seq_field);
  }
  if (!seq_field.is_number_integer()) {
    return error_message("malformed", "seq must be an integer", session_field, seq_field);
  }
  const auto seq = seq_field.get<std::int64_t>();

  if (type == "create") {
    try {
      Scenario scenario = scenario_from_json(payload.value("scenario", payload));
      scenario.policy = Interactive{};
      auto sim = std::make_unique<Simulation>(std::move(scenario));
      const std::string id = "s" + std::to_string(next_session_id.fetch_add(1));
      json state = state_payload(*sim);
      sessions_[id] = Session{std::move(sim), seq};
      return envelope("created", id, seq, {{"session", id}, {"state", std::move(state)}});
    } catch (const SchemaError& e) {
      json violations = json::array();
      for (const auto& v : e.violations()) violations.push_back({{"field", v.field}, {"message", v.message}});
      auto reply = error_message("scenario_invalid", e.what(), session_field, seq_field);
      reply["payload"]["violations"] = std::move(violations);
      return reply;
    } catch (const std::exception& e) {
      return error_message("scenario_invalid", e.what(), session_field, seq_field);
    }
  }

  if (!session_field.is_string()) return error_message("malformed", "session must be a string", session_field, seq_field);
  const auto it = sessions_.find(session_field.get<std::string>());
  if (it == sessions_.end()) return error_message("unknown_session", "no such session", session_field, seq_field);
  Session& session = it->second;
  if (seq <= session.last_seq) {
    return error_message("bad_seq", "seq must exceed " + std::to_string(session.last_seq), session_field, seq_field);
  }
  session.last_seq = seq;
  Simulation& sim = *session.sim;

  try {
    if (type == "input") {
      const ActionId id = sim.resolve(parse_input(payload, sim));
      const StepRecord record = sim.advance(id);
      return envelope("state", session_field, seq, state_payload(sim, &record));
    }
    if (type == "set_variant") {
      if (!payload.is_object() || !payload.contains("variant") || !payload.at("variant").is_string()) {
        throw Reject{"bad_variant", "payload.variant must be a string"};
      }
      try {
        sim.set_variant(parse_variant(payload.at("variant").get<std::string>()));
      } catch (const std::exception& e) {
        throw Reject{"bad_variant", e.what()};
      }
      return envelope("state", session_field, seq, state_payload(sim));
    }
    if (type == "reset") {
      sim.reset();
      return envelope("state", session_field, seq, state_payload(sim));
    }
    sessions_.erase(it);
    return envelope("close", session_field, seq, json::object());
  } catch (const Reject& r) {
    return error_message(r.code, r.message, session_field, seq);
  } catch (const DomainError& e) {
    return error_message("bad_input", e.what(), session_field, seq);
  } catch (const SolverError& e) {
    return error_message("solver_failure", e.what(), session_field, seq);
  }
}

}  // namespace scd
