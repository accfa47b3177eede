#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scd/sim_engine.hpp"

namespace scd {

/// Line-delimited JSON session protocol, independent of the transport.
///
/// Every message is an envelope {"type", "session", "seq", "payload"}.
/// Client types: create, input, set_variant, reset, close.
/// Server types: created, state, error, close.
///
/// Replies carry the seq of the request they answer, so "state" seq values
/// mirror "input" seq values one to one. Client seq must strictly increase
/// within a session; a create starts a fresh sequence.
class SessionHost {
 public:
  // One reply per request line, in order.
  nlohmann::json handle(std::string_view line);
  nlohmann::json handle(const nlohmann::json& message);

  std::size_t session_count() const { return sessions_.size(); }
  const Simulation* find(const std::string& id) const;

 private:
  struct Session {
    std::unique_ptr<Simulation> sim;
    std::int64_t last_seq = 0;
  };

  std::map<std::string, Session> sessions_;
};

// The "state" payload for the simulation's current step. `record` is the step
// just taken, absent at step 0.
nlohmann::json state_payload(const Simulation& sim, const StepRecord* record = nullptr);

nlohmann::json error_message(std::string_view code, std::string_view message,
                             const nlohmann::json& session = nullptr,
                             const nlohmann::json& seq = nullptr);

}  // namespace scd
