#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "infobot/agent.hpp"
#include "infobot/rng.hpp"
#include "infobot/simulator.hpp"

namespace infobot {

inline constexpr std::size_t kMaxUtteranceBytes = 2048;

struct ServiceConfig {
  std::chrono::seconds idle_timeout{15 * 60};
  std::string transcript_dir;  // empty: keep transcripts in memory only
  std::size_t distractors = 2;
  std::uint64_t seed = 0;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

// In-memory dialogue sessions over registered agents. All public methods are
// thread-safe; messages for one session are handled one at a time.
class DialogueService {
 public:
  using Clock = std::chrono::steady_clock;

  DialogueService(ServiceConfig cfg, TemplatePack templates);

  // The model's KB must outlive the service. The first agent registered
  // becomes the default.
  void add_agent(const std::string& name, std::shared_ptr<const AgentModel> model);

  ServiceResponse create_session(const std::string& body);
  ServiceResponse utterance(const std::string& id, const std::string& body);
  ServiceResponse get_session(const std::string& id);
  ServiceResponse feedback(const std::string& id, const std::string& body);
  ServiceResponse agents() const;
  ServiceResponse health() const;

  // Marks sessions idle for longer than the timeout as expired; returns how
  // many changed. Also runs lazily on every request.
  std::size_t expire_idle(Clock::time_point now);
  // Test hook: pretend a session was last touched at `t`.
  void touch(const std::string& id, Clock::time_point t);

 private:
  struct Session {
    std::string id;
    std::string agent;
    std::shared_ptr<const AgentModel> model;
    std::unique_ptr<DialogueSession> dialogue;
    Rng rng;
    std::string status = "open";  // open | informed | expired
    nlohmann::json transcript = nlohmann::json::array();
    nlohmann::json target_card;
    std::optional<RowIndex> target_row;
    nlohmann::json feedback;
    Clock::time_point last_active;
    std::mutex mu;
  };

  std::shared_ptr<Session> find(const std::string& id);
  void persist(const Session& s, const nlohmann::json& event) const;
  std::string new_id();

  ServiceConfig cfg_;
  TemplatePack templates_;
  std::map<std::string, std::shared_ptr<const AgentModel>> agents_;
  std::string default_agent_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  Rng id_rng_;
  std::uint64_t counter_ = 0;
};

// Eval-mode target card: for each slot the target's true value plus
// `distractors` other values of the slot, shuffled.
nlohmann::json make_target_card(const KbTable& kb, RowIndex target, std::size_t distractors, Rng& rng);

}  // namespace infobot
