#pragma once

#include <string>

#include <json.hpp>

#include "infobot/agent.hpp"

namespace infobot {

inline constexpr int kCheckpointVersion = 1;

// {"format", "version", "variant", "config", "kb_shape", "vocab", "params"}
nlohmann::json checkpoint_to_json(const AgentModel& model);
// The KB must have the same slot count and vocabulary sizes the model was
// built for.
AgentModel checkpoint_from_json(const nlohmann::json& j, const KbTable& kb);

void save_checkpoint(const AgentModel& model, const std::string& path);
AgentModel load_checkpoint(const std::string& path, const KbTable& kb);

}  // namespace infobot
