#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "infobot/agent.hpp"
#include "infobot/kb.hpp"
#include "infobot/simulator.hpp"
#include "infobot/trainer.hpp"

namespace infobot {

// Run configuration file:
// {
//   "kb": {"csv": "...", "truth": "...", "missing_token": "X"}
//      or {"split": "small", "seed": 1}
//      or {"rows": 277, "slots": 6, "max_vocab": 17, "missing_fraction": 0.2, "seed": 1},
//   "templates": "data/templates.json",
//   "agent": {...AgentConfig...}, "noise": {...}, "user": {"p_know": 0.8},
//   "train": {...TrainConfig...}
// }
// Every section is optional.
struct KbSource {
  std::string csv;
  std::string truth;
  std::string missing_token = std::string(kDefaultMissingToken);
  KbSplitSpec spec = KbSplitSpec::named("small");

  static KbSource from_json(const nlohmann::json& j);
  KbTable load() const;
};

struct RunConfig {
  KbSource kb;
  std::string templates_path;
  AgentConfig agent;
  NoiseConfig noise;
  UserConfig user;
  TrainConfig train;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  TemplatePack templates() const;
};

}  // namespace infobot
