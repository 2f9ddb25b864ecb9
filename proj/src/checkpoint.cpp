#include "infobot/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace infobot {

namespace {

nlohmann::json kb_shape(const KbTable& kb) {
  nlohmann::json vocab = nlohmann::json::array();
  for (std::size_t j = 0; j < kb.n_slots(); ++j) vocab.push_back(kb.vocab_size(j));
  return {{"rows", kb.n_rows()}, {"slots", kb.n_slots()}, {"vocab", vocab}};
}

}  // namespace

nlohmann::json checkpoint_to_json(const AgentModel& model) {
  return {{"format", "infobot-checkpoint"},
          {"version", kCheckpointVersion},
          {"variant", to_string(model.variant)},
          {"config", model.cfg.to_json()},
          {"kb_shape", kb_shape(*model.kb)},
          {"vocab", model.vocab.to_json()},
          {"params", model.params.to_json()}};
}

AgentModel checkpoint_from_json(const nlohmann::json& j, const KbTable& kb) {
  if (j.value("format", "") != "infobot-checkpoint") throw std::runtime_error("not an infobot checkpoint");
  const int version = j.value("version", 0);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const auto& shape = j.at("kb_shape");
  const auto want = kb_shape(kb);
  if (shape.at("slots") != want.at("slots") || shape.at("vocab") != want.at("vocab"))
    throw std::runtime_error("checkpoint was trained on a KB with a different shape");
  AgentModel m;
  m.variant = parse_variant(j.at("variant").get<std::string>());
  m.kb = &kb;
  m.cfg = AgentConfig::from_json(j.at("config"));
  m.vocab = FeatureVocab::from_json(j.at("vocab"));
  m.params = nn::ParamStore::from_json(j.at("params"));
  // Binding checks that every expected tensor is present.
  if (uses_neural_tracker(m.variant)) NeuralTracker(m.params, kb);
  if (uses_policy_net(m.variant)) {
    PolicyNet p(m.params);
    if (p.input_size() != m.policy_input_size() || p.n_actions() != m.n_actions())
      throw std::runtime_error("checkpoint policy shape does not match the variant");
  }
  return m;
}

void save_checkpoint(const AgentModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << checkpoint_to_json(model).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

AgentModel load_checkpoint(const std::string& path, const KbTable& kb) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return checkpoint_from_json(nlohmann::json::parse(in), kb);
}

}  // namespace infobot
