#include "infobot/config.hpp"

#include <fstream>
#include <stdexcept>

namespace infobot {

KbSource KbSource::from_json(const nlohmann::json& j) {
  KbSource s;
  s.csv = j.value("csv", s.csv);
  s.truth = j.value("truth", s.truth);
  s.missing_token = j.value("missing_token", s.missing_token);
  const std::uint64_t seed = j.value("seed", std::uint64_t{1});
  if (j.contains("split")) {
    s.spec = KbSplitSpec::named(j.at("split").get<std::string>(), seed);
  } else {
    s.spec.n_rows = j.value("rows", s.spec.n_rows);
    s.spec.n_slots = j.value("slots", s.spec.n_slots);
    s.spec.max_vocab = j.value("max_vocab", s.spec.max_vocab);
    s.spec.missing_fraction = j.value("missing_fraction", s.spec.missing_fraction);
    s.spec.seed = seed;
  }
  s.spec.validate();
  return s;
}

KbTable KbSource::load() const {
  if (csv.empty()) return generate_synthetic(spec);
  KbTable kb = load_csv_file(csv, missing_token);
  if (!truth.empty()) {
    std::ifstream in(truth);
    if (!in) throw std::runtime_error("cannot open truth file " + truth);
    load_truth_csv(kb, in);
  }
  return kb;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("run config must be a JSON object");
  RunConfig c;
  if (j.contains("kb")) c.kb = KbSource::from_json(j.at("kb"));
  c.templates_path = j.value("templates", c.templates_path);
  if (j.contains("agent")) c.agent = AgentConfig::from_json(j.at("agent"));
  if (j.contains("noise")) c.noise = NoiseConfig::from_json(j.at("noise"));
  if (j.contains("user")) {
    c.user.p_know = j.at("user").value("p_know", c.user.p_know);
    c.user.validate();
  }
  if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return from_json(j);
}

TemplatePack RunConfig::templates() const {
  return templates_path.empty() ? TemplatePack::builtin() : TemplatePack::load(templates_path);
}

}  // namespace infobot
