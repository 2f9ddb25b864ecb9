#include "infobot/service.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace infobot {

namespace {

ServiceResponse error(int status, const std::string& message) { return {status, {{"error", message}}}; }

std::optional<nlohmann::json> parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

nlohmann::json result_rows(const KbTable& kb, const std::vector<RowIndex>& rows) {
  auto out = nlohmann::json::array();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    nlohmann::json values = nlohmann::json::object();
    for (std::size_t j = 0; j < kb.n_slots(); ++j)
      values[kb.slot_name(j)] = kb.is_missing(rows[r], j) ? nlohmann::json() : nlohmann::json(kb.value(j, kb.cell(rows[r], j)));
    out.push_back({{"rank", r + 1}, {"row", rows[r]}, {"values", values}});
  }
  return out;
}

}  // namespace

nlohmann::json make_target_card(const KbTable& kb, RowIndex target, std::size_t distractors, Rng& rng) {
  nlohmann::json card = nlohmann::json::object();
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    const ValueId truth = kb.has_truth() ? kb.truth(target, j) : kb.cell(target, j);
    if (truth == kMissing) continue;
    std::vector<ValueId> others;
    for (std::size_t v = 0; v < kb.vocab_size(j); ++v)
      if (static_cast<ValueId>(v) != truth) others.push_back(static_cast<ValueId>(v));
    rng.shuffle(others.begin(), others.end());
    others.resize(std::min(others.size(), distractors));
    others.push_back(truth);
    rng.shuffle(others.begin(), others.end());
    auto values = nlohmann::json::array();
    for (ValueId v : others) values.push_back(kb.value(j, v));
    card[kb.slot_name(j)] = values;
  }
  return card;
}

DialogueService::DialogueService(ServiceConfig cfg, TemplatePack templates)
    : cfg_(std::move(cfg)), templates_(std::move(templates)), id_rng_(cfg_.seed ^ std::random_device{}()) {
  if (!cfg_.transcript_dir.empty()) std::filesystem::create_directories(cfg_.transcript_dir);
}

void DialogueService::add_agent(const std::string& name, std::shared_ptr<const AgentModel> model) {
  if (!model || !model->kb) throw std::invalid_argument("add_agent: model without KB");
  if (model->variant == AgentVariant::max) throw std::invalid_argument("the Max agent cannot talk to people");
  std::lock_guard lock(mu_);
  if (default_agent_.empty()) default_agent_ = name;
  agents_[name] = std::move(model);
}

std::string DialogueService::new_id() {
  std::ostringstream os;
  os << std::hex << id_rng_.next() << (++counter_);
  return os.str();
}

std::shared_ptr<DialogueService::Session> DialogueService::find(const std::string& id) {
  expire_idle(Clock::now());
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void DialogueService::persist(const Session& s, const nlohmann::json& event) const {
  if (cfg_.transcript_dir.empty()) return;
  std::ofstream out(std::filesystem::path(cfg_.transcript_dir) / (s.id + ".jsonl"), std::ios::app);
  out << event.dump() << '\n';
}

std::size_t DialogueService::expire_idle(Clock::time_point now) {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, s] : sessions_) all.push_back(s);
  }
  std::size_t changed = 0;
  for (auto& s : all) {
    std::lock_guard lock(s->mu);
    if (s->status == "open" && now - s->last_active > cfg_.idle_timeout) {
      s->status = "expired";
      persist(*s, {{"event", "expired"}});
      ++changed;
    }
  }
  return changed;
}

void DialogueService::touch(const std::string& id, Clock::time_point t) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw std::invalid_argument("no such session");
  std::lock_guard slock(it->second->mu);
  it->second->last_active = t;
}

ServiceResponse DialogueService::create_session(const std::string& body) {
  const auto req = parse_body(body);
  if (!req) return error(400, "malformed JSON body");
  std::string agent;
  std::shared_ptr<const AgentModel> model;
  {
    std::lock_guard lock(mu_);
    agent = default_agent_;
    if (req->contains("agent")) {
      if (!req->at("agent").is_string()) return error(400, "'agent' must be a string");
      agent = req->at("agent").get<std::string>();
    }
    auto it = agents_.find(agent);
    if (it == agents_.end()) return error(400, "unknown agent '" + agent + "'");
    model = it->second;
  }
  if (req->contains("kb") && !(req->at("kb").is_string() && req->at("kb") == "default"))
    return error(400, "unknown kb");
  if (req->contains("eval_mode") && !req->at("eval_mode").is_boolean()) return error(400, "'eval_mode' must be a boolean");
  if (req->contains("seed") && !req->at("seed").is_number_unsigned()) return error(400, "'seed' must be a non-negative integer");
  const bool eval_mode = req->value("eval_mode", false);

  auto s = std::make_shared<Session>();
  std::uint64_t seed = 0;
  {
    std::lock_guard lock(mu_);
    s->id = new_id();
    seed = req->contains("seed") ? req->at("seed").get<std::uint64_t>() : id_rng_.next();
  }
  s->agent = agent;
  s->model = model;
  s->dialogue = std::make_unique<DialogueSession>(*model);
  s->rng = Rng(seed);
  s->last_active = Clock::now();

  nlohmann::json resp = {{"session_id", s->id}, {"agent", agent}};
  if (eval_mode) {
    const KbTable& kb = *model->kb;
    s->target_row = s->rng.below(kb.n_rows());
    s->target_card = make_target_card(kb, *s->target_row, cfg_.distractors, s->rng);
    resp["target_card"] = s->target_card;
  }
  persist(*s, {{"event", "created"}, {"agent", agent}, {"eval_mode", eval_mode}, {"target_row", s->target_row ? nlohmann::json(*s->target_row) : nlohmann::json()}});
  std::lock_guard lock(mu_);
  sessions_[s->id] = s;
  return {201, resp};
}

ServiceResponse DialogueService::utterance(const std::string& id, const std::string& body) {
  auto s = find(id);
  if (!s) return error(404, "unknown session");
  const auto req = parse_body(body);
  if (!req) return error(400, "malformed JSON body");
  if (!req->contains("text") || !req->at("text").is_string()) return error(400, "'text' must be a string");
  const std::string text = req->at("text").get<std::string>();
  if (text.size() > kMaxUtteranceBytes) return error(413, "utterance longer than 2 KiB");

  std::lock_guard lock(s->mu);
  if (s->status != "open") return error(409, "session is " + s->status);
  s->last_active = Clock::now();
  const KbTable& kb = *s->model->kb;
  const int max_turns = s->model->cfg.reward.max_turns;
  const bool force = s->dialogue->turn() + 1 >= max_turns;
  const TurnRecord rec = s->dialogue->step(Observation::text(text), ActMode::greedy, s->rng, force);

  nlohmann::json act = {{"type", rec.action.is_inform() ? "inform" : "request"}};
  if (!rec.action.is_inform()) act["slot"] = kb.slot_name(rec.action.slot);
  const std::string rendered = render_agent_action(rec.action, kb, templates_, rec.turn);
  nlohmann::json resp = {{"agent_act", act}, {"rendered_text", rendered}, {"turn", rec.turn},
                         {"done", rec.action.is_inform()}};
  if (rec.action.is_inform()) {
    resp["results"] = result_rows(kb, rec.action.results);
    s->status = "informed";
  }
  const nlohmann::json event = {{"event", "turn"}, {"turn", rec.turn}, {"user", text}, {"agent", resp}};
  s->transcript.push_back(event);
  persist(*s, event);
  return {200, resp};
}

ServiceResponse DialogueService::get_session(const std::string& id) {
  auto s = find(id);
  if (!s) return error(404, "unknown session");
  std::lock_guard lock(s->mu);
  nlohmann::json j = {{"session_id", s->id},         {"agent", s->agent},
                      {"status", s->status},         {"turn", s->dialogue->turn()},
                      {"transcript", s->transcript}};
  if (!s->target_card.is_null()) j["target_card"] = s->target_card;
  if (!s->feedback.is_null()) j["feedback"] = s->feedback;
  return {200, j};
}

ServiceResponse DialogueService::feedback(const std::string& id, const std::string& body) {
  auto s = find(id);
  if (!s) return error(404, "unknown session");
  const auto req = parse_body(body);
  if (!req) return error(400, "malformed JSON body");
  if (!req->contains("found") || !req->at("found").is_boolean()) return error(400, "'found' must be a boolean");
  nlohmann::json fb = {{"found", req->at("found").get<bool>()}};
  if (req->contains("rank") && !req->at("rank").is_null()) {
    if (!req->at("rank").is_number_integer()) return error(400, "'rank' must be an integer");
    const auto rank = req->at("rank").get<long long>();
    if (rank < 1 || rank > static_cast<long long>(s->model->cfg.reward.r)) return error(400, "'rank' out of range");
    fb["rank"] = rank;
  }
  std::lock_guard lock(s->mu);
  s->feedback = fb;
  persist(*s, {{"event", "feedback"}, {"feedback", fb}});
  return {200, {{"ok", true}}};
}

ServiceResponse DialogueService::agents() const {
  std::lock_guard lock(mu_);
  auto arr = nlohmann::json::array();
  for (const auto& [name, m] : agents_)
    arr.push_back({{"name", name}, {"variant", to_string(m->variant)}, {"default", name == default_agent_}});
  return {200, {{"agents", arr}}};
}

ServiceResponse DialogueService::health() const { return {200, {{"status", "ok"}}}; }

}  // namespace infobot
