// infobot command-line front end: kb-gen, train, eval, sweep, simulate, chat, serve.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "infobot/checkpoint.hpp"
#include "infobot/config.hpp"
#include "infobot/eval.hpp"
#include "infobot/http_server.hpp"
#include "infobot/service.hpp"
#include "infobot/trainer.hpp"
#include "infobot/tune.hpp"

using namespace infobot;
namespace fs = std::filesystem;

namespace {

struct KbOptions {
  std::string csv;
  std::string truth;
  std::string split;
  std::uint64_t seed = 1;
  std::string missing_token = std::string(kDefaultMissingToken);

  void add(CLI::App* app) {
    app->add_option("--kb", csv, "KB CSV file (a sibling <name>.truth.csv is picked up automatically)");
    app->add_option("--truth", truth, "ground-truth CSV for the KB");
    app->add_option("--split", split, "synthetic split: small, medium, large, xlarge");
    app->add_option("--kb-seed", seed, "seed for the synthetic split");
    app->add_option("--missing-token", missing_token, "missing-cell marker in the CSV");
  }

  KbTable load(const RunConfig& cfg) const {
    KbSource src = cfg.kb;
    if (!csv.empty()) {
      src.csv = csv;
      src.truth = truth;
      src.missing_token = missing_token;
      if (src.truth.empty()) {
        fs::path t = fs::path(csv);
        t.replace_extension(".truth.csv");
        if (fs::exists(t)) src.truth = t.string();
      }
    } else if (!split.empty()) {
      src.csv.clear();
      src.spec = KbSplitSpec::named(split, seed);
    }
    return src.load();
  }
};

struct NoiseOptions {
  std::string preset;
  std::optional<double> corrupt, substitute, irrelevant;
  std::optional<double> p_know;

  void add(CLI::App* app) {
    app->add_option("--noise", preset, "noise preset: none, moderate")->check(CLI::IsMember({"none", "moderate"}));
    app->add_option("--p-corrupt", corrupt, "token-drop probability per value mention");
    app->add_option("--p-substitute", substitute, "value substitution probability");
    app->add_option("--p-irrelevant", irrelevant, "off-topic answer probability");
    app->add_option("--p-know", p_know, "probability that the user knows a slot");
  }

  void apply(RunConfig& cfg) const {
    if (preset == "none") cfg.noise = NoiseConfig::none();
    if (preset == "moderate") cfg.noise = NoiseConfig::moderate();
    if (corrupt) cfg.noise.p_corrupt = *corrupt;
    if (substitute) cfg.noise.p_substitute = *substitute;
    if (irrelevant) cfg.noise.p_irrelevant = *irrelevant;
    if (p_know) cfg.user.p_know = *p_know;
    cfg.noise.validate();
    cfg.user.validate();
  }
};

RunConfig load_config(const std::string& path) { return path.empty() ? RunConfig{} : RunConfig::load(path); }

AgentModel load_agent(const std::string& name, const std::string& checkpoint, const KbTable& kb, const RunConfig& cfg,
                      const TemplatePack& templates) {
  if (!checkpoint.empty()) {
    AgentModel m = load_checkpoint(checkpoint, kb);
    if (!name.empty() && parse_variant(name) != m.variant)
      throw std::invalid_argument("checkpoint holds a " + to_string(m.variant) + " agent, not " + name);
    return m;
  }
  const AgentVariant v = parse_variant(name);
  if (uses_policy_net(v))
    std::cerr << "warning: no checkpoint given, " << to_string(v) << " runs with untrained parameters\n";
  return AgentModel::create(v, kb, cfg.agent, templates.corpus());
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw std::invalid_argument("empty noise grid");
  return out;
}

void print_transcript(const Episode& ep, const KbTable& kb, const TemplatePack& templates, std::ostream& out) {
  out << "target row " << ep.goal.target_row << ":";
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    const ValueId v = kb.has_truth() ? kb.truth(ep.goal.target_row, j) : kb.cell(ep.goal.target_row, j);
    out << ' ' << kb.slot_name(j) << '=' << (v == kMissing ? "?" : kb.value(j, v)) << (ep.goal.knows(j) ? "" : "(unknown)");
  }
  out << '\n';
  for (std::size_t t = 0; t < ep.turns.size(); ++t) {
    out << "  user:  " << ep.user_turns[t].text << '\n';
    out << "  agent: " << render_agent_action(ep.turns[t].action, kb, templates, ep.turns[t].turn) << '\n';
  }
  out << "reward " << ep.total_reward << (ep.success ? " (success" : " (failure");
  if (ep.rank) out << ", rank " << *ep.rank;
  out << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KB-InfoBot: dialogue agents that search a knowledge base"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "run configuration (JSON)");

  // kb-gen
  auto* gen = app.add_subcommand("kb-gen", "generate a synthetic KB");
  KbSplitSpec spec;
  std::string gen_split, gen_out, gen_truth;
  gen->add_option("--split", gen_split, "named split (overrides the shape options)");
  gen->add_option("--rows", spec.n_rows, "number of entities");
  gen->add_option("--slots", spec.n_slots, "number of slots");
  gen->add_option("--vocab", spec.max_vocab, "maximum vocabulary size per slot");
  gen->add_option("--missing", spec.missing_fraction, "fraction of masked cells per slot");
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("-o,--out", gen_out, "output CSV (stdout if omitted)");
  gen->add_option("--truth", gen_truth, "ground-truth CSV (default <out>.truth.csv)");

  // train
  auto* tr = app.add_subcommand("train", "train an RL or E2E agent");
  KbOptions tr_kb;
  NoiseOptions tr_noise;
  std::string tr_agent = "rl-soft", tr_out, tr_metrics, tr_init;
  std::optional<std::size_t> tr_updates, tr_il_updates, tr_batch, tr_eval_every, tr_eval_n, tr_final_n;
  std::optional<std::uint64_t> tr_seed;
  tr_kb.add(tr);
  tr_noise.add(tr);
  tr->add_option("--agent", tr_agent, "agent variant");
  tr->add_option("-o,--out", tr_out, "checkpoint path")->required();
  tr->add_option("--metrics", tr_metrics, "JSONL metrics log");
  tr->add_option("--init", tr_init, "start from this checkpoint");
  tr->add_option("--updates", tr_updates, "RL updates");
  tr->add_option("--il-updates", tr_il_updates, "imitation updates (E2E)");
  tr->add_option("--batch", tr_batch, "episodes per update");
  tr->add_option("--eval-every", tr_eval_every, "updates between evaluations");
  tr->add_option("--eval-episodes", tr_eval_n, "episodes per evaluation");
  tr->add_option("--final-episodes", tr_final_n, "episodes in the final evaluation");
  tr->add_option("--seed", tr_seed, "training seed");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate an agent against the simulator");
  KbOptions ev_kb;
  NoiseOptions ev_noise;
  std::string ev_agent, ev_ckpt, ev_csv;
  std::size_t ev_n = 5000;
  std::uint64_t ev_seed = 7;
  bool ev_episodes = false;
  ev_kb.add(ev);
  ev_noise.add(ev);
  ev->add_option("--agent", ev_agent, "agent variant");
  ev->add_option("--checkpoint", ev_ckpt, "trained checkpoint");
  ev->add_option("--n", ev_n, "episodes");
  ev->add_option("--seed", ev_seed, "evaluation seed");
  ev->add_option("--csv", ev_csv, "write per-episode CSV here");
  ev->add_flag("--episodes", ev_episodes, "include per-episode records in the JSON");

  // sweep
  auto* sw = app.add_subcommand("sweep", "average reward across off-topic noise levels");
  KbOptions sw_kb;
  NoiseOptions sw_noise;
  std::vector<std::string> sw_agents, sw_ckpts;
  std::string sw_grid = "0,0.2,0.4,0.6", sw_csv;
  std::size_t sw_n = 2000;
  std::uint64_t sw_seed = 7;
  sw_kb.add(sw);
  sw_noise.add(sw);
  sw->add_option("--agent", sw_agents, "agent variant (repeatable)")->required();
  sw->add_option("--checkpoint", sw_ckpts, "checkpoint per agent, in order ('-' for none)");
  sw->add_option("--grid", sw_grid, "comma-separated p_irrelevant values");
  sw->add_option("--n", sw_n, "episodes per point");
  sw->add_option("--seed", sw_seed, "evaluation seed");
  sw->add_option("--csv", sw_csv, "output CSV (stdout if omitted)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "print sample dialogues with the simulated user");
  KbOptions sim_kb;
  NoiseOptions sim_noise;
  std::string sim_agent = "rule-soft", sim_ckpt;
  std::size_t sim_n = 1;
  std::uint64_t sim_seed = 1;
  bool sim_json = false;
  sim_kb.add(sim);
  sim_noise.add(sim);
  sim->add_option("--agent", sim_agent, "agent variant");
  sim->add_option("--checkpoint", sim_ckpt, "trained checkpoint");
  sim->add_option("--n", sim_n, "number of dialogues");
  sim->add_option("--seed", sim_seed, "seed");
  sim->add_flag("--json", sim_json, "print JSON transcripts");

  // chat
  auto* ch = app.add_subcommand("chat", "talk to an agent in the terminal");
  KbOptions ch_kb;
  std::string ch_agent = "rule-soft", ch_ckpt;
  ch_kb.add(ch);
  ch->add_option("--agent", ch_agent, "agent variant");
  ch->add_option("--checkpoint", ch_ckpt, "trained checkpoint");

  // serve
  auto* sv = app.add_subcommand("serve", "run the HTTP dialogue service");
  KbOptions sv_kb;
  std::vector<std::string> sv_agents, sv_ckpts;
  std::string sv_bind, sv_transcripts;
  int sv_port = 0;
  int sv_idle = 15 * 60;
  sv_kb.add(sv);
  sv->add_option("--agent", sv_agents, "agent variant (repeatable; default rule-soft)");
  sv->add_option("--checkpoint", sv_ckpts, "checkpoint per agent, in order ('-' for none)");
  sv->add_option("--bind", sv_bind, "bind address (default $INFOBOT_BIND or 127.0.0.1)");
  sv->add_option("--port", sv_port, "port (default $INFOBOT_PORT or 8080)");
  sv->add_option("--transcripts", sv_transcripts, "directory for JSONL transcripts");
  sv->add_option("--idle-timeout", sv_idle, "session idle timeout in seconds");

  // tune
  auto* tu = app.add_subcommand("tune", "grid-search the hand tracker and rule thresholds");
  KbOptions tu_kb;
  NoiseOptions tu_noise;
  std::string tu_agent = "rule-soft";
  std::size_t tu_n = 500, tu_top = 10;
  std::uint64_t tu_seed = 11;
  tu_kb.add(tu);
  tu_noise.add(tu);
  tu->add_option("--agent", tu_agent, "rule agent variant");
  tu->add_option("--n", tu_n, "episodes per grid point");
  tu->add_option("--top", tu_top, "how many configurations to print");
  tu->add_option("--seed", tu_seed, "evaluation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    const TemplatePack templates = cfg.templates();

    if (gen->parsed()) {
      if (!gen_split.empty()) spec = KbSplitSpec::named(gen_split, spec.seed);
      const KbTable kb = generate_synthetic(spec);
      if (gen_out.empty()) {
        save_csv(kb, std::cout);
      } else {
        std::ofstream out(gen_out);
        if (!out) throw std::runtime_error("cannot write " + gen_out);
        save_csv(kb, out);
        if (gen_truth.empty()) gen_truth = fs::path(gen_out).replace_extension(".truth.csv").string();
        std::ofstream tout(gen_truth);
        if (!tout) throw std::runtime_error("cannot write " + gen_truth);
        save_truth_csv(kb, tout);
      }
      return 0;
    }

    if (tr->parsed()) {
      tr_noise.apply(cfg);
      const KbTable kb = tr_kb.load(cfg);
      templates.check_against(kb);
      TrainConfig tc = cfg.train;
      if (tr_updates) tc.rl_updates = *tr_updates;
      if (tr_il_updates) tc.il_updates = *tr_il_updates;
      if (tr_batch) tc.batch_size = tc.il_batch_size = *tr_batch;
      if (tr_eval_every) tc.eval_every = *tr_eval_every;
      if (tr_eval_n) tc.eval_episodes = *tr_eval_n;
      if (tr_final_n) tc.final_eval_episodes = *tr_final_n;
      if (tr_seed) tc.seed = *tr_seed;
      if (!tr_metrics.empty()) tc.metrics_path = tr_metrics;
      AgentModel model = tr_init.empty() ? AgentModel::create(parse_variant(tr_agent), kb, cfg.agent, templates.corpus())
                                         : load_checkpoint(tr_init, kb);
      SimSetup setup{&templates, cfg.noise, cfg.user};
      const TrainResult res = train(model, setup, tc, &std::cerr);
      save_checkpoint(model, tr_out);
      nlohmann::json summary = {{"checkpoint", tr_out}, {"best_update", res.best_update}, {"best_reward", res.best_reward}};
      if (res.final_report) summary["final"] = res.final_report->to_json();
      std::cout << summary.dump(2) << '\n';
      return 0;
    }

    if (ev->parsed()) {
      ev_noise.apply(cfg);
      const KbTable kb = ev_kb.load(cfg);
      if (ev_agent.empty() && ev_ckpt.empty()) throw std::invalid_argument("eval needs --agent or --checkpoint");
      const AgentModel model = load_agent(ev_agent, ev_ckpt, kb, cfg, templates);
      const EvalReport rep = evaluate(model, {&templates, cfg.noise, cfg.user}, ev_n, ev_seed);
      if (!ev_csv.empty()) {
        std::ofstream out(ev_csv);
        if (!out) throw std::runtime_error("cannot write " + ev_csv);
        rep.write_csv(out);
      }
      std::cout << rep.to_json(ev_episodes).dump(2) << '\n';
      return 0;
    }

    if (sw->parsed()) {
      sw_noise.apply(cfg);
      const KbTable kb = sw_kb.load(cfg);
      std::vector<AgentModel> models;
      for (std::size_t i = 0; i < sw_agents.size(); ++i) {
        const std::string ck = i < sw_ckpts.size() && sw_ckpts[i] != "-" ? sw_ckpts[i] : "";
        models.push_back(load_agent(sw_agents[i], ck, kb, cfg, templates));
      }
      std::vector<const AgentModel*> ptrs;
      for (const auto& m : models) ptrs.push_back(&m);
      const auto rows = noise_sweep(ptrs, {&templates, cfg.noise, cfg.user}, parse_grid(sw_grid), sw_n, sw_seed);
      if (sw_csv.empty()) {
        write_sweep_csv(rows, std::cout);
      } else {
        std::ofstream out(sw_csv);
        if (!out) throw std::runtime_error("cannot write " + sw_csv);
        write_sweep_csv(rows, out);
      }
      return 0;
    }

    if (sim->parsed()) {
      sim_noise.apply(cfg);
      const KbTable kb = sim_kb.load(cfg);
      const AgentModel model = load_agent(sim_agent, sim_ckpt, kb, cfg, templates);
      const SimSetup setup{&templates, cfg.noise, cfg.user};
      for (std::size_t i = 0; i < sim_n; ++i) {
        Rng rng = Rng::stream(sim_seed, i);
        const Episode ep = rollout(model, setup, ActMode::greedy, rng);
        if (sim_json)
          std::cout << ep.transcript(kb, templates).dump() << '\n';
        else
          print_transcript(ep, kb, templates, std::cout);
      }
      return 0;
    }

    if (ch->parsed()) {
      const KbTable kb = ch_kb.load(cfg);
      const AgentModel model = load_agent(ch_agent, ch_ckpt, kb, cfg, templates);
      DialogueSession session(model);
      Rng rng(0);
      std::cout << "Describe the movie you are looking for (empty line to quit).\n";
      std::string line;
      while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        if (line.empty()) break;
        const bool force = session.turn() + 1 >= model.cfg.reward.max_turns;
        const TurnRecord rec = session.step(Observation::text(line), ActMode::greedy, rng, force);
        std::cout << render_agent_action(rec.action, kb, templates, rec.turn) << '\n';
        if (rec.action.is_inform()) break;
      }
      return 0;
    }

    if (tu->parsed()) {
      tu_noise.apply(cfg);
      const KbTable kb = tu_kb.load(cfg);
      const auto results =
          tune_rule(parse_variant(tu_agent), kb, cfg.agent, {&templates, cfg.noise, cfg.user}, RuleGrid{}, tu_n, tu_seed);
      auto arr = nlohmann::json::array();
      for (std::size_t i = 0; i < results.size() && i < tu_top; ++i) {
        const auto& r = results[i];
        arr.push_back({{"avg_reward", r.avg_reward}, {"std_error", r.std_error}, {"success_rate", r.success_rate},
                       {"avg_turns", r.avg_turns}, {"hand", r.cfg.to_json()["hand"]}, {"rule", r.cfg.to_json()["rule"]}});
      }
      std::cout << arr.dump(2) << '\n';
      return 0;
    }

    if (sv->parsed()) {
      const auto kb = std::make_shared<const KbTable>(sv_kb.load(cfg));
      ServiceConfig scfg;
      scfg.idle_timeout = std::chrono::seconds(sv_idle);
      scfg.transcript_dir = sv_transcripts;
      DialogueService service(scfg, templates);
      if (sv_agents.empty()) sv_agents.push_back("rule-soft");
      for (std::size_t i = 0; i < sv_agents.size(); ++i) {
        const std::string ck = i < sv_ckpts.size() && sv_ckpts[i] != "-" ? sv_ckpts[i] : "";
        auto model = std::make_shared<AgentModel>(load_agent(sv_agents[i], ck, *kb, cfg, templates));
        service.add_agent(to_string(model->variant), std::move(model));
      }
      std::cerr << "serving " << sv_agents.size() << " agent(s)\n";
      run_server(service, sv_bind, sv_port);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
