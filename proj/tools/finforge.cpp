// finforge: command-line front end over the same Engine the service uses.

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "finforge/engine.hpp"
#include "finforge/http_service.hpp"
#include "finforge/serialize.hpp"
#include "json.hpp"

using namespace finforge;
using Json = nlohmann::json;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::malformed: return 3;
    case ErrorCode::not_found: return 4;
    case ErrorCode::conflict: return 5;
    case ErrorCode::precondition: return 6;
    case ErrorCode::timeout:
    case ErrorCode::unavailable: return 7;
    case ErrorCode::internal: return 1;
  }
  return 1;
}

Json parse_json_arg(const std::string& text, const char* what) {
  const auto j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::invalid_argument, std::string(what) + " is not valid JSON");
  return j;
}

std::vector<Json> read_lines(const std::string& path) {
  std::vector<Json> out;
  for_each_jsonl(path, [&](std::size_t, const Json& j) { out.push_back(j); });
  return out;
}

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

HttpService* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finforge: financial instruction synthesis, verification and curriculum tooling"};
  app.require_subcommand(1);

  std::string config_path;
  std::string store_dir;
  std::optional<std::uint64_t> seed;
  std::string emit_state;
  app.add_option("--config", config_path, "Service config JSON")->check(CLI::ExistingFile);
  app.add_option("--store", store_dir, "Store directory (overrides config)");
  app.add_option("--seed", seed, "RNG seed (overrides config)");
  app.add_option("--emit-state", emit_state, "Write the replayed store state to this file after the command");

  // gen-axiom
  auto* gen_axiom = app.add_subcommand("gen-axiom", "Generate deduction tasks from registered axioms");
  int ga_count = 1;
  std::string ga_axiom, ga_hidden;
  gen_axiom->add_option("--count", ga_count, "Number of tasks")->check(CLI::PositiveNumber);
  gen_axiom->add_option("--axiom", ga_axiom, "Axiom id (default: round-robin over all)");
  gen_axiom->add_option("--hidden", ga_hidden, "Symbol to hide (default: random per task)");

  // gen-kb
  auto* gen_kb = app.add_subcommand("gen-kb", "Generate tasks from knowledge points and a template");
  std::string kb_template, kb_type, kb_domain, kb_tag, kb_contains, kb_fact_set;
  int kb_points = 3, kb_count = 1;
  gen_kb->add_option("--template", kb_template, "Template id")->required();
  gen_kb->add_option("--task-type", kb_type, "Task type")->required();
  gen_kb->add_option("--n-points", kb_points, "Points per task")->check(CLI::PositiveNumber);
  gen_kb->add_option("--count", kb_count, "Number of tasks")->check(CLI::PositiveNumber);
  gen_kb->add_option("--domain", kb_domain, "Restrict points to a domain");
  gen_kb->add_option("--tag", kb_tag, "Restrict points to a tag");
  gen_kb->add_option("--contains", kb_contains, "Restrict points to text containing this");
  gen_kb->add_option("--fact-set", kb_fact_set, "Attach a ground-truth fact set as the gold");

  // evolve
  auto* evolve = app.add_subcommand("evolve", "Evolve a task with a strategy");
  std::string ev_parent, ev_kind, ev_params = "{}";
  int ev_rounds = 1;
  evolve->add_option("--parent", ev_parent, "Parent task id")->required();
  evolve->add_option("--kind", ev_kind, "add_distractor | transform_format | add_constraint")->required();
  evolve->add_option("--params", ev_params, "Strategy params as a JSON object of strings");
  evolve->add_option("--rounds", ev_rounds, "Chained evolution rounds")->check(CLI::PositiveNumber);

  // verify
  auto* verify = app.add_subcommand("verify", "Run the verification funnel");
  std::string vf_task, vf_level = "L1", vf_responses;
  bool vf_all = false;
  verify->add_option("--task", vf_task, "Task id");
  verify->add_option("--level", vf_level, "L1 or L2");
  verify->add_option("--responses", vf_responses,
                     "JSONL of {task_id?, source_model, output|answer} candidate responses for L2");
  verify->add_flag("--all", vf_all,
                   "Verify every unverified task (L1 where derivable, else L2 from --responses) and record L1 evidence for generated tasks");

  // score
  auto* score = app.add_subcommand("score", "Score responses with the dual verifier");
  std::string sc_task, sc_response, sc_file;
  score->add_option("--task", sc_task, "Task id");
  score->add_option("--response", sc_response, "Response text");
  score->add_option("--file", sc_file, "JSONL of {task_id, response}");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a scripted agent through a tool scenario");
  std::string sim_scenario, sim_script, sim_trajectory;
  simulate->add_option("--scenario", sim_scenario, "Scenario id");
  simulate->add_option("--script", sim_script, "JSONL of agent actions");
  simulate->add_option("--trajectory", sim_trajectory, "Score an existing trajectory JSON file instead");

  // batch
  auto* batch = app.add_subcommand("batch", "Build the next curriculum batch");
  std::string bt_stage = "core", bt_rollouts, bt_out;
  batch->add_option("--stage", bt_stage, "core | learning | frontier");
  batch->add_option("--rollouts", bt_rollouts, "JSONL of {task_id, rewards}");
  batch->add_option("--out", bt_out, "Write the batch export JSONL here");

  // report
  auto* report = app.add_subcommand("report", "Funnel and curriculum summary");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string sv_host;
  int sv_port = -1;
  serve->add_option("--host", sv_host, "Listen host");
  serve->add_option("--port", sv_port, "Listen port (0 picks a free port)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Append externally produced records");
  std::string in_file, in_kind = "task";
  bool in_lenient = false, in_strict = false;
  ingest->add_option("file", in_file, "JSONL file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--kind", in_kind, "task | stats");
  ingest->add_flag("--lenient", in_lenient, "Skip malformed lines instead of failing");
  ingest->add_flag("--strict", in_strict, "Fail on the first malformed line");

  // adjudicate
  auto* adjudicate = app.add_subcommand("adjudicate", "Inspect or resolve the L3 queue");
  adjudicate->require_subcommand(1);
  auto* adj_list = adjudicate->add_subcommand("list", "List adjudication items");
  std::string adj_status;
  adj_list->add_option("--status", adj_status, "pending | resolved");
  auto* adj_resolve = adjudicate->add_subcommand("resolve", "Resolve an item with an expert gold");
  std::string adj_item, adj_gold, adj_expert;
  adj_resolve->add_option("--item", adj_item, "Item id")->required();
  adj_resolve->add_option("--gold", adj_gold, "Gold payload JSON, e.g. {\"type\":\"exact_text\",\"text\":\"B\"}")
      ->required();
  adj_resolve->add_option("--expert", adj_expert, "Expert id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ServiceConfig cfg = config_path.empty() ? ServiceConfig{} : ServiceConfig::load(config_path);
    cfg.apply_env();
    if (!store_dir.empty()) cfg.store_dir = store_dir;
    if (seed) cfg.rng_seed = *seed;
    if (!sv_host.empty()) cfg.listen_host = sv_host;
    if (sv_port >= 0) cfg.listen_port = sv_port;
    Engine engine(cfg);

    if (gen_axiom->parsed()) {
      Json params{{"count", ga_count}, {"seed", cfg.rng_seed}};
      if (!ga_axiom.empty()) params["axiom_id"] = ga_axiom;
      if (!ga_hidden.empty()) params["hidden_symbol"] = ga_hidden;
      Json ids = Json::array();
      for (const auto& t : engine.generate("axiom", params)) ids.push_back(t.id.str());
      print({{"generated", ids.size()}, {"task_ids", ids}});
    } else if (gen_kb->parsed()) {
      Json sel = Json::object();
      if (!kb_domain.empty()) sel["domain"] = kb_domain;
      if (!kb_tag.empty()) sel["tag"] = kb_tag;
      if (!kb_contains.empty()) sel["contains"] = kb_contains;
      Json params{{"template_id", kb_template}, {"task_type", kb_type}, {"n_points", kb_points},
                  {"count", kb_count},         {"seed", cfg.rng_seed}, {"selector", sel}};
      if (!kb_fact_set.empty()) params["fact_set_id"] = kb_fact_set;
      Json ids = Json::array();
      for (const auto& t : engine.generate("knowledge", params)) ids.push_back(t.id.str());
      print({{"generated", ids.size()}, {"task_ids", ids}});
    } else if (evolve->parsed()) {
      Json params{{"parent_id", ev_parent},
                  {"strategy", {{"kind", ev_kind}, {"params", parse_json_arg(ev_params, "--params")}}},
                  {"rounds", ev_rounds},
                  {"seed", cfg.rng_seed}};
      Json out = Json::array();
      for (const auto& t : engine.generate("evolve", params)) out.push_back(json::encode(t));
      print({{"tasks", out}});
    } else if (verify->parsed()) {
      const VerificationLevel level = parse_enum<VerificationLevel>(vf_level);
      std::map<std::string, std::vector<CandidateResponse>> by_task;
      if (!vf_responses.empty()) {
        for (const auto& j : read_lines(vf_responses)) {
          by_task[j.value("task_id", vf_task)].push_back(json::decode_response(j));
        }
      }
      if (vf_all) {
        std::size_t verified = 0, escalated = 0;
        Json failures = Json::array();
        for (const auto& t : engine.tasks()) {
          const bool derivable = t.derivation.has_value() || t.program.has_value();
          // Deduction tasks are born at L1; re-running the recompute records
          // the evidence and is a no-op the second time.
          if (t.level != VerificationLevel::unverified &&
              !(derivable && t.level == VerificationLevel::L1)) {
            continue;
          }
          const auto it = by_task.find(t.id.str());
          if (!derivable && it == by_task.end()) continue;
          try {
            const Json r = derivable ? engine.verify(t.id, VerificationLevel::L1)
                                     : engine.verify(t.id, VerificationLevel::L2, it->second);
            (r["outcome"] == "verified" ? verified : escalated) += 1;
          } catch (const Error& e) {
            failures.push_back({{"task_id", t.id.str()}, {"code", to_string(e.code())}, {"message", e.what()}});
          }
        }
        print({{"verified", verified}, {"escalated", escalated}, {"failures", failures}});
      } else {
        if (vf_task.empty()) throw Error(ErrorCode::invalid_argument, "verify needs --task or --all");
        print(engine.verify(TaskId(vf_task), level, by_task[vf_task]));
      }
    } else if (score->parsed()) {
      if (!sc_file.empty()) {
        std::vector<std::pair<TaskId, std::string>> jobs;
        for (const auto& j : read_lines(sc_file)) {
          jobs.emplace_back(TaskId(j.at("task_id").get<std::string>()), j.at("response").get<std::string>());
        }
        const auto results = engine.score_many(jobs);
        double total = 0;
        std::size_t ok = 0;
        for (std::size_t i = 0; i < results.size(); ++i) {
          std::cout << Json{{"task_id", jobs[i].first.str()}, {"result", results[i]}}.dump() << '\n';
          if (!results[i].contains("error")) {
            total += results[i]["scalar"].get<double>();
            ++ok;
          }
        }
        std::cerr << "scored " << ok << "/" << results.size() << ", mean "
                  << (ok ? total / static_cast<double>(ok) : 0.0) << '\n';
      } else {
        if (sc_task.empty()) throw Error(ErrorCode::invalid_argument, "score needs --task and --response, or --file");
        print(json::encode(engine.score(TaskId(sc_task), sc_response)));
      }
    } else if (simulate->parsed()) {
      if (!sim_trajectory.empty()) {
        std::ifstream in(sim_trajectory);
        if (!in) throw Error(ErrorCode::not_found, "cannot read " + sim_trajectory);
        const auto j = Json::parse(in, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::malformed, sim_trajectory + " is not valid JSON");
        print(json::encode(engine.score_trajectory(json::decode_trajectory(j))));
      } else {
        if (sim_scenario.empty() || sim_script.empty()) {
          throw Error(ErrorCode::invalid_argument, "simulate needs --scenario and --script, or --trajectory");
        }
        std::vector<AgentAction> script;
        for (const auto& j : read_lines(sim_script)) script.push_back(json::decode_action(j));
        const auto [traj, s] = engine.simulate(ScenarioId(sim_scenario), std::move(script));
        print({{"trajectory", json::encode(traj)}, {"score", json::encode(s)}});
      }
    } else if (batch->parsed()) {
      std::map<TaskId, std::vector<double>> rollouts;
      if (!bt_rollouts.empty()) {
        for (const auto& j : read_lines(bt_rollouts)) {
          rollouts[TaskId(j.at("task_id").get<std::string>())] = j.at("rewards").get<std::vector<double>>();
        }
      }
      const Batch b = engine.next_batch(parse_enum<Stratum>(bt_stage), cfg.rng_seed, rollouts);
      if (!bt_out.empty()) {
        std::ofstream out(bt_out);
        if (!out) throw Error(ErrorCode::unavailable, "cannot write " + bt_out);
        for (const auto& line : json::batch_lines(b)) out << line.dump() << '\n';
      }
      print(json::encode(b));
    } else if (report->parsed()) {
      print(engine.report());
    } else if (serve->parsed()) {
      HttpService service(engine);
      const int port = service.bind(cfg.listen_host, cfg.listen_port);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << cfg.listen_host << ":" << port << std::endl;
      service.run();
      g_service = nullptr;
    } else if (ingest->parsed()) {
      if (in_lenient && in_strict) throw Error(ErrorCode::invalid_argument, "--lenient and --strict conflict");
      const bool strict = in_strict || (!in_lenient && cfg.strict_ingest);
      const IngestReport r = engine.ingest(in_file, parse_enum<RecordKind>(in_kind), strict);
      Json rejected = Json::array();
      for (const auto& x : r.rejected) rejected.push_back({{"line", x.line}, {"reason", x.reason}});
      print({{"appended", r.appended}, {"rejected", rejected}});
    } else if (adj_list->parsed()) {
      std::optional<AdjudicationStatus> status;
      if (!adj_status.empty()) status = parse_enum<AdjudicationStatus>(adj_status);
      Json items = Json::array();
      for (const auto& it : engine.adjudication(status)) items.push_back(json::encode(it));
      print({{"items", items}});
    } else if (adj_resolve->parsed()) {
      print(engine.resolve(ItemId(adj_item), parse_json_arg(adj_gold, "--gold"), adj_expert));
    }

    if (!emit_state.empty()) {
      std::ofstream out(emit_state);
      if (!out) throw Error(ErrorCode::unavailable, "cannot write " + emit_state);
      out << engine.state().dump(2) << '\n';
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << '\n';
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [malformed]: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
}
