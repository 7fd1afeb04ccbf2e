#include "finforge/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>

#include "finforge/kernels.hpp"
#include "finforge/serialize.hpp"

namespace finforge {

using Json = nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::malformed: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::precondition: return 422;
    case ErrorCode::timeout: return 504;
    case ErrorCode::unavailable: return 503;
    case ErrorCode::internal: return 500;
  }
  return 500;
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::malformed, path.string() + ":" + std::to_string(n) + ": not valid JSON");
    }
    try {
      fn(n, j);
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(n) + ": " + e.what(), e.detail());
    }
  }
}

namespace {

std::filesystem::path resolve_path(const Json& j, const char* key, const std::filesystem::path& base) {
  if (!j.contains(key) || j[key].is_null()) return {};
  if (!j[key].is_string()) throw Error(ErrorCode::malformed, std::string("config field '") + key + "' must be a path");
  std::filesystem::path p = j[key].get<std::string>();
  return p.is_absolute() ? p : base / p;
}

template <class T>
T config_value(const Json& j, const char* key, T def) {
  if (!j.contains(key) || j[key].is_null()) return def;
  try {
    return j[key].get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::malformed, std::string("config field '") + key + "' has the wrong type");
  }
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? v : nullptr;
}

long long env_int(const char* name, const char* v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(name);
    return n;
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument, std::string(name) + " must be an integer");
  }
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const Json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw Error(ErrorCode::malformed, "config must be a JSON object");
  ServiceConfig c;
  if (auto p = resolve_path(j, "store_dir", base); !p.empty()) c.store_dir = p;
  c.listen_host = config_value<std::string>(j, "listen_host", c.listen_host);
  c.listen_port = config_value<int>(j, "listen_port", c.listen_port);
  if (j.contains("judge")) {
    const auto& jj = j["judge"];
    c.judge_endpoint = config_value<std::string>(jj, "endpoint", c.judge_endpoint);
    c.judge_in_flight = config_value<std::size_t>(jj, "in_flight", c.judge_in_flight);
    c.judge_timeout_ms = config_value<int>(jj, "timeout_ms", c.judge_timeout_ms);
  }
  if (j.contains("executor")) {
    const auto& ej = j["executor"];
    c.executor_endpoint = config_value<std::string>(ej, "endpoint", c.executor_endpoint);
    c.executor_timeout_ms = config_value<int>(ej, "timeout_ms", c.executor_timeout_ms);
  }
  if (j.contains("routing")) c.routing = json::decode_routing(j["routing"], c.routing);
  if (j.contains("weights")) c.weights = json::decode_weights(j["weights"], c.weights);
  if (j.contains("curriculum")) c.curriculum = json::decode_curriculum(j["curriculum"], c.curriculum);
  if (j.contains("vote")) c.vote = json::decode_vote_config(j["vote"]);
  if (j.contains("agentic_weights")) c.agentic = json::decode_agentic_weights(j["agentic_weights"], c.agentic);
  c.rng_seed = config_value<std::uint64_t>(j, "rng_seed", c.rng_seed);
  c.strict_ingest = config_value<bool>(j, "strict_ingest", c.strict_ingest);
  if (j.contains("data")) {
    const auto& d = j["data"];
    c.knowledge_points = resolve_path(d, "knowledge_points", base);
    c.axioms = resolve_path(d, "axioms", base);
    c.templates = resolve_path(d, "templates", base);
    c.fact_sets = resolve_path(d, "fact_sets", base);
    c.format_rules = resolve_path(d, "format_rules", base);
    c.scenarios = resolve_path(d, "scenarios", base);
  }
  c.console_dir = resolve_path(j, "console_dir", base);
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::not_found, "cannot read config " + file.string());
  const auto j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::malformed, "config " + file.string() + " is not valid JSON");
  return from_json(j, file.parent_path().empty() ? std::filesystem::path(".") : file.parent_path());
}

void ServiceConfig::apply_env() {
  if (const char* v = env("FINFORGE_STORE_DIR")) store_dir = v;
  if (const char* v = env("FINFORGE_LISTEN_HOST")) listen_host = v;
  if (const char* v = env("FINFORGE_LISTEN_PORT")) listen_port = static_cast<int>(env_int("FINFORGE_LISTEN_PORT", v));
  if (const char* v = env("FINFORGE_JUDGE_ENDPOINT")) judge_endpoint = v;
  if (const char* v = env("FINFORGE_JUDGE_IN_FLIGHT")) {
    judge_in_flight = static_cast<std::size_t>(env_int("FINFORGE_JUDGE_IN_FLIGHT", v));
  }
  if (const char* v = env("FINFORGE_EXECUTOR_ENDPOINT")) executor_endpoint = v;
  if (const char* v = env("FINFORGE_EXECUTOR_TIMEOUT_MS")) {
    executor_timeout_ms = static_cast<int>(env_int("FINFORGE_EXECUTOR_TIMEOUT_MS", v));
  }
  if (const char* v = env("FINFORGE_RNG_SEED")) rng_seed = static_cast<std::uint64_t>(env_int("FINFORGE_RNG_SEED", v));
  if (const char* v = env("FINFORGE_STRICT_INGEST")) {
    const std::string s = v;
    strict_ingest = s == "1" || s == "true";
  }
}

void ServiceConfig::validate() const {
  if (listen_port < 0 || listen_port > 65535) {
    throw Error(ErrorCode::invalid_argument, "listen_port must be in [0, 65535]");
  }
  if (judge_in_flight < 1) throw Error(ErrorCode::invalid_argument, "judge in-flight cap must be positive");
  if (judge_timeout_ms <= 0 || executor_timeout_ms <= 0) {
    throw Error(ErrorCode::invalid_argument, "timeouts must be positive");
  }
  curriculum.validate();
  vote.validate();
  agentic.validate();
  for (const auto* p : {&knowledge_points, &axioms, &templates, &fact_sets, &format_rules, &scenarios}) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw Error(ErrorCode::not_found, "configured data file " + p->string() + " does not exist");
    }
  }
  if (!console_dir.empty() && !std::filesystem::is_directory(console_dir)) {
    throw Error(ErrorCode::not_found, "console_dir " + console_dir.string() + " does not exist");
  }
}

Engine::Engine(ServiceConfig config, std::unique_ptr<JudgeClient> judge,
               std::unique_ptr<Executor> executor, Clock clock)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      judge_(std::move(judge)),
      executor_(std::move(executor)),
      queue_(clock_) {
  config_.validate();
  if (!judge_) {
    if (config_.judge_endpoint.empty()) {
      judge_ = std::make_unique<MockJudge>();
    } else {
      HttpJudgeOptions opts;
      opts.endpoint = config_.judge_endpoint;
      opts.max_in_flight = config_.judge_in_flight;
      opts.timeout = std::chrono::milliseconds(config_.judge_timeout_ms);
      judge_ = std::make_unique<HttpJudgeClient>(opts);
    }
  }
  if (!executor_) {
    ExecutorLimits limits;
    limits.timeout = std::chrono::milliseconds(config_.executor_timeout_ms);
    if (config_.executor_endpoint.empty()) {
      executor_ = std::make_unique<SubprocessExecutor>(limits);
    } else {
      executor_ = std::make_unique<HttpExecutor>(config_.executor_endpoint, limits);
    }
  }
  load_data();
  funnel_ = std::make_unique<Funnel>(axioms_, queue_, clock_);
  store_ = std::make_unique<Store>(config_.store_dir);
  replay();
}

void Engine::load_data() {
  if (!config_.axioms.empty()) {
    for_each_jsonl(config_.axioms, [&](std::size_t, const Json& j) { axioms_.register_axiom(json::decode_axiom(j)); });
  }
  if (!config_.knowledge_points.empty()) {
    for_each_jsonl(config_.knowledge_points, [&](std::size_t, const Json& j) { kb_.add(json::decode_point(j)); });
  }
  if (!config_.templates.empty()) {
    for_each_jsonl(config_.templates, [&](std::size_t, const Json& j) { templates_.add(json::decode_template(j)); });
  }
  if (!config_.fact_sets.empty()) {
    for_each_jsonl(config_.fact_sets, [&](std::size_t, const Json& j) {
      auto set = json::decode_fact_set(j);
      const std::string id = set.id();
      if (!fact_sets_.emplace(id, std::move(set)).second) {
        throw Error(ErrorCode::conflict, "duplicate fact set " + id);
      }
    });
  }
  if (!config_.format_rules.empty()) {
    for_each_jsonl(config_.format_rules, [&](std::size_t, const Json& j) { format_rules_.push_back(compile_rule(j)); });
  }
  if (!config_.scenarios.empty()) {
    for_each_jsonl(config_.scenarios, [&](std::size_t, const Json& j) {
      Scenario s = json::decode_scenario(j);
      const ScenarioId id = s.id;
      if (!scenarios_.emplace(id, std::move(s)).second) {
        throw Error(ErrorCode::conflict, "duplicate scenario " + id.str());
      }
    });
  }
}

void Engine::replay() {
  for (const auto& rec : store_->records()) apply(rec);
}

void Engine::apply(const StoreRecord& rec) {
  switch (rec.kind) {
    case RecordKind::task: {
      InstructionTask t = json::decode_task(rec.payload);
      if (t.derivation && !axioms_.contains(t.derivation->axiom)) {
        const std::string id = t.derivation->axiom.str();
        const auto at = id.rfind("@2p");
        if (at == std::string::npos || at + 3 != id.size()) {
          throw Error(ErrorCode::not_found, "task " + t.id.str() + " derives from unknown axiom " + id);
        }
        axioms_.register_axiom(compose_two_period(axioms_.get(AxiomId(id.substr(0, at)))));
      }
      if (!tasks_.contains(t.id)) task_order_.push_back(t.id);
      tasks_[t.id] = std::move(t);
      break;
    }
    case RecordKind::gold: {
      InstructionTask& t = task_ref(TaskId(rec.id));
      t.gold = json::decode_gold(rec.payload.at("gold"));
      t.promote(parse_enum<VerificationLevel>(rec.payload.at("level").get<std::string>()));
      break;
    }
    case RecordKind::verdict: {
      if (rec.payload.value("type", "") == "verification") {
        const auto& r = rec.payload.at("record");
        verification_index_[{r.at("task_id").get<std::string>(), r.at("level").get<std::string>()}] =
            verdicts_.size();
      }
      verdicts_.push_back(rec.payload);
      break;
    }
    case RecordKind::adjudication: queue_.restore(json::decode_item(rec.payload)); break;
    case RecordKind::stats: {
      SampleStats s = json::decode_stats(rec.payload);
      const TaskId id = s.task_id;
      stats_[id] = std::move(s);
      break;
    }
    case RecordKind::trajectory: trajectories_.push_back(rec.payload); break;
  }
}

TaskId Engine::next_task_id() {
  for (std::size_t n = tasks_.size() + 1;; ++n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "task-%06zu", n);
    TaskId id(buf);
    if (!tasks_.contains(id)) return id;
  }
}

InstructionTask& Engine::task_ref(const TaskId& id) {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) throw Error(ErrorCode::not_found, "unknown task " + id.str());
  return it->second;
}

TaskId Engine::add_task(InstructionTask task) {
  if (task.id.empty()) task.id = next_task_id();
  if (tasks_.contains(task.id)) throw Error(ErrorCode::conflict, "duplicate task id " + task.id.str());
  if (const auto* ev = std::get_if<EvolvedProvenance>(&task.provenance); ev && !tasks_.contains(ev->parent)) {
    throw Error(ErrorCode::precondition, "evolved task references unknown parent " + ev->parent.str());
  }
  const TaskId id = task.id;
  apply(store_->append(RecordKind::task, id.str(), json::encode(task)));
  return id;
}

void Engine::persist_gold(const InstructionTask& task) {
  const InstructionTask& stored = task_ref(task.id);
  if (stored.gold == task.gold && stored.level == task.level) return;
  if (!task.gold) throw Error(ErrorCode::internal, "cannot persist an absent gold");
  apply(store_->append(RecordKind::gold, task.id.str(),
                       {{"task_id", task.id.str()},
                        {"gold", json::encode(*task.gold)},
                        {"level", enum_name(task.level)}}));
}

void Engine::persist_verdict(const VerificationRecord& rec) {
  if (verification_index_.contains({rec.task_id.str(), std::string(enum_name(rec.level))})) return;
  apply(store_->append(RecordKind::verdict, rec.task_id.str() + ":" + std::string(enum_name(rec.level)),
                       {{"type", "verification"}, {"record", json::encode(rec)}}));
}

std::vector<InstructionTask> Engine::generate(const std::string& mode, const Json& params) {
  if (!params.is_object()) throw Error(ErrorCode::invalid_argument, "params must be an object");
  std::unique_lock lock(mu_);
  const std::uint64_t seed = params.value("seed", config_.rng_seed);
  TaskGenerator gen(axioms_, kb_, templates_);
  std::vector<InstructionTask> out;

  if (mode == "axiom") {
    const int count = params.value("count", 1);
    if (count < 1) throw Error(ErrorCode::invalid_argument, "count must be positive");
    std::vector<AxiomId> ids;
    if (params.contains("axiom_id")) {
      ids.emplace_back(params.at("axiom_id").get<std::string>());
      axioms_.get(ids.back());
    } else {
      for (const auto& id : axioms_.ids()) {
        if (id.str().find('@') == std::string::npos) ids.push_back(id);
      }
    }
    if (ids.empty()) throw Error(ErrorCode::precondition, "no axioms registered");
    std::vector<DeductionRequest> reqs;
    for (int i = 0; i < count; ++i) {
      const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(i));
      const FinancialAxiom& ax = axioms_.get(ids[static_cast<std::size_t>(i) % ids.size()]);
      std::string hidden = params.value("hidden_symbol", "");
      if (hidden.empty()) {
        Rng pick(s ^ 0x9e3779b97f4a7c15ULL);
        hidden = ax.variables[pick.index(ax.variables.size())].symbol;
      }
      reqs.push_back({ax.id, hidden, s});
    }
    auto results = kernels::omp::generate_deductions(gen, reqs);
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].task) {
        // Some hidden choices have no in-range solution; the left-hand side
        // always has one.
        if (params.contains("hidden_symbol")) {
          throw Error(ErrorCode::precondition, results[i].error);
        }
        const auto& ax = axioms_.get(reqs[i].axiom);
        results[i].task = gen.deduction_task(ax.id, ax.relation.lhs, reqs[i].seed);
      }
      const TaskId id = add_task(std::move(*results[i].task));
      out.push_back(tasks_.at(id));
    }
  } else if (mode == "knowledge") {
    PointSelector sel;
    if (params.contains("selector")) {
      const auto& s = params.at("selector");
      if (s.contains("domain")) sel.domain = parse_enum<DomainTag>(s.at("domain").get<std::string>());
      if (s.contains("tag")) sel.tag = s.at("tag").get<std::string>();
      if (s.contains("contains")) sel.contains = s.at("contains").get<std::string>();
    }
    if (!params.contains("template_id") || !params.contains("task_type")) {
      throw Error(ErrorCode::invalid_argument, "knowledge mode needs template_id and task_type");
    }
    const int count = params.value("count", 1);
    for (int i = 0; i < count; ++i) {
      InstructionTask t = gen.knowledge_task(sel, params.value("n_points", 3),
                                             TemplateId(params.at("template_id").get<std::string>()),
                                             parse_enum<TaskType>(params.at("task_type").get<std::string>()),
                                             count == 1 ? seed : mix_seed(seed, static_cast<std::uint64_t>(i)));
      if (params.contains("fact_set_id")) {
        const std::string fs = params.at("fact_set_id").get<std::string>();
        if (!fact_sets_.contains(fs)) throw Error(ErrorCode::not_found, "unknown fact set " + fs);
        t.gold = GoldAnswer(FactSetGold{fs}, GoldMethod::human);
      }
      const TaskId id = add_task(std::move(t));
      out.push_back(tasks_.at(id));
    }
  } else if (mode == "evolve") {
    if (!params.contains("parent_id") || !params.contains("strategy")) {
      throw Error(ErrorCode::invalid_argument, "evolve mode needs parent_id and strategy");
    }
    const EvolutionStrategy strategy = json::decode_strategy(params.at("strategy"));
    const int rounds = params.value("rounds", 1);
    if (rounds < 1) throw Error(ErrorCode::invalid_argument, "rounds must be positive");
    TaskId parent(params.at("parent_id").get<std::string>());
    for (int r = 0; r < rounds; ++r) {
      InstructionTask child =
          gen.evolve(task_ref(parent), strategy, mix_seed(seed, static_cast<std::uint64_t>(r)), &axioms_);
      parent = add_task(std::move(child));
      out.push_back(tasks_.at(parent));
    }
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown generation mode '" + mode + "'");
  }
  return out;
}

Json Engine::verify(const TaskId& id, VerificationLevel level, const std::vector<CandidateResponse>& responses) {
  std::unique_lock lock(mu_);
  InstructionTask copy = task_ref(id);
  switch (level) {
    case VerificationLevel::L1: {
      const VerificationRecord rec = funnel_->verify_l1(copy, executor_.get());
      persist_gold(copy);
      persist_verdict(rec);
      return {{"outcome", "verified"}, {"record", json::encode(rec)}, {"task", json::encode(tasks_.at(id))}};
    }
    case VerificationLevel::L2: {
      const L2Outcome outcome = funnel_->verify_l2(copy, responses, config_.vote, judge_.get());
      if (const auto* rec = std::get_if<VerificationRecord>(&outcome)) {
        persist_gold(copy);
        persist_verdict(*rec);
        return {{"outcome", "verified"}, {"record", json::encode(*rec)}, {"task", json::encode(tasks_.at(id))}};
      }
      const auto& item = std::get<AdjudicationItem>(outcome);
      apply(store_->append(RecordKind::adjudication, item.id.str(), json::encode(item)));
      return {{"outcome", "escalated"}, {"item", json::encode(item)}, {"task", json::encode(tasks_.at(id))}};
    }
    default:
      throw Error(ErrorCode::invalid_argument,
                  "verification level must be L1 or L2; L3 is reached by resolving an adjudication");
  }
}

ScoringContext Engine::scoring_context(const InstructionTask& task) const {
  ScoringContext ctx;
  ctx.routing = &config_.routing;
  ctx.weights = &config_.weights;
  ctx.judge = judge_.get();
  for (const auto& rule : format_rules_) {
    const auto& types = rule.spec.contains("task_types") ? rule.spec["task_types"] : Json();
    if (types.is_array() &&
        std::find(types.begin(), types.end(), std::string(enum_name(task.task_type))) == types.end()) {
      continue;
    }
    const auto& tags = rule.spec.contains("tags") ? rule.spec["tags"] : Json();
    if (tags.is_array() && std::none_of(task.tags.begin(), task.tags.end(), [&](const std::string& t) {
          return std::find(tags.begin(), tags.end(), t) != tags.end();
        })) {
      continue;
    }
    ctx.format_rules.push_back(&rule);
  }
  if (task.gold) {
    if (const auto* fs = std::get_if<FactSetGold>(&task.gold->payload())) {
      auto it = fact_sets_.find(fs->fact_set_id);
      if (it == fact_sets_.end()) throw Error(ErrorCode::not_found, "unknown fact set " + fs->fact_set_id);
      ctx.facts = &it->second;
    }
  }
  return ctx;
}

RewardBreakdown Engine::score(const TaskId& id, const std::string& response) {
  std::unique_lock lock(mu_);
  const InstructionTask& task = task_ref(id);
  RewardBreakdown b = score_response(task, response, scoring_context(task));
  apply(store_->append(RecordKind::verdict, "score:" + id.str(),
                       {{"type", "score"}, {"task_id", id.str()}, {"response", response}, {"breakdown", json::encode(b)}}));
  return b;
}

std::vector<Json> Engine::score_many(const std::vector<std::pair<TaskId, std::string>>& jobs) {
  std::unique_lock lock(mu_);
  std::vector<kernels::ScoreJob> work;
  std::vector<ScoringContext> contexts;
  for (const auto& [id, response] : jobs) {
    const InstructionTask& t = task_ref(id);
    contexts.push_back(scoring_context(t));
    work.push_back({&t, response, contexts.back().facts});
  }
  ScoringContext shared;
  shared.routing = &config_.routing;
  shared.weights = &config_.weights;
  shared.judge = judge_.get();
  // Format rules vary per task type, so group jobs by their rule set.
  std::vector<Json> out(jobs.size());
  std::map<std::vector<const FormatRule*>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < jobs.size(); ++i) groups[contexts[i].format_rules].push_back(i);
  for (const auto& [rules, idx] : groups) {
    ScoringContext ctx = shared;
    ctx.format_rules = rules;
    std::vector<kernels::ScoreJob> sub;
    for (auto i : idx) sub.push_back(work[i]);
    const auto results = kernels::omp::score_batch(sub, ctx);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto i = idx[k];
      if (results[k].breakdown) {
        out[i] = json::encode(*results[k].breakdown);
      } else {
        out[i] = {{"error", results[k].error}};
      }
    }
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (out[i].contains("error")) continue;
    apply(store_->append(RecordKind::verdict, "score:" + jobs[i].first.str(),
                         {{"type", "score"},
                          {"task_id", jobs[i].first.str()},
                          {"response", jobs[i].second},
                          {"breakdown", out[i]}}));
  }
  return out;
}

const Scenario& Engine::scenario(const ScenarioId& id) const {
  auto it = scenarios_.find(id);
  if (it == scenarios_.end()) throw Error(ErrorCode::not_found, "unknown scenario " + id.str());
  return it->second;
}

AgenticScore Engine::score_trajectory(const Trajectory& traj) {
  std::unique_lock lock(mu_);
  const AgenticScore s = finforge::score_trajectory(traj, scenario(traj.scenario), config_.agentic);
  apply(store_->append(RecordKind::trajectory, "traj-" + std::to_string(trajectories_.size() + 1),
                       {{"trajectory", json::encode(traj)}, {"score", json::encode(s)}}));
  return s;
}

std::pair<Trajectory, AgenticScore> Engine::simulate(const ScenarioId& id, std::vector<AgentAction> script) {
  Trajectory traj;
  {
    std::shared_lock lock(mu_);
    ScriptedDriver driver(std::move(script));
    traj = run_scenario(scenario(id), driver);
  }
  const AgenticScore s = score_trajectory(traj);
  return {traj, s};
}

std::vector<AdjudicationItem> Engine::adjudication(std::optional<AdjudicationStatus> status) const {
  std::shared_lock lock(mu_);
  return queue_.list(status);
}

Json Engine::resolve(const ItemId& item_id, const Json& gold_payload, const std::string& expert_id) {
  std::unique_lock lock(mu_);
  const GoldPayload decision = json::decode_payload(gold_payload);
  const AdjudicationItem item = queue_.get(item_id);
  if (item.status == AdjudicationStatus::resolved) {
    throw Error(ErrorCode::conflict, "adjudication item " + item_id.str() + " is already resolved",
                "resolved by " + item.resolution->expert_id);
  }
  InstructionTask copy = task_ref(item.task_id);
  const VerificationRecord rec = funnel_->resolve_adjudication(item_id, decision, expert_id, copy);
  const AdjudicationItem resolved = queue_.get(item_id);
  apply(store_->append(RecordKind::adjudication, item_id.str(), json::encode(resolved)));
  persist_gold(copy);
  persist_verdict(rec);
  return {{"item", json::encode(resolved)}, {"task", json::encode(tasks_.at(item.task_id))}};
}

SampleStats Engine::record_rollouts(const TaskId& id, const std::vector<double>& rewards) {
  std::unique_lock lock(mu_);
  task_ref(id);
  SampleStats s = stats_.contains(id) ? stats_.at(id) : SampleStats{id, {}, Stratum::learning, false, 0};
  finforge::record_rollouts(s, rewards, config_.curriculum, clock_());
  std::map<TaskId, SampleStats> one{{id, s}};
  const TaskOutcome outcome{id, rewards};
  update_mastery(one, std::span(&outcome, 1), config_.curriculum);
  apply(store_->append(RecordKind::stats, id.str(), json::encode(one.at(id))));
  return stats_.at(id);
}

Batch Engine::next_batch(Stratum stage, std::uint64_t seed, const std::map<TaskId, std::vector<double>>& rollouts) {
  std::unique_lock lock(mu_);
  std::vector<SampleStats> pool;
  for (const auto& id : task_order_) {
    const auto& t = tasks_.at(id);
    if (!t.gold || t.level == VerificationLevel::unverified) continue;
    pool.push_back(stats_.contains(id) ? stats_.at(id) : SampleStats{id, {}, Stratum::learning, false, 0});
  }
  Batch batch = build_batch(pool, config_.curriculum, stage, seed);
  if (rollouts.empty()) return batch;

  std::string missing;
  for (auto& e : batch.entries) {
    auto it = rollouts.find(e.task_id);
    if (it == rollouts.end()) {
      missing += (missing.empty() ? "" : ", ") + e.task_id.str();
      continue;
    }
    e.rollout_rewards = it->second;
  }
  if (!missing.empty()) throw Error(ErrorCode::invalid_argument, "no rollouts supplied for " + missing);
  batch = prune_zero_variance(std::move(batch));

  std::map<TaskId, SampleStats> touched;
  std::vector<TaskOutcome> outcomes;
  const auto note = [&](const TaskId& id, const std::vector<double>& rewards) {
    SampleStats s = stats_.contains(id) ? stats_.at(id) : SampleStats{id, {}, Stratum::learning, false, 0};
    if (rewards.size() == static_cast<std::size_t>(config_.curriculum.k)) {
      finforge::record_rollouts(s, rewards, config_.curriculum, clock_());
    }
    touched[id] = std::move(s);
    outcomes.push_back({id, rewards});
  };
  for (const auto& e : batch.entries) note(e.task_id, e.rollout_rewards);
  for (const auto& p : batch.pruned) note(p.task_id, p.rollout_rewards);
  update_mastery(touched, outcomes, config_.curriculum);
  for (const auto& [id, s] : touched) apply(store_->append(RecordKind::stats, id.str(), json::encode(s)));
  return batch;
}

IngestReport Engine::ingest(const std::filesystem::path& path, RecordKind kind, bool strict) {
  if (kind != RecordKind::task && kind != RecordKind::stats) {
    throw Error(ErrorCode::invalid_argument, "ingest supports task and stats records");
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot read " + path.string());
  std::unique_lock lock(mu_);

  IngestReport report;
  std::vector<std::pair<std::size_t, Json>> accepted;
  std::set<std::string> seen;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = Json::parse(line, nullptr, false);
      if (j.is_discarded()) throw Error(ErrorCode::malformed, "not valid JSON");
      std::string id;
      if (kind == RecordKind::task) {
        InstructionTask t = json::decode_task(j);
        id = t.id.str();
        if (!id.empty() && (tasks_.contains(t.id) || seen.contains(id))) {
          report.rejected.push_back({n, "duplicate task id " + id});
          continue;
        }
        if (const auto* ev = std::get_if<EvolvedProvenance>(&t.provenance);
            ev && !tasks_.contains(ev->parent) && !seen.contains(ev->parent.str())) {
          throw Error(ErrorCode::malformed, "evolved task references unknown parent " + ev->parent.str());
        }
      } else {
        SampleStats s = json::decode_stats(j);
        s.validate(config_.curriculum);
        id = s.task_id.str();
        if (!tasks_.contains(s.task_id)) throw Error(ErrorCode::malformed, "stats for unknown task " + id);
        if (stats_.contains(s.task_id) || seen.contains(id)) {
          report.rejected.push_back({n, "duplicate stats for task " + id});
          continue;
        }
      }
      if (!id.empty()) seen.insert(id);
      accepted.emplace_back(n, j);
    } catch (const Error& e) {
      if (strict) {
        throw Error(ErrorCode::malformed, path.string() + ":" + std::to_string(n) + ": " + e.what());
      }
      report.rejected.push_back({n, e.what()});
    }
  }
  for (const auto& [line_no, j] : accepted) {
    if (kind == RecordKind::task) {
      add_task(json::decode_task(j));
    } else {
      SampleStats s = json::decode_stats(j);
      const std::string id = s.task_id.str();
      apply(store_->append(RecordKind::stats, id, json::encode(s)));
    }
    ++report.appended;
  }
  return report;
}

Summary Engine::summary() const {
  std::shared_lock lock(mu_);
  Summary s;
  for (auto l : {VerificationLevel::unverified, VerificationLevel::L1, VerificationLevel::L2, VerificationLevel::L3}) {
    s.levels[l] = 0;
  }
  for (auto st : {Stratum::core, Stratum::learning, Stratum::frontier}) s.strata[st] = 0;
  for (const auto& [_, t] : tasks_) ++s.levels[t.level];
  s.pending_adjudications = queue_.pending_count();
  for (const auto& [_, st] : stats_) {
    ++s.strata[st.stratum];
    if (st.mastery) ++s.mastery_pool;
  }
  s.verdicts = verdicts_.size();
  s.trajectories = trajectories_.size();
  return s;
}

Json Engine::report() const {
  const Summary s = summary();
  Json levels = Json::object();
  for (const auto& [l, n] : s.levels) levels[std::string(enum_name(l))] = n;
  Json strata = Json::object();
  for (const auto& [st, n] : s.strata) strata[std::string(enum_name(st))] = n;
  std::size_t total = 0;
  for (const auto& [_, n] : s.levels) total += n;
  return {{"tasks", total},
          {"levels", levels},
          {"pending_adjudications", s.pending_adjudications},
          {"strata", strata},
          {"mastery_pool", s.mastery_pool},
          {"verdicts", s.verdicts},
          {"trajectories", s.trajectories}};
}

Json Engine::state() const {
  std::shared_lock lock(mu_);
  Json tasks = Json::array();
  for (const auto& id : task_order_) tasks.push_back(json::encode(tasks_.at(id)));
  Json items = Json::array();
  for (const auto& it : queue_.list()) items.push_back(json::encode(it));
  Json stats = Json::array();
  for (const auto& [_, s] : stats_) stats.push_back(json::encode(s));
  return {{"tasks", tasks},
          {"verdicts", verdicts_},
          {"adjudication", items},
          {"stats", stats},
          {"trajectories", trajectories_}};
}

InstructionTask Engine::task(const TaskId& id) const {
  std::shared_lock lock(mu_);
  auto it = tasks_.find(id);
  if (it == tasks_.end()) throw Error(ErrorCode::not_found, "unknown task " + id.str());
  return it->second;
}

std::vector<InstructionTask> Engine::tasks(std::optional<VerificationLevel> level) const {
  std::shared_lock lock(mu_);
  std::vector<InstructionTask> out;
  for (const auto& id : task_order_) {
    const auto& t = tasks_.at(id);
    if (!level || t.level == *level) out.push_back(t);
  }
  return out;
}

}  // namespace finforge
