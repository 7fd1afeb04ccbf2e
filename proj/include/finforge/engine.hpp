#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "finforge/agentsim.hpp"
#include "finforge/curriculum.hpp"
#include "finforge/funnel.hpp"
#include "finforge/judgeverify.hpp"
#include "finforge/kbgen.hpp"
#include "finforge/ruleverify.hpp"
#include "finforge/store.hpp"
#include "json.hpp"

namespace finforge {

struct ServiceConfig {
  std::filesystem::path store_dir = "store";
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::string judge_endpoint;  // empty: built-in mock judge
  std::size_t judge_in_flight = 4;
  int judge_timeout_ms = 10000;
  std::string executor_endpoint;  // empty: local subprocess
  int executor_timeout_ms = 5000;
  VerifierRouting routing = VerifierRouting::defaults();
  RewardWeights weights = RewardWeights::defaults();
  CurriculumConfig curriculum;
  VoteConfig vote;
  AgenticWeights agentic;
  std::uint64_t rng_seed = 0;
  bool strict_ingest = true;

  std::filesystem::path knowledge_points;
  std::filesystem::path axioms;
  std::filesystem::path templates;
  std::filesystem::path fact_sets;
  std::filesystem::path format_rules;
  std::filesystem::path scenarios;
  std::filesystem::path console_dir;

  /// Paths in the file resolve against the file's directory.
  static ServiceConfig load(const std::filesystem::path& file);
  static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  /// FINFORGE_STORE_DIR, FINFORGE_LISTEN_HOST, FINFORGE_LISTEN_PORT,
  /// FINFORGE_JUDGE_ENDPOINT, FINFORGE_JUDGE_IN_FLIGHT,
  /// FINFORGE_EXECUTOR_ENDPOINT, FINFORGE_EXECUTOR_TIMEOUT_MS,
  /// FINFORGE_RNG_SEED, FINFORGE_STRICT_INGEST.
  void apply_env();
  /// Ranges, and that every configured data file exists.
  void validate() const;
};

/// Calls `fn(line_number, record)` for each non-blank line; a line that is
/// not JSON is Error(malformed) citing its number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const nlohmann::json&)>& fn);

struct IngestReport {
  std::size_t appended = 0;
  struct Rejection {
    std::size_t line = 0;
    std::string reason;
  };
  std::vector<Rejection> rejected;
};

struct Summary {
  std::map<VerificationLevel, std::size_t> levels;
  std::size_t pending_adjudications = 0;
  std::map<Stratum, std::size_t> strata;
  std::size_t mastery_pool = 0;
  std::size_t verdicts = 0;
  std::size_t trajectories = 0;
};

/// The pipeline behind both the HTTP service and the CLI. Reads run
/// concurrently; every mutation holds the writer lock and lands in the
/// store before the call returns.
class Engine {
 public:
  explicit Engine(ServiceConfig config, std::unique_ptr<JudgeClient> judge = nullptr,
                  std::unique_ptr<Executor> executor = nullptr, Clock clock = utc_now_iso);

  const ServiceConfig& config() const noexcept { return config_; }
  const AxiomRegistry& axioms() const noexcept { return axioms_; }

  /// mode: "axiom" {axiom_id?, hidden_symbol?, count?, seed?},
  /// "knowledge" {selector?, n_points, template_id, task_type, seed?},
  /// "evolve" {parent_id, strategy, rounds?, seed?}.
  std::vector<InstructionTask> generate(const std::string& mode, const nlohmann::json& params);

  /// level "L1" or "L2" (L2 needs responses). Returns
  /// {outcome: verified|escalated, record?|item?, task}.
  nlohmann::json verify(const TaskId& id, VerificationLevel level,
                        const std::vector<CandidateResponse>& responses = {});
  RewardBreakdown score(const TaskId& id, const std::string& response);
  /// Scores many (task, response) pairs through the parallel kernel.
  std::vector<nlohmann::json> score_many(const std::vector<std::pair<TaskId, std::string>>& jobs);
  AgenticScore score_trajectory(const Trajectory& traj);
  /// Runs a scripted episode and stores the trajectory with its score.
  std::pair<Trajectory, AgenticScore> simulate(const ScenarioId& id, std::vector<AgentAction> script);

  std::vector<AdjudicationItem> adjudication(std::optional<AdjudicationStatus> status) const;
  /// Returns {item, task}.
  nlohmann::json resolve(const ItemId& item, const nlohmann::json& gold_payload,
                         const std::string& expert_id);

  /// Records pass@k rollouts for a task and updates its streak.
  SampleStats record_rollouts(const TaskId& id, const std::vector<double>& rewards);
  /// Selects a batch from gold-bearing tasks; with `rollouts` the selected
  /// entries get rewards, zero-variance entries are pruned and stats update.
  Batch next_batch(Stratum stage, std::uint64_t seed,
                   const std::map<TaskId, std::vector<double>>& rollouts = {});

  IngestReport ingest(const std::filesystem::path& path, RecordKind kind, bool strict);

  Summary summary() const;
  nlohmann::json report() const;
  /// Canonical dump of the replayable state (tasks, verdicts, adjudication
  /// items, stats, trajectories).
  nlohmann::json state() const;

  InstructionTask task(const TaskId& id) const;
  std::vector<InstructionTask> tasks(std::optional<VerificationLevel> level = std::nullopt) const;
  const Scenario& scenario(const ScenarioId& id) const;

 private:
  void load_data();
  void replay();
  void apply(const StoreRecord& rec);
  TaskId next_task_id();
  InstructionTask& task_ref(const TaskId& id);
  TaskId add_task(InstructionTask task);
  void persist_gold(const InstructionTask& task);
  void persist_verdict(const VerificationRecord& rec);
  ScoringContext scoring_context(const InstructionTask& task) const;

  ServiceConfig config_;
  Clock clock_;
  std::unique_ptr<JudgeClient> judge_;
  std::unique_ptr<Executor> executor_;

  AxiomRegistry axioms_;
  KnowledgeBase kb_;
  TemplateRegistry templates_;
  std::map<std::string, GroundTruthFactSet> fact_sets_;
  std::vector<FormatRule> format_rules_;
  std::map<ScenarioId, Scenario> scenarios_;

  mutable std::shared_mutex mu_;
  std::unique_ptr<Store> store_;
  std::map<TaskId, InstructionTask> tasks_;
  std::vector<TaskId> task_order_;
  std::vector<nlohmann::json> verdicts_;
  std::map<std::pair<std::string, std::string>, std::size_t> verification_index_;
  AdjudicationQueue queue_;
  std::map<TaskId, SampleStats> stats_;
  std::vector<nlohmann::json> trajectories_;
  std::unique_ptr<Funnel> funnel_;
};

/// Maps error codes onto HTTP statuses: validation 4xx, faults 5xx.
int http_status(ErrorCode code);

}  // namespace finforge
