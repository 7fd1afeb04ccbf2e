#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "finforge/domain.hpp"
#include "finforge/judgeverify.hpp"
#include "finforge/kbgen.hpp"
#include "json.hpp"

namespace finforge {

/// One model's answer to a task, as collected for voting.
struct CandidateResponse {
  std::string source_model;
  std::string answer;
  std::string reasoning;

  /// Splits think-tagged output; the answer is the boxed value or else the
  /// last non-empty line of the body.
  static CandidateResponse from_output(std::string source_model, std::string_view output);
};

struct VerificationRecord {
  TaskId task_id;
  VerificationLevel level = VerificationLevel::L1;
  nlohmann::json evidence;
  std::string timestamp;
};

enum class AdjudicationStatus { pending, resolved };
template <>
struct EnumNames<AdjudicationStatus> {
  static constexpr std::string_view kind = "adjudication status";
  static constexpr std::array<std::string_view, 2> names{"pending", "resolved"};
};

struct CandidateAnswer {
  std::string source_model;
  std::string answer;
  bool operator==(const CandidateAnswer&) const = default;
};

struct Resolution {
  GoldAnswer gold;
  std::string expert_id;
  std::string resolved_at;
  bool operator==(const Resolution&) const = default;
};

struct AdjudicationItem {
  ItemId id;
  TaskId task_id;
  std::vector<CandidateAnswer> candidate_answers;
  std::string disagreement_summary;
  AdjudicationStatus status = AdjudicationStatus::pending;
  std::optional<Resolution> resolution;
  std::string created_at;
  bool operator==(const AdjudicationItem&) const = default;
};

struct VoteConfig {
  int min_responses = 5;
  double agree_fraction = 0.8;
  bool require_reasoning_consistency = true;

  /// min_responses >= 3, agree_fraction in (0.5, 1].
  void validate() const;
};

struct VoteGroup {
  std::string answer;  // normalized representative
  std::optional<double> number;
  std::vector<std::size_t> members;  // indices into the responses
};

struct VoteTally {
  std::vector<VoteGroup> groups;  // largest first, ties by first appearance
  std::size_t total = 0;
  double modal_share = 0.0;
};

/// Groups answers after normalization; numbers compare at relative 1e-6.
VoteTally tally_votes(std::span<const CandidateResponse> responses);

/// Result of a program run.
struct ExecResult {
  std::string stdout_text;
  int exit_status = 0;
};

class Executor {
 public:
  virtual ~Executor() = default;
  /// Throws Error(timeout) when the budget elapses and Error(unavailable)
  /// when the sandbox cannot run the program.
  virtual ExecResult run(const VerificationProgram& program) = 0;
};

struct ExecutorLimits {
  std::chrono::milliseconds timeout{5000};
  std::size_t max_output_bytes = 64u << 20;
};

/// Local child process: `python3 -c SOURCE` or `sh -c SOURCE`, inputs as
/// `key=value` lines on stdin. No network isolation is applied.
class SubprocessExecutor final : public Executor {
 public:
  explicit SubprocessExecutor(ExecutorLimits limits = {}) : limits_(limits) {}
  ExecResult run(const VerificationProgram& program) override;

 private:
  ExecutorLimits limits_;
};

/// Remote sandbox: POST `{program, inputs}` -> `{stdout, exit_status}`.
class HttpExecutor final : public Executor {
 public:
  HttpExecutor(std::string endpoint, ExecutorLimits limits = {});
  ExecResult run(const VerificationProgram& program) override;

 private:
  std::string host_;
  std::string path_;
  ExecutorLimits limits_;
};

/// Pending and resolved adjudication items. Readers run concurrently;
/// writers are serialized.
class AdjudicationQueue {
 public:
  explicit AdjudicationQueue(Clock clock = utc_now_iso) : clock_(std::move(clock)) {}

  AdjudicationItem open(const TaskId& task, std::vector<CandidateAnswer> candidates,
                        std::string summary);
  /// The resolution's gold is forced to method=human.
  AdjudicationItem resolve(const ItemId& id, GoldPayload decision, std::string expert_id);
  /// Re-installs a persisted item (store replay).
  void restore(AdjudicationItem item);

  AdjudicationItem get(const ItemId& id) const;
  std::optional<AdjudicationItem> pending_for(const TaskId& task) const;
  /// Oldest first.
  std::vector<AdjudicationItem> list(std::optional<AdjudicationStatus> status = std::nullopt) const;
  std::size_t pending_count() const;

 private:
  mutable std::shared_mutex mu_;
  Clock clock_;
  std::vector<AdjudicationItem> items_;
  std::map<ItemId, std::size_t> index_;
  std::size_t next_ = 1;
};

using L2Outcome = std::variant<VerificationRecord, AdjudicationItem>;

/// The L1 -> L2 -> L3 hierarchy over caller-owned tasks. Calls on the same
/// task id are serialized; distinct tasks proceed concurrently.
class Funnel {
 public:
  Funnel(const AxiomRegistry& axioms, AdjudicationQueue& queue, Clock clock = utc_now_iso)
      : axioms_(axioms), queue_(queue), clock_(std::move(clock)) {}

  /// Axiom recompute when the task carries a derivation, otherwise runs the
  /// attached program through `executor`.
  VerificationRecord verify_l1(InstructionTask& task, Executor* executor = nullptr);

  L2Outcome verify_l2(InstructionTask& task, std::span<const CandidateResponse> responses,
                      const VoteConfig& cfg, JudgeClient* judge);

  /// Installs the expert's decision and promotes the task to L3.
  VerificationRecord resolve_adjudication(const ItemId& item, GoldPayload decision,
                                          const std::string& expert_id, InstructionTask& task);

 private:
  std::shared_ptr<std::mutex> lock_for(const TaskId& id);

  const AxiomRegistry& axioms_;
  AdjudicationQueue& queue_;
  Clock clock_;
  std::mutex locks_mu_;
  std::map<TaskId, std::shared_ptr<std::mutex>> locks_;
};

/// Keeps the group when no two responses contradict each other: final
/// answers must agree, and numbers sharing a context key (the last two
/// content words before them) and unit must agree. Otherwise returns empty.
std::vector<CandidateResponse> semantic_consistency_filter(
    std::span<const CandidateResponse> candidates);

}  // namespace finforge
