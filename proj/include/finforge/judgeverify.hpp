#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "finforge/domain.hpp"
#include "finforge/ruleverify.hpp"
#include "json.hpp"

namespace finforge {

enum class JudgeKind { consistency, structure, style, reasoning_consistency };
template <>
struct EnumNames<JudgeKind> {
  static constexpr std::string_view kind = "judge kind";
  static constexpr std::array<std::string_view, 4> names{"consistency", "structure", "style",
                                                         "reasoning_consistency"};
};

struct JudgeRequest {
  JudgeKind kind = JudgeKind::consistency;
  std::string source;
  std::string output;
  std::optional<std::vector<std::string>> expected_themes;
  std::string request_id;

  /// Structure requests carry themes; no other kind does.
  void validate() const;
};

struct JudgeFlag {
  std::string kind;
  std::optional<Span> span;
  std::string note;
};

struct JudgeVerdict {
  double score = 0.0;
  std::vector<JudgeFlag> flags;
  std::string raw;
};

/// Strict verdict parsing: `{score: number in [0,1], flags: [...], raw?}`.
/// Anything else is Error(malformed).
JudgeVerdict parse_verdict(const nlohmann::json& body);
nlohmann::json verdict_to_json(const JudgeVerdict& verdict);
nlohmann::json request_to_json(const JudgeRequest& request);
JudgeRequest request_from_json(const nlohmann::json& body);

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  /// Throws Error(unavailable) or Error(timeout) when the judge cannot
  /// answer; never invents a score.
  virtual JudgeVerdict evaluate(const JudgeRequest& request) = 0;
};

/// Offline judge with fixed lexical heuristics.
///
///  consistency: each output sentence is a claim. A claim is supported when
///    one source sentence contains all of the claim's numeric mentions and
///    at least 60% of its content tokens. Score = supported / claims; an
///    unsupported claim carrying a number absent from the source is flagged
///    `hallucination`, otherwise `unsupported`. No claims scores 1.
///  structure: paragraphs are blank-line separated; a theme is covered when
///    some paragraph names it or one of its lexicon keywords. Score =
///    covered / themes; no paragraphs scores 0.
///  style: score = clamp(1 - 2 * filler_fraction - 0.1 * long_sentences),
///    where long sentences exceed 35 words. Empty text scores 0.
///  reasoning_consistency: Jaccard overlap of the numeric values the two
///    chains mention (1 when neither mentions any); below 0.5 is flagged
///    `contradiction`.
class MockJudge final : public JudgeClient {
 public:
  JudgeVerdict evaluate(const JudgeRequest& request) override;
};

/// Wraps another client and counts calls.
class CountingJudge final : public JudgeClient {
 public:
  explicit CountingJudge(JudgeClient& inner) : inner_(inner) {}
  JudgeVerdict evaluate(const JudgeRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }
  void reset() noexcept { calls_ = 0; }

 private:
  JudgeClient& inner_;
  std::atomic<std::size_t> calls_{0};
};

struct HttpJudgeOptions {
  std::string endpoint;  // e.g. http://127.0.0.1:9000/judge
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds timeout{10000};
  int max_retries = 2;
  std::chrono::milliseconds backoff{100};
};

/// POSTs `{kind, source, output, themes?, request_id}` and expects
/// `{score, flags[], raw}`. Retries reuse the request id so the remote side
/// can deduplicate.
class HttpJudgeClient final : public JudgeClient {
 public:
  explicit HttpJudgeClient(HttpJudgeOptions options);
  JudgeVerdict evaluate(const JudgeRequest& request) override;

 private:
  HttpJudgeOptions options_;
  std::string host_;
  std::string path_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::atomic<std::uint64_t> next_id_{1};
};

JudgeVerdict judge_consistency(const std::string& source, const std::string& output,
                               JudgeClient& client);
JudgeVerdict judge_structure(const std::string& output,
                             const std::vector<std::string>& expected_themes,
                             JudgeClient& client);
JudgeVerdict judge_style(const std::string& output, JudgeClient& client);

struct RouteEntry {
  double rule_weight = 1.0;
  double judge_weight = 0.0;
  std::set<JudgeKind> judge_kinds;
  bool operator==(const RouteEntry&) const = default;
};

class VerifierRouting {
 public:
  /// calculation and table_reasoning rule-only; intent and
  /// hallucination_detection judge-only (consistency); commenting and
  /// compliance blend both.
  static VerifierRouting defaults();

  void set(TaskType type, RouteEntry entry);
  const RouteEntry& at(TaskType type) const;
  const std::map<TaskType, RouteEntry>& entries() const noexcept { return routes_; }

 private:
  std::map<TaskType, RouteEntry> routes_;
};

/// Component weights inside each verifier; each side sums to 1 when used.
struct ComponentWeights {
  std::map<std::string, double> rule;
  std::map<std::string, double> judge;
  bool operator==(const ComponentWeights&) const = default;
};

class RewardWeights {
 public:
  static RewardWeights defaults();
  void set(TaskType type, ComponentWeights weights);
  const ComponentWeights& at(TaskType type) const;
  const std::map<TaskType, ComponentWeights>& entries() const noexcept { return weights_; }

 private:
  std::map<TaskType, ComponentWeights> weights_;
};

struct RewardBreakdown {
  TaskType task_type = TaskType::calculation;
  std::map<std::string, double> components;
  double scalar = 0.0;
  RouteEntry routing_used;
  ComponentWeights weights_used;
  std::string audit;

  /// Recombines the stored components with the stored weights.
  double recompute() const;
};

/// scalar = rule_weight * sum(rule components * weights) +
///          judge_weight * sum(judge components * weights).
RewardBreakdown aggregate_reward(TaskType task_type, const RuleVerdict& rule_verdict,
                                 const std::map<JudgeKind, JudgeVerdict>& judge_verdicts,
                                 const VerifierRouting& routing, const RewardWeights& weights);

struct ScoringContext {
  const VerifierRouting* routing = nullptr;
  const RewardWeights* weights = nullptr;
  std::vector<const FormatRule*> format_rules;
  const GroundTruthFactSet* facts = nullptr;
  JudgeClient* judge = nullptr;
  std::optional<Tolerance> tolerance;
};

/// Scores one model output for a task through the dual-verifier route.
/// The judge is consulted only when the route gives it weight.
RewardBreakdown score_response(const InstructionTask& task, std::string_view response,
                               const ScoringContext& ctx);

/// Maps an option letter answer on a multiple-choice task to the option
/// text; other answers pass through unchanged.
std::string resolve_choice(const InstructionTask& task, std::string_view answer);

}  // namespace finforge
