#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "finforge/domain.hpp"
#include "finforge/expr.hpp"
#include "json.hpp"

namespace finforge {

enum class ParamType { number, string, date, enumeration };
template <>
struct EnumNames<ParamType> {
  static constexpr std::string_view kind = "parameter type";
  static constexpr std::array<std::string_view, 4> names{"number", "string", "date", "enum"};
};

struct ToolParam {
  std::string name;
  ParamType type = ParamType::string;
  std::vector<std::string> values;  // allowed values for enum params
  bool required = true;
};

/// Result looked up by the values of `key_params` joined with '|'. Unknown
/// keys return `{"error": "not_found"}` as an ordinary record.
struct LookupBehavior {
  std::vector<std::string> key_params;
  std::map<std::string, nlohmann::json> table;
};

/// `{output_field: expression}` evaluated over the number params.
struct ArithmeticBehavior {
  std::string output_field = "value";
  expr::Expr expression;
};

using ToolBehavior = std::variant<LookupBehavior, ArithmeticBehavior>;

struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ToolParam> params;
  ToolBehavior behavior;
  bool strict_params = true;

  /// Unique param names; behavior keys/symbols refer to declared params.
  void validate() const;
};

struct ToolCall {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  bool operator==(const ToolCall&) const = default;
};

struct CallViolation {
  std::string param;
  std::string kind;  // missing, type, enum, unknown
  std::string note;
};

/// Throws Error(not_found) when the call names a different tool.
std::vector<CallViolation> validate_tool_call(const ToolCall& call, const ToolSpec& spec);
/// Looks the tool up by name first.
std::vector<CallViolation> validate_tool_call(const ToolCall& call, std::span<const ToolSpec> tools);

/// Result record for a call; invalid calls yield a structured error record.
nlohmann::json execute_tool(const ToolSpec& spec, const ToolCall& call);

struct HiddenFact {
  std::string value;
  std::vector<std::string> aliases;
};

struct Scenario {
  ScenarioId id;
  std::string user_goal;
  std::map<std::string, std::string> visible_facts;
  std::map<std::string, HiddenFact> hidden_facts;
  std::vector<ToolSpec> available_tools;
  GoldAnswer gold{NumericGold{}, GoldMethod::axiom};
  int optimal_steps = 1;
  bool requires_tool = true;
  /// Hidden fact keys the gold cannot be reached without.
  std::vector<std::string> gold_depends_on;
  /// Expected parameter values; a call matching none of the references for
  /// its tool counts as inaccurate.
  std::vector<ToolCall> reference_calls;

  void validate() const;
  const ToolSpec* tool(std::string_view name) const;
};

enum class StepKind { assistant_msg, tool_call, tool_result, user_reply };
template <>
struct EnumNames<StepKind> {
  static constexpr std::string_view kind = "step kind";
  static constexpr std::array<std::string_view, 4> names{"assistant_msg", "tool_call",
                                                         "tool_result", "user_reply"};
};

struct Step {
  StepKind kind = StepKind::assistant_msg;
  std::string text;                   // assistant_msg, user_reply
  ToolCall call;                      // tool_call
  nlohmann::json record;              // tool_result
  bool operator==(const Step&) const = default;
};

struct Trajectory {
  ScenarioId scenario;
  std::vector<Step> steps;
  std::optional<std::string> final_answer;
  bool truncated = false;

  /// Agent actions: messages, tool calls and the final answer.
  std::size_t agent_steps() const;
  std::size_t tool_calls() const;
  /// Every tool_result directly follows a tool_call.
  void validate() const;
  bool operator==(const Trajectory&) const = default;
};

struct AgentAction {
  enum class Kind { message, tool_call, final_answer };
  Kind kind = Kind::message;
  std::string text;
  ToolCall call;
};

class AgentDriver {
 public:
  virtual ~AgentDriver() = default;
  /// nullopt means the agent has nothing more to say.
  virtual std::optional<AgentAction> next(const Scenario& scenario, const Trajectory& so_far) = 0;
};

/// Replays a fixed action list. Text and string params may reference
/// `{{reply}}` (latest user reply, value part of its first line) and
/// `{{result.FIELD}}` (field of the latest tool result).
class ScriptedDriver final : public AgentDriver {
 public:
  explicit ScriptedDriver(std::vector<AgentAction> script) : script_(std::move(script)) {}
  std::optional<AgentAction> next(const Scenario& scenario, const Trajectory& so_far) override;

 private:
  std::vector<AgentAction> script_;
};

constexpr std::size_t kDefaultStepBudget = 16;

/// Runs one episode. Clarifying messages are answered from hidden facts
/// whose key or alias the message names (case-insensitive).
Trajectory run_scenario(const Scenario& scenario, AgentDriver& driver,
                        std::size_t step_budget = kDefaultStepBudget);

struct AgenticWeights {
  double answer = 0.25;
  double necessity = 0.25;
  double efficiency = 0.25;
  double params = 0.25;
  void validate() const;
};

struct AgenticScore {
  double answer_correct = 0.0;
  double tool_necessity = 0.0;
  double efficiency = 0.0;
  double param_accuracy = 0.0;
  double scalar = 0.0;
};

/// True when some assistant message before the final answer names the key
/// or one of its aliases.
bool clarified(const Trajectory& traj, const Scenario& scenario, const std::string& key);

/// param_accuracy counts distinct calls (identical name and params count
/// once), so repeating a call never changes it.
AgenticScore score_trajectory(const Trajectory& traj, const Scenario& scenario,
                              const AgenticWeights& weights = {});

}  // namespace finforge
