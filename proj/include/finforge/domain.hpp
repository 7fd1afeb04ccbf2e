#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "finforge/core.hpp"

namespace finforge {

enum class DomainTag { banking, securities, insurance, accounting, macroeconomics };
enum class TaskType {
  calculation,
  commenting,
  compliance,
  intent,
  table_reasoning,
  hallucination_detection,
};
enum class VerificationLevel { unverified, L1, L2, L3 };
enum class GoldMethod { axiom, code_exec, vote, human };
enum class GoldConfidence { deterministic, consensus, adjudicated };
enum class AnswerFormat { open, multiple_choice };
enum class EvolutionKind { add_constraint, add_distractor, transform_format };

template <>
struct EnumNames<DomainTag> {
  static constexpr std::string_view kind = "domain tag";
  static constexpr std::array<std::string_view, 5> names{
      "banking", "securities", "insurance", "accounting", "macroeconomics"};
};
template <>
struct EnumNames<TaskType> {
  static constexpr std::string_view kind = "task type";
  static constexpr std::array<std::string_view, 6> names{
      "calculation", "commenting",      "compliance",
      "intent",      "table_reasoning", "hallucination_detection"};
};
template <>
struct EnumNames<VerificationLevel> {
  static constexpr std::string_view kind = "verification level";
  static constexpr std::array<std::string_view, 4> names{"unverified", "L1", "L2",
                                                         "L3"};
};
template <>
struct EnumNames<GoldMethod> {
  static constexpr std::string_view kind = "gold method";
  static constexpr std::array<std::string_view, 4> names{"axiom", "code_exec", "vote",
                                                         "human"};
};
template <>
struct EnumNames<GoldConfidence> {
  static constexpr std::string_view kind = "gold confidence";
  static constexpr std::array<std::string_view, 3> names{"deterministic", "consensus",
                                                         "adjudicated"};
};
template <>
struct EnumNames<AnswerFormat> {
  static constexpr std::string_view kind = "answer format";
  static constexpr std::array<std::string_view, 2> names{"open", "multiple_choice"};
};
template <>
struct EnumNames<EvolutionKind> {
  static constexpr std::string_view kind = "evolution strategy";
  static constexpr std::array<std::string_view, 3> names{
      "add_constraint", "add_distractor", "transform_format"};
};

struct NumericGold {
  double value = 0.0;
  double tol_abs = 0.0;
  double tol_rel = 1e-4;
  bool operator==(const NumericGold&) const = default;
};
struct TextGold {
  std::string normalized;
  bool operator==(const TextGold&) const = default;
};
struct FactSetGold {
  std::string fact_set_id;
  bool operator==(const FactSetGold&) const = default;
};
struct RubricGold {
  std::string criteria;
  bool operator==(const RubricGold&) const = default;
};
using GoldPayload = std::variant<NumericGold, TextGold, FactSetGold, RubricGold>;

/// Reference answer. Confidence is derived from the method, so the
/// method/confidence pairing can never disagree.
class GoldAnswer {
 public:
  GoldAnswer(GoldPayload payload, GoldMethod method)
      : payload_(std::move(payload)), method_(method) {}

  const GoldPayload& payload() const noexcept { return payload_; }
  GoldMethod method() const noexcept { return method_; }
  GoldConfidence confidence() const noexcept;

  bool operator==(const GoldAnswer&) const = default;

 private:
  GoldPayload payload_;
  GoldMethod method_;
};

/// Text-gold constructor applying the standard answer normalization.
GoldAnswer text_gold(std::string_view answer, GoldMethod method);

struct EvolutionStrategy {
  EvolutionKind kind = EvolutionKind::add_distractor;
  std::map<std::string, std::string> params;
  bool operator==(const EvolutionStrategy&) const = default;
};

struct AxiomProvenance {
  AxiomId axiom;
  std::string hidden_symbol;
  std::map<std::string, double> sampled_values;
  bool operator==(const AxiomProvenance&) const = default;
};
struct KnowledgeProvenance {
  std::vector<PointId> points;
  TemplateId template_id;
  bool operator==(const KnowledgeProvenance&) const = default;
};
struct EvolvedProvenance {
  TaskId parent;
  EvolutionStrategy strategy;
  bool operator==(const EvolvedProvenance&) const = default;
};
using Provenance = std::variant<AxiomProvenance, KnowledgeProvenance, EvolvedProvenance>;

/// A program whose stdout is the answer to a calculation task.
struct VerificationProgram {
  std::string language = "python3";  // "python3" or "sh"
  std::string source;
  std::map<std::string, std::string> inputs;
  double output_scale = 1.0;
  double tol_abs = 0.0;
  double tol_rel = 1e-6;
  bool operator==(const VerificationProgram&) const = default;
};

struct InstructionTask {
  TaskId id;
  TaskType task_type = TaskType::calculation;
  DomainTag domain = DomainTag::accounting;
  std::string prompt;
  std::vector<std::string> context_docs;
  Provenance provenance;
  /// Axiom binding for tasks whose gold is re-derivable (axiom tasks and
  /// their distractor/constraint children).
  std::optional<AxiomProvenance> derivation;
  std::optional<GoldAnswer> gold;
  VerificationLevel level = VerificationLevel::unverified;
  AnswerFormat format = AnswerFormat::open;
  std::vector<std::string> options;
  std::vector<std::string> tags;
  std::vector<std::string> expected_themes;
  std::optional<VerificationProgram> program;

  /// Raises the verification level; throws on any attempt to lower it.
  void promote(VerificationLevel to);

  bool operator==(const InstructionTask&) const = default;
};

/// Equality ignoring the assigned id.
bool same_content(const InstructionTask& a, const InstructionTask& b);

}  // namespace finforge
